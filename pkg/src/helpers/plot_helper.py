from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from src.core import InputError  # noqa: E402
from src.helpers.io_helper import atomic_path, atomic_write_text, read_text  # noqa: E402
from src.models import BaselineStep, EvalReport  # noqa: E402

TABLE_HEADER = "threshold,fraction"
SWEEP_HEADER = "factor,baseline,fraction_within_1px,scenes"


def write_eval_table(report: EvalReport, path: Path) -> Path:
    rows = [TABLE_HEADER] + [f"{t:.17g},{f:.17g}" for t, f in zip(report.thresholds, report.fractions)]
    return atomic_write_text(path, "\n".join(rows) + "\n")


def read_eval_table(path: Path) -> tuple[np.ndarray, np.ndarray]:
    lines = [line for line in read_text(path).splitlines() if line.strip()]
    if not lines or lines[0].strip() != TABLE_HEADER:
        raise InputError(f"{path}: missing '{TABLE_HEADER}' header")
    try:
        rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:]]).reshape(-1, 2)
    except ValueError as exc:
        raise InputError(f"{path}: malformed table") from exc
    return rows[:, 0], rows[:, 1]


def plot_cumulative(report: EvalReport, path: Path, label: str = "EBD") -> Path:
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    try:
        ax.plot(report.thresholds, 100.0 * np.asarray(report.fractions), marker="o", label=label)
        ax.set_xlabel("error threshold (pixels)")
        ax.set_ylabel("pixels mapped within threshold (%)")
        ax.set_ylim(0.0, 100.0)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="lower right")
        with atomic_path(path) as tmp:
            fig.savefig(tmp, format="svg")
    finally:
        plt.close(fig)
    return Path(path)


def write_sweep_table(steps: Sequence[BaselineStep], path: Path) -> Path:
    rows = [SWEEP_HEADER] + [
        f"{s.factor:.17g},{s.baseline:.17g},{s.fraction_within_1px:.17g},{s.n_scenes}" for s in steps
    ]
    return atomic_write_text(path, "\n".join(rows) + "\n")


def plot_baseline_sweep(steps: Sequence[BaselineStep], path: Path, label: str = "EBD") -> Path:
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    try:
        ax.plot([s.baseline for s in steps], [100.0 * s.fraction_within_1px for s in steps], marker="o", label=label)
        ax.set_xlabel("baseline length")
        ax.set_ylabel("median pixels within 1 px (%)")
        ax.set_ylim(0.0, 100.0)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="lower left")
        with atomic_path(path) as tmp:
            fig.savefig(tmp, format="svg")
    finally:
        plt.close(fig)
    return Path(path)
