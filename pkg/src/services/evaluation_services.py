import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from src.core import CoverageError, InputError
from src.helpers.plot_helper import plot_cumulative, write_eval_table
from src.models import EpipolarTriangulation, EvalReport, GroundTruth, PLMap
from src.services.irls_services import evaluate_many
from src.services.synthetic_services import ground_truth_map

logger = logging.getLogger(__name__)

MIN_COVERAGE = 0.5
THRESHOLD_SLACK = 1e-9


def grid_samples(width: float, height: float, step: float) -> np.ndarray:
    xs = np.arange(0.5 * step, width, step)
    ys = np.arange(0.5 * step, height, step)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def cumulative_fractions(errors: np.ndarray, thresholds) -> np.ndarray:
    thresholds = np.asarray(thresholds, dtype=float)
    if len(errors) == 0:
        return np.zeros(len(thresholds))
    return np.array([np.mean(errors <= t + THRESHOLD_SLACK) for t in thresholds])


def evaluate(
    phi: PLMap,
    mesh: EpipolarTriangulation,
    gt: GroundTruth,
    thresholds: Sequence[float],
    step: float = 2.0,
) -> EvalReport:
    """Cumulative error of Phi against the dense ground truth, sampled every ``step`` pixels."""
    spec = gt.spec
    samples = grid_samples(spec.width, spec.height, step)
    truth, valid = ground_truth_map(spec, samples)
    samples, truth = samples[valid], truth[valid]
    if len(samples) == 0:
        raise InputError("No grid sample has a ground-truth correspondence")

    values, inside = evaluate_many(phi, mesh, samples)
    coverage = float(np.mean(inside))
    if coverage < MIN_COVERAGE:
        raise CoverageError(
            f"Map covers {coverage:.1%} of the evaluation samples", details={"coverage": coverage}
        )
    errors = np.full(len(samples), np.inf)
    errors[inside] = np.linalg.norm(values[inside] - truth[inside], axis=1)

    fractions = cumulative_fractions(errors, thresholds)
    within = float(cumulative_fractions(errors, [1.0])[0])
    logger.info("evaluation: %d samples, %.1f%% within 1 px", len(samples), 100.0 * within)
    return EvalReport(
        thresholds=np.asarray(thresholds, dtype=float),
        fractions=fractions,
        fraction_within_1px=within,
        n_samples=len(samples),
        coverage=coverage,
    )


def aggregate_reports(reports: Sequence[EvalReport]) -> EvalReport:
    """Per-threshold median over image pairs."""
    if not reports:
        raise InputError("Nothing to aggregate")
    thresholds = reports[0].thresholds
    if any(not np.array_equal(r.thresholds, thresholds) for r in reports):
        raise InputError("Reports use different thresholds")
    fractions = np.median(np.stack([r.fractions for r in reports]), axis=0) if len(thresholds) else np.zeros(0)
    return EvalReport(
        thresholds=thresholds,
        fractions=fractions,
        fraction_within_1px=float(np.median([r.fraction_within_1px for r in reports])),
        n_samples=int(sum(r.n_samples for r in reports)),
        coverage=float(np.median([r.coverage for r in reports])),
    )


def emit_plots(report: EvalReport, path: Path, label: Optional[str] = None) -> list[Path]:
    """Write ``<path>.svg`` (cumulative curve) and ``<path>.csv`` (raw table)."""
    path = Path(path)
    table = write_eval_table(report, path.with_suffix(".csv"))
    figure = plot_cumulative(report, path.with_suffix(".svg"), label=label or "EBD")
    return [figure, table]
