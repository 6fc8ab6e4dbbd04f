from pathlib import Path
from typing import Annotated, Optional

import typer

from src.config import get_settings
from src.models import RunConfig


def get_run_config(subcommand: str, **overrides) -> RunConfig:
    """Settings (env / .env) overridden by the flags that were actually given."""
    return RunConfig.from_settings(get_settings(), subcommand, **overrides)


def parse_numbers(text: Optional[str]) -> Optional[list[float]]:
    if text is None:
        return None
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise typer.BadParameter(f"not a comma-separated list of numbers: {text}") from exc


# Reusable option aliases for command signatures
OutDir = Annotated[Path, typer.Option("--out", help="Output directory")]
Mu = Annotated[Optional[float], typer.Option("--mu", help="Distortion bound, 0 < mu < 1")]
Eta = Annotated[Optional[float], typer.Option("--eta", help="Triangulation spacing in pixels")]
Delta = Annotated[Optional[float], typer.Option("--delta", help="Sampson band for matching")]
Ratio = Annotated[Optional[float], typer.Option("--ratio", help="Descriptor ratio test factor")]
Power = Annotated[Optional[float], typer.Option("--p", help="Robust exponent, 0 < p < 2")]
EpsFinal = Annotated[Optional[float], typer.Option("--eps-final", help="Last epsilon in pixels")]
Tol = Annotated[Optional[float], typer.Option("--tol", help="Conic solver tolerance")]
Seed = Annotated[Optional[int], typer.Option("--seed", help="Random seed")]
Jobs = Annotated[Optional[int], typer.Option("--jobs", help="Worker processes")]
Step = Annotated[Optional[float], typer.Option("--step", help="Evaluation grid step in pixels")]
Thresholds = Annotated[Optional[str], typer.Option("--thresholds", help="Comma-separated error thresholds")]
Reverse = Annotated[bool, typer.Option("--reverse", help="Map image J to image I (swaps inputs, uses F transposed)")]
EstimateF = Annotated[bool, typer.Option("--estimate-f", help="Estimate F by RANSAC instead of using the true F")]
Smoothness = Annotated[Optional[float], typer.Option("--smoothness", help="Bending weight, 0 turns it off")]
