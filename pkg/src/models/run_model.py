from pathlib import Path
from typing import Optional

from pydantic import Field

from src.config import Settings
from src.models.base_model import FrozenModel


class RunConfig(FrozenModel):
    subcommand: str
    out: Optional[Path] = None
    mu: float = Field(0.6, gt=0.0, lt=1.0)
    eta: float = Field(25.0, gt=0.0)
    delta: float = Field(5.0, gt=0.0)
    ratio: float = Field(2.0, gt=1.0)
    p: float = Field(0.001, gt=0.0, lt=2.0)
    eps_final: float = Field(1.0, gt=0.0)
    eps_factor: float = Field(0.5, gt=0.0, lt=1.0)
    inner_tol: float = Field(1e-6, gt=0.0)
    inner_max_iterations: int = Field(50, ge=1)
    tol: float = Field(1e-8, gt=0.0)
    max_iter: int = Field(200, ge=1)
    seed: int = 0
    jobs: int = Field(1, ge=1)
    ransac_iterations: int = Field(2000, ge=1)
    ransac_threshold: float = Field(1.0, gt=0.0)
    eval_step: float = Field(2.0, gt=0.0)
    thresholds: list[float] = Field(default_factory=lambda: Settings().thresholds)
    smoothness: float = Field(1.0, ge=0.0)
    estimate_f: bool = False
    baseline_factors: list[float] = Field(default_factory=lambda: Settings().baseline_factors)

    @classmethod
    def from_settings(cls, settings: Settings, subcommand: str, **overrides) -> "RunConfig":
        values = settings.model_dump(exclude={"log_level", "eval_thresholds", "baselines"})
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(subcommand=subcommand, **values)
