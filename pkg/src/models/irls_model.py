from typing import Optional

from pydantic import Field, model_validator

from src.core import ConfigError
from src.models.base_model import BoolArray, FrozenModel, IndexArray, Vector
from src.models.program_model import PLMap


class IRLSConfig(FrozenModel):
    p: float = Field(0.001, gt=0.0, lt=2.0)
    eps_init: Optional[float] = Field(default=None, gt=0.0, description="None means the image diameter")
    eps_final: float = Field(1.0, gt=0.0)
    eps_factor: float = Field(0.5, gt=0.0, lt=1.0)
    mu: float = Field(0.6, gt=0.0, lt=1.0)
    inner_tol: float = Field(1e-6, gt=0.0)
    inner_max_iterations: int = Field(50, ge=1)
    solver_tol: float = Field(1e-8, gt=0.0)
    solver_max_iter: int = Field(200, ge=1)
    descent_slack: float = Field(1e-9, ge=0.0)
    smoothness: float = Field(1.0, ge=0.0, description="Bending weight relative to a match within epsilon")

    @model_validator(mode="after")
    def ordered_epsilons(self) -> "IRLSConfig":
        if self.eps_init is not None and self.eps_final > self.eps_init:
            raise ConfigError("eps_final must not exceed eps_init")
        return self

    @property
    def inlier_threshold(self) -> float:
        return 2.0 * self.eps_final


class EnergyRecord(FrozenModel):
    phase: int
    epsilon: float
    iteration: int
    energy: float


class SolveReport(FrozenModel):
    map: PLMap
    residuals: Vector = Field(..., description="||Phi(p_m) - q_m|| per kept pair, pixels")
    inliers: BoolArray
    kept: IndexArray = Field(..., description="Indices of the input pairs that located to a face")
    dropped: int = 0
    energy_trace: list[EnergyRecord] = Field(default_factory=list)
    eps_schedule: list[float] = Field(default_factory=list)
    unconstrained_rays: list[int] = Field(default_factory=list)
    threshold: float = 2.0
    orientation: int = 1

    def phase_energies(self, phase: int) -> list[float]:
        return [r.energy for r in self.energy_trace if r.phase == phase]
