from typing import Any

import numpy as np
from pydantic import Field, field_validator
from scipy import sparse

from src.models.base_model import FrozenModel, IndexArray, Matrix, Points, Vec2, Vector


def _as_csr(v: Any) -> sparse.csr_matrix:
    return sparse.csr_matrix(v, dtype=float)


class PLMap(FrozenModel):
    """Target positions of the triangulation vertices."""

    targets: Points


class MatchTerm(FrozenModel):
    face: int = Field(..., ge=0)
    weights: Vector = Field(..., description="Barycentric weights (c_i, c_j, c_k)")
    target: Vec2
    weight: float = Field(..., gt=0.0)

    @field_validator("weights", mode="after")
    @classmethod
    def three_weights(cls, w: np.ndarray) -> np.ndarray:
        if w.shape != (3,) or not np.all(np.isfinite(w)):
            raise ValueError("Barycentric weights must be a finite 3-vector")
        return w


class LinearRows(FrozenModel):
    matrix: Any
    rhs: Vector

    @field_validator("matrix", mode="before")
    @classmethod
    def to_csr(cls, m):
        return _as_csr(m)

    @property
    def n_rows(self) -> int:
        return int(self.matrix.shape[0])


class ConeRows(FrozenModel):
    """Per-face affine coefficients in line-adapted coordinates.

    Row f of ``a``..``d`` holds the coefficients of that quantity over the six
    unknowns listed in ``face_vars[f]``; the cone is
    ``sqrt((1 - mu^2) b^2 + c^2) <= mu a``.
    """

    face_vars: IndexArray
    a: Matrix
    b: Matrix
    c: Matrix
    d: Matrix
    target_points: Points
    target_directions: Points

    @property
    def n_rows(self) -> int:
        return int(self.face_vars.shape[0])


class EBDProgramSpec(FrozenModel):
    """Quadratic objective 0.5 x'Px + q'x + r over the flattened targets."""

    n: int
    objective_matrix: Any
    objective_linear: Vector
    objective_constant: float
    equalities: LinearRows
    cones: ConeRows
    mu: float = Field(..., gt=0.0, lt=1.0)
    a_floor: float = 1e-9

    @field_validator("objective_matrix", mode="before")
    @classmethod
    def to_csr(cls, m):
        return _as_csr(m)
