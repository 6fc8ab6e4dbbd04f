import numpy as np
from pydantic import Field, field_validator

from src.core import InputError, InvalidFundamentalError
from src.models.base_model import FrozenModel, Matrix, Vec2, Vector

RANK_TOLERANCE = 1e-8


class FundamentalMatrix(FrozenModel):
    """3x3 rank-2 matrix, unit Frobenius norm, largest-magnitude entry positive."""

    entries: Matrix = Field(..., description="Row-major 3x3 matrix")

    @field_validator("entries", mode="after")
    @classmethod
    def normalize(cls, m: np.ndarray) -> np.ndarray:
        if m.shape != (3, 3):
            raise InputError(f"Fundamental matrix must be 3x3, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InputError("Fundamental matrix has non-finite entries")
        norm = np.linalg.norm(m)
        if norm == 0.0:
            raise InvalidFundamentalError("Fundamental matrix is zero")
        m = m / norm
        flat = m.reshape(-1)
        if flat[np.argmax(np.abs(flat))] < 0:
            m = -m
        sv = np.linalg.svd(m, compute_uv=False)
        if sv[2] >= RANK_TOLERANCE:
            raise InvalidFundamentalError(details={"smallest_singular_value": float(sv[2])})
        m = np.array(m)
        m.setflags(write=False)
        return m

    @classmethod
    def from_matrix(cls, m, enforce_rank: bool = False) -> "FundamentalMatrix":
        m = np.asarray(m, dtype=float).reshape(3, 3)
        if enforce_rank:
            if not np.all(np.isfinite(m)):
                raise InputError("Fundamental matrix has non-finite entries")
            u, s, vt = np.linalg.svd(m)
            s[2] = 0.0
            m = u @ np.diag(s) @ vt
        return cls(entries=m)

    @property
    def T(self) -> "FundamentalMatrix":
        return FundamentalMatrix(entries=self.entries.T)


class Epipole(FrozenModel):
    vector: Vector = Field(..., description="Unit homogeneous 3-vector")
    at_infinity: bool

    @property
    def point(self) -> np.ndarray:
        if self.at_infinity:
            raise InputError("Epipole is at infinity")
        return self.vector[:2] / self.vector[2]

    @property
    def direction(self) -> np.ndarray:
        d = self.vector[:2]
        return d / np.linalg.norm(d)


class DirectedLine(FrozenModel):
    point: Vec2
    direction: Vec2

    @field_validator("direction", mode="after")
    @classmethod
    def unit_direction(cls, d: np.ndarray) -> np.ndarray:
        n = np.hypot(d[0], d[1])
        if n == 0.0:
            raise ValueError("Line direction must be non-zero")
        d = d / n
        d.setflags(write=False)
        return d

    @property
    def normal(self) -> np.ndarray:
        return np.array([-self.direction[1], self.direction[0]])

    @property
    def homogeneous(self) -> np.ndarray:
        n = self.normal
        return np.array([n[0], n[1], -n @ self.point])


class Similarity2(FrozenModel):
    angle: float
    scale: float = Field(..., gt=0.0)
    translation: Vec2

    @property
    def linear(self) -> np.ndarray:
        c, s = np.cos(self.angle), np.sin(self.angle)
        return self.scale * np.array([[c, -s], [s, c]])

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.linear.T + self.translation

    def inverse(self) -> "Similarity2":
        inv_scale = 1.0 / self.scale
        c, s = np.cos(-self.angle), np.sin(-self.angle)
        rot = np.array([[c, -s], [s, c]])
        return Similarity2(
            angle=-self.angle,
            scale=inv_scale,
            translation=-(inv_scale * rot @ self.translation),
        )
