import numpy as np
from pydantic import Field

from src.models.base_model import FrozenModel, Vec2


class AffineDecomposition(FrozenModel):
    """Similarity / anti-similarity split of a planar affine map.

    The linear part is ``[[a + c, b + d], [d - b, a - c]]``; ``(a, b)`` span the
    similarity part B and ``(c, d)`` the anti-similarity part C.
    """

    a: float
    b: float
    c: float
    d: float
    t: Vec2 = Field(default_factory=lambda: np.zeros(2))

    @property
    def linear(self) -> np.ndarray:
        return np.array(
            [[self.a + self.c, self.b + self.d], [self.d - self.b, self.a - self.c]]
        )

    @property
    def similarity_norm_sq(self) -> float:
        return 2.0 * (self.a**2 + self.b**2)

    @property
    def anti_similarity_norm_sq(self) -> float:
        return 2.0 * (self.c**2 + self.d**2)

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.linear.T + self.t


class DistortionBound(FrozenModel):
    mu: float = Field(..., gt=0.0, lt=1.0)
