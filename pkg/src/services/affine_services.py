import numpy as np

from src.core import DegenerateMapError
from src.models import AffineDecomposition, DirectedLine, DistortionBound
from src.services.geometry_services import line_adapted_similarity

EPIPOLAR_TOLERANCE = 1e-9
A_FLOOR = 1e-9


def decompose(M, t=None) -> AffineDecomposition:
    M = np.asarray(M, dtype=float).reshape(2, 2)
    t = np.zeros(2) if t is None else np.asarray(t, dtype=float)
    return AffineDecomposition(
        a=0.5 * (M[0, 0] + M[1, 1]),
        b=0.5 * (M[0, 1] - M[1, 0]),
        c=0.5 * (M[0, 0] - M[1, 1]),
        d=0.5 * (M[0, 1] + M[1, 0]),
        t=t,
    )


def mu_of(f: AffineDecomposition) -> float:
    """||C|| / ||B||; below 1 exactly when f preserves orientation."""
    similarity = f.a**2 + f.b**2
    if similarity == 0.0:
        raise DegenerateMapError()
    return float(np.sqrt((f.c**2 + f.d**2) / similarity))


def conformal_distortion(f: AffineDecomposition) -> float:
    mu = mu_of(f)
    if mu >= 1.0:
        raise DegenerateMapError("Affine map does not preserve orientation", details={"mu": mu})
    return (1.0 + mu) / (1.0 - mu)


def check_bd(f: AffineDecomposition, bound: DistortionBound) -> bool:
    if f.a**2 + f.b**2 == 0.0:
        return False
    return mu_of(f) <= bound.mu


def to_line_frame(f: AffineDecomposition, l1: DirectedLine, l2: DirectedLine) -> AffineDecomposition:
    """Express f in the coordinates where l1 and l2 are the directed X-axes."""
    g1 = line_adapted_similarity(l1)
    g2 = line_adapted_similarity(l2)
    r1, r2 = g1.linear, g2.linear
    linear = r2.T @ f.linear @ r1
    t = r2.T @ (f.linear @ g1.translation + f.t - g2.translation)
    return decompose(linear, t)


def check_epipolar_bd(
    f: AffineDecomposition, l1: DirectedLine, l2: DirectedLine, bound: DistortionBound
) -> bool:
    """Second-order cone test for a bounded-distortion map taking l1 onto l2 in order."""
    g = to_line_frame(f, l1, l2)
    if abs(g.t[1]) > EPIPOLAR_TOLERANCE or abs(g.d - g.b) > EPIPOLAR_TOLERANCE:
        return False
    if g.a < A_FLOOR:
        return False
    mu = bound.mu
    return bool(np.sqrt((1.0 - mu**2) * g.b**2 + g.c**2) <= mu * g.a)
