import logging

import numpy as np

from src.core import (
    DegeneratePairError,
    DegeneratePointError,
    GeometryError,
    InvalidFundamentalError,
    OrientationError,
)
from src.models import DirectedLine, Epipole, FundamentalMatrix, MatchSet, Similarity2
from src.models.geometry_model import RANK_TOLERANCE

logger = logging.getLogger(__name__)

INFINITY_TOLERANCE = 1e-9
SAMPSON_DENOMINATOR_FLOOR = 1e-18


def skew(v) -> np.ndarray:
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def epipole(F: FundamentalMatrix) -> Epipole:
    """Right null vector of F, unit norm, with a fixed sign convention."""
    _, sv, vt = np.linalg.svd(F.entries)
    if sv[2] >= RANK_TOLERANCE:
        raise InvalidFundamentalError(details={"smallest_singular_value": float(sv[2])})
    e = vt[2] / np.linalg.norm(vt[2])
    at_infinity = abs(e[2]) < INFINITY_TOLERANCE
    if at_infinity:
        if e[np.argmax(np.abs(e))] < 0:
            e = -e
    elif e[2] < 0:
        e = -e
    return Epipole(vector=e, at_infinity=at_infinity)


def left_epipole(F: FundamentalMatrix) -> Epipole:
    return epipole(F.T)


def _apply_rows(m: np.ndarray, x, y):
    return (
        m[0, 0] * x + m[0, 1] * y + m[0, 2],
        m[1, 0] * x + m[1, 1] * y + m[1, 2],
        m[2, 0] * x + m[2, 1] * y + m[2, 2],
    )


def epipolar_lines(F: FundamentalMatrix, points) -> np.ndarray:
    """Lines F(p, 1) in the second image, scaled so (l0, l1) has unit norm."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    l0, l1, l2 = _apply_rows(F.entries, pts[:, 0], pts[:, 1])
    lines = np.stack([l0, l1, l2], axis=1)
    norms = np.hypot(l0, l1)
    scale = np.linalg.norm(np.column_stack([pts, np.ones(len(pts))]), axis=1)
    bad = norms <= 1e-12 * scale
    if np.any(bad):
        raise DegeneratePointError(details={"points": pts[bad].tolist()})
    return lines / norms[:, None]


def epipolar_line(F: FundamentalMatrix, p) -> np.ndarray:
    return epipolar_lines(F, np.asarray(p, dtype=float).reshape(1, 2))[0]


def sampson_distances(F, sources, targets) -> np.ndarray:
    """Elementwise Sampson distance; pairs with a vanishing denominator get +inf.

    Written without matrix products so that one pair and a batch evaluate to
    identical floating-point values.
    """
    m = F.entries if isinstance(F, FundamentalMatrix) else np.asarray(F, dtype=float)
    p = np.asarray(sources, dtype=float).reshape(-1, 2)
    q = np.asarray(targets, dtype=float).reshape(-1, 2)
    fp0, fp1, fp2 = _apply_rows(m, p[:, 0], p[:, 1])
    ft0, ft1, _ = _apply_rows(m.T, q[:, 0], q[:, 1])
    numerator = (q[:, 0] * fp0 + q[:, 1] * fp1 + fp2) ** 2
    denominator = fp0**2 + fp1**2 + ft0**2 + ft1**2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = numerator / denominator
    return np.where(denominator > SAMPSON_DENOMINATOR_FLOOR, out, np.inf)


def sampson_distance(F: FundamentalMatrix, p, q) -> float:
    d = float(sampson_distances(F, p, q)[0])
    if not np.isfinite(d):
        raise DegeneratePairError(details={"p": np.asarray(p).tolist(), "q": np.asarray(q).tolist()})
    return d


def canonical_homography(F: FundamentalMatrix, ep: Epipole | None = None) -> np.ndarray:
    """Homography [e']x F + e' v' induced by the reference plane of the canonical pair.

    v = (0, 0, 1) for a finite epipole (whose third coordinate is kept positive);
    v = e when the epipole is at infinity, where (0, 0, 1) would put the plane
    through the second camera centre.
    """
    ep = ep or epipole(F)
    e_left = left_epipole(F).vector
    v = ep.vector if ep.at_infinity else np.array([0.0, 0.0, 1.0])
    return skew(e_left) @ F.entries + np.outer(e_left, v)


def _orient(
    F: FundamentalMatrix, ep: Epipole, H: np.ndarray, l1: DirectedLine, orientation: int
) -> tuple[DirectedLine, DirectedLine]:
    if ep.at_infinity:
        d1, d2 = l1.direction, ep.direction
        if abs(d1[0] * d2[1] - d1[1] * d2[0]) > 1e-6:
            raise GeometryError("Line is not parallel to the epipolar pencil")
    else:
        offset = ep.point - l1.point
        if abs(offset @ l1.normal) > 1.0:
            raise GeometryError("Line does not pass through the epipole")

    p_a = l1.point
    if not ep.at_infinity and np.linalg.norm(p_a - ep.point) < 1e-6:
        p_a = p_a + l1.direction
    p_b = p_a + l1.direction

    line2 = epipolar_line(F, p_a)
    qa = H @ np.array([p_a[0], p_a[1], 1.0])
    qb = H @ np.array([p_b[0], p_b[1], 1.0])
    if (
        abs(qa[2]) <= 1e-12 * np.linalg.norm(qa)
        or abs(qb[2]) <= 1e-12 * np.linalg.norm(qb)
        or np.sign(qa[2]) != np.sign(qb[2])
    ):
        raise OrientationError(details={"point": p_a.tolist()})
    qa = qa[:2] / qa[2]
    qb = qb[:2] / qb[2]

    direction = np.array([-line2[1], line2[0]])
    along = (qb - qa) @ direction
    if abs(along) <= 1e-12 * (1.0 + np.linalg.norm(qa)):
        raise OrientationError(details={"point": p_a.tolist()})
    if along < 0:
        direction = -direction
    direction = direction * (1 if orientation >= 0 else -1)
    foot = qa - (line2[0] * qa[0] + line2[1] * qa[1] + line2[2]) * line2[:2]
    return l1, DirectedLine(point=foot, direction=direction)


def orient_epipolar_pair(
    F: FundamentalMatrix, l1: DirectedLine, orientation: int = 1
) -> tuple[DirectedLine, DirectedLine]:
    """Direct the epipolar line of l1 in the second image.

    Two ordered points of l1 are transferred through the canonical plane
    homography; l2 is directed along their transferred order. ``orientation=-1``
    reverses the result (see resolve_orientation).
    """
    ep = epipole(F)
    return _orient(F, ep, canonical_homography(F, ep), l1, orientation)


class LineOrienter:
    """orient_epipolar_pair with the epipole and plane homography computed once."""

    def __init__(self, F: FundamentalMatrix, orientation: int = 1):
        self.F = F
        self.orientation = orientation
        self.epipole = epipole(F)
        self.homography = canonical_homography(F, self.epipole)

    def __call__(self, l1: DirectedLine) -> tuple[DirectedLine, DirectedLine]:
        return _orient(self.F, self.epipole, self.homography, l1, self.orientation)


def resolve_orientation(F: FundamentalMatrix, matches: MatchSet) -> int:
    """Sign that aligns the canonical orientation with the observed scene.

    Votes with the oriented epipolar constraint (e x p) . (F' q) over the
    candidate pairs; true correspondences in front of both cameras agree in sign.
    """
    if len(matches) == 0:
        return 1
    e = epipole(F).vector
    p = np.column_stack([matches.sources, np.ones(len(matches))])
    q = np.column_stack([matches.targets, np.ones(len(matches))])
    lines1 = np.cross(e, p)
    lines2 = q @ F.entries
    votes = np.einsum("ij,ij->i", lines1, lines2)
    scale = np.linalg.norm(lines1, axis=1) * np.linalg.norm(lines2, axis=1)
    decisive = np.abs(votes) > 1e-9 * scale
    if not np.any(decisive):
        logger.warning("Orientation vote undecided; keeping the canonical orientation")
        return 1
    positive = int(np.count_nonzero(votes[decisive] > 0))
    negative = int(np.count_nonzero(votes[decisive] < 0))
    logger.debug("orientation vote: %d positive, %d negative", positive, negative)
    return 1 if positive >= negative else -1


def line_adapted_similarity(line: DirectedLine) -> Similarity2:
    """Unit-scale similarity taking the directed X-axis onto ``line``."""
    angle = float(np.arctan2(line.direction[1], line.direction[0]))
    return Similarity2(angle=angle, scale=1.0, translation=line.point)


def fundamental_from_cameras(P1, P2) -> FundamentalMatrix:
    P1 = np.asarray(P1, dtype=float)
    P2 = np.asarray(P2, dtype=float)
    _, _, vt = np.linalg.svd(P1)
    center = vt[-1]
    e_left = P2 @ center
    F = skew(e_left) @ P2 @ np.linalg.pinv(P1)
    return FundamentalMatrix.from_matrix(F, enforce_rank=True)
