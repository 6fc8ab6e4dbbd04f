import logging

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from src.core import EstimationError, InputError
from src.models import FeatureSet, FundamentalEstimate, FundamentalMatrix, MatchParams, MatchSet, RansacParams
from src.services.geometry_services import sampson_distances

logger = logging.getLogger(__name__)

SAMPLE_SIZE = 8
REFIT_ROUNDS = 3
# Planar consensus: share of inliers a single homography explains within this transfer error.
HOMOGRAPHY_TRANSFER = 2.0
HOMOGRAPHY_SHARE = 0.9


def _check_features(A: FeatureSet, B: FeatureSet) -> None:
    if len(A) == 0 or len(B) == 0:
        raise InputError("Feature sets must not be empty", details={"a": len(A), "b": len(B)})
    if A.dim != B.dim:
        raise InputError("Descriptor dimensions differ", details={"a": A.dim, "b": B.dim})


def epipolar_match(A: FeatureSet, B: FeatureSet, F: FundamentalMatrix, params: MatchParams) -> MatchSet:
    """Nearest descriptor among the keypoints of B inside each keypoint's epipolar band.

    A pair is kept when the second-nearest in-band distance is at least
    ``ratio`` times the nearest; a lone in-band candidate is always kept.
    """
    _check_features(A, B)
    sources, targets = [], []
    for point, descriptor in zip(A.keypoints, A.descriptors):
        band = np.flatnonzero(sampson_distances(F, point, B.keypoints) < params.delta)
        if len(band) == 0:
            continue
        distances = cdist(descriptor[None, :], B.descriptors[band])[0]
        order = np.argsort(distances, kind="stable")
        best = distances[order[0]]
        second = distances[order[1]] if len(order) > 1 else np.inf
        if second >= params.ratio * best:
            sources.append(point)
            targets.append(B.keypoints[band[order[0]]])
    logger.info("epipolar matching: %d of %d keypoints matched", len(sources), len(A))
    return MatchSet(sources=np.reshape(sources, (-1, 2)), targets=np.reshape(targets, (-1, 2)))


def ratio_match(A: FeatureSet, B: FeatureSet, ratio: float = 2.0) -> MatchSet:
    """Unrestricted nearest-neighbour matching with the same ratio rule."""
    _check_features(A, B)
    k = min(2, len(B))
    distances, indices = cKDTree(B.descriptors).query(A.descriptors, k=k)
    distances = np.reshape(distances, (len(A), k))
    indices = np.reshape(indices, (len(A), k))
    second = distances[:, 1] if k == 2 else np.full(len(A), np.inf)
    accept = second >= ratio * distances[:, 0]
    logger.info("ratio matching: %d of %d keypoints matched", int(accept.sum()), len(A))
    return MatchSet(sources=A.keypoints[accept], targets=B.keypoints[indices[accept, 0]])


def normalize_points(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Translate to the centroid and scale to mean distance sqrt(2)."""
    centroid = points.mean(axis=0)
    spread = np.mean(np.linalg.norm(points - centroid, axis=1))
    scale = np.sqrt(2.0) / spread if spread > 0 else 1.0
    T = np.array([[scale, 0.0, -scale * centroid[0]], [0.0, scale, -scale * centroid[1]], [0.0, 0.0, 1.0]])
    return (points - centroid) * scale, T


def eight_point(sources, targets) -> np.ndarray:
    """Normalized eight-point estimate with the rank-2 constraint enforced."""
    p, T1 = normalize_points(np.asarray(sources, dtype=float))
    q, T2 = normalize_points(np.asarray(targets, dtype=float))
    x1, y1 = p[:, 0], p[:, 1]
    x2, y2 = q[:, 0], q[:, 1]
    design = np.column_stack([x2 * x1, x2 * y1, x2, y2 * x1, y2 * y1, y2, x1, y1, np.ones(len(p))])
    _, _, vt = np.linalg.svd(design)
    F = vt[-1].reshape(3, 3)
    u, s, vt = np.linalg.svd(F)
    s[2] = 0.0
    F = T2.T @ (u @ np.diag(s) @ vt) @ T1
    return F / np.linalg.norm(F)


def fit_homography(sources, targets) -> np.ndarray:
    p, T1 = normalize_points(np.asarray(sources, dtype=float))
    q, T2 = normalize_points(np.asarray(targets, dtype=float))
    rows = []
    for (x, y), (u, v) in zip(p, q):
        rows.append([-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u])
        rows.append([0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v])
    _, _, vt = np.linalg.svd(np.asarray(rows))
    H = np.linalg.inv(T2) @ vt[-1].reshape(3, 3) @ T1
    return H / H[2, 2] if abs(H[2, 2]) > 1e-12 else H


def homography_degenerate(sources, targets) -> bool:
    if len(sources) < 4:
        return False
    H = fit_homography(sources, targets)
    mapped = np.column_stack([sources, np.ones(len(sources))]) @ H.T
    with np.errstate(divide="ignore", invalid="ignore"):
        mapped = mapped[:, :2] / mapped[:, 2:3]
    transfer = np.linalg.norm(mapped - targets, axis=1)
    return bool(np.mean(transfer < HOMOGRAPHY_TRANSFER) >= HOMOGRAPHY_SHARE)


def estimate_fundamental(matches: MatchSet, ransac: RansacParams) -> FundamentalEstimate:
    """RANSAC over eight-point samples, then refit on the consensus."""
    n = len(matches)
    if n < SAMPLE_SIZE:
        raise InputError(f"Need at least {SAMPLE_SIZE} matches to estimate F, got {n}")
    p, q = matches.sources, matches.targets
    rng = np.random.default_rng(ransac.seed)
    samples = np.stack([rng.choice(n, SAMPLE_SIZE, replace=False) for _ in range(ransac.iterations)])

    best = np.zeros(n, dtype=bool)
    for sample in samples:
        try:
            F = eight_point(p[sample], q[sample])
        except np.linalg.LinAlgError:
            continue
        inliers = sampson_distances(F, p, q) < ransac.threshold
        if inliers.sum() > best.sum():
            best = inliers
    if best.sum() < SAMPLE_SIZE:
        raise EstimationError("RANSAC consensus too small", details={"consensus": int(best.sum())})

    consensus = best
    for _ in range(REFIT_ROUNDS):
        F = eight_point(p[consensus], q[consensus])
        refit = sampson_distances(F, p, q) < ransac.threshold
        if refit.sum() < SAMPLE_SIZE or np.array_equal(refit, consensus):
            break
        consensus = refit
    F = eight_point(p[consensus], q[consensus])

    degenerate = homography_degenerate(p[consensus], q[consensus])
    if degenerate:
        logger.warning("RANSAC consensus is explained by a single homography; F is unreliable")
    logger.info("RANSAC: %d of %d matches in consensus", int(consensus.sum()), n)
    return FundamentalEstimate(
        fundamental=FundamentalMatrix.from_matrix(F, enforce_rank=True),
        inliers=consensus,
        degenerate=degenerate,
    )
