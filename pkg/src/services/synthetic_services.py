import logging

import numpy as np
import shapely

from src.core import InputError
from src.models import FeatureSet, GroundTruth, MatchSet, Patch, SceneSpec
from src.services.geometry_services import epipolar_lines, fundamental_from_cameras, sampson_distances

logger = logging.getLogger(__name__)

FOCAL = 500.0
FOLD_X = 0.77
FOLD_DEPTH = 5.0
MAX_SAMPLING_ROUNDS = 50
OUTLIER_TRIES = 100


def intrinsics(width: float, height: float, focal: float = FOCAL) -> np.ndarray:
    return np.array([[focal, 0.0, width / 2.0], [0.0, focal, height / 2.0], [0.0, 0.0, 1.0]])


def camera(K: np.ndarray, R: np.ndarray, center) -> np.ndarray:
    center = np.asarray(center, dtype=float)
    return K @ np.column_stack([R, -R @ center])


def rotation_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _strip(x0: float, x1: float, height: float) -> list[list[float]]:
    return [[x0, 0.0], [x1, 0.0], [x1, height], [x0, height]]


def default_scene(seed: int = 0, **overrides) -> SceneSpec:
    """Three planes folded along two vertical lines, seen by a camera moved right and turned back.

    The centre plane faces camera 1 at depth 5; the side planes recede at 30
    degrees so the ground-truth map stays continuous across the folds. The
    epipole lies far to the right of image I.
    """
    width, height = 461.0, 308.0
    K = intrinsics(width, height)
    slope = np.tan(np.radians(30.0))
    fold = K[0, 2] + FOCAL * FOLD_X / FOLD_DEPTH
    left_fold = 2.0 * K[0, 2] - fold
    patches = [
        Patch(plane=[slope, 0.0, 1.0, FOLD_X * slope - FOLD_DEPTH], polygon=_strip(0.0, left_fold, height), n_points=95),
        Patch(plane=[0.0, 0.0, 1.0, -FOLD_DEPTH], polygon=_strip(left_fold, fold, height), n_points=96),
        Patch(plane=[-slope, 0.0, 1.0, FOLD_X * slope - FOLD_DEPTH], polygon=_strip(fold, width, height), n_points=95),
    ]
    values = dict(
        width=width,
        height=height,
        width2=width,
        height2=height,
        camera1=camera(K, np.eye(3), np.zeros(3)),
        camera2=camera(K, rotation_y(np.radians(9.0)), [0.8, 0.05, 0.2]),
        patches=patches,
        seed=seed,
    )
    values.update(overrides)
    return SceneSpec(**values)


def fronto_parallel_scene(seed: int = 0, **overrides) -> SceneSpec:
    """One plane parallel to both image planes; the induced map is a translation."""
    width, height = 461.0, 308.0
    K = intrinsics(width, height)
    values = dict(
        width=width,
        height=height,
        width2=width,
        height2=height,
        camera1=camera(K, np.eye(3), np.zeros(3)),
        camera2=camera(K, np.eye(3), [0.8, 0.1, 0.0]),
        patches=[Patch(plane=[0.0, 0.0, 1.0, -FOLD_DEPTH], polygon=_strip(0.0, width, height), n_points=200)],
        seed=seed,
    )
    values.update(overrides)
    return SceneSpec(**values)


def depth(P: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Signed depth of finite points X (n, 3) in front of camera P."""
    M = P[:, :3]
    w = X @ P[2, :3] + P[2, 3]
    return np.sign(np.linalg.det(M)) * w / np.linalg.norm(M[2])


def project(P: np.ndarray, X: np.ndarray) -> np.ndarray:
    h = np.column_stack([X, np.ones(len(X))]) @ P.T
    return h[:, :2] / h[:, 2:3]


def backproject(P: np.ndarray, plane, points) -> np.ndarray:
    """Intersect the camera rays through ``points`` with ``plane``."""
    plane = np.asarray(plane, dtype=float)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    M = P[:, :3]
    center = -np.linalg.solve(M, P[:, 3])
    rays = np.linalg.solve(M, np.column_stack([pts, np.ones(len(pts))]).T).T
    along = rays @ plane[:3]
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = -(plane[:3] @ center + plane[3]) / along
    return center + lam[:, None] * rays


def transfer_through_plane(spec: SceneSpec, patch: int, points) -> tuple[np.ndarray, np.ndarray]:
    """Image-J position of points of image I lying on a patch plane, and a visibility mask."""
    X = backproject(spec.camera1, spec.patches[patch].plane, points)
    finite = np.all(np.isfinite(X), axis=1)
    q = np.full((len(X), 2), np.nan)
    visible = np.zeros(len(X), dtype=bool)
    if np.any(finite):
        Xf = X[finite]
        front = (depth(spec.camera1, Xf) > 0) & (depth(spec.camera2, Xf) > 0)
        q[finite] = project(spec.camera2, Xf)
        visible[finite] = front
    qx, qy = q[:, 0], q[:, 1]
    with np.errstate(invalid="ignore"):
        inside = (qx >= 0) & (qx <= spec.width2) & (qy >= 0) & (qy <= spec.height2)
    return q, visible & inside


def patch_index(spec: SceneSpec, points) -> np.ndarray:
    """First patch whose polygon contains each point, -1 when none does."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.full(len(pts), -1, dtype=np.int64)
    for n, patch in enumerate(spec.patches):
        hit = shapely.contains_xy(shapely.Polygon(patch.polygon), pts[:, 0], pts[:, 1]) & (out < 0)
        out[hit] = n
    return out


def ground_truth_map(spec: SceneSpec, points) -> tuple[np.ndarray, np.ndarray]:
    """Dense correspondence p -> q and a mask of the points that have one."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    owner = patch_index(spec, pts)
    q = np.full((len(pts), 2), np.nan)
    valid = np.zeros(len(pts), dtype=bool)
    for n in range(len(spec.patches)):
        mine = owner == n
        if np.any(mine):
            q[mine], valid[mine] = transfer_through_plane(spec, n, pts[mine])
    return q, valid


def _check_front_facing(spec: SceneSpec) -> None:
    for n, patch in enumerate(spec.patches):
        X = backproject(spec.camera1, patch.plane, patch.polygon)
        if not np.all(np.isfinite(X)):
            raise InputError("Patch plane contains a camera ray", details={"patch": n})
        if np.any(depth(spec.camera1, X) <= 0) or np.any(depth(spec.camera2, X) <= 0):
            raise InputError("Patch lies behind a camera", details={"patch": n})


def _sample_patch(rng: np.random.Generator, spec: SceneSpec, n: int) -> tuple[np.ndarray, np.ndarray]:
    patch = spec.patches[n]
    polygon = shapely.Polygon(patch.polygon)
    lo, hi = patch.polygon.min(axis=0), patch.polygon.max(axis=0)
    sources, targets = np.zeros((0, 2)), np.zeros((0, 2))
    for _ in range(MAX_SAMPLING_ROUNDS):
        if len(sources) >= patch.n_points:
            break
        draw = rng.uniform(lo, hi, size=(2 * patch.n_points + 8, 2))
        draw = draw[shapely.contains_xy(polygon, draw[:, 0], draw[:, 1])]
        q, visible = transfer_through_plane(spec, n, draw)
        sources = np.vstack([sources, draw[visible]])
        targets = np.vstack([targets, q[visible]])
    if len(sources) < patch.n_points:
        raise InputError("Patch has too little area visible in both views", details={"patch": n})
    return sources[: patch.n_points], targets[: patch.n_points]


def _band_segment(spec: SceneSpec, line: np.ndarray) -> np.ndarray:
    """End points of the part of an epipolar line inside image J."""
    normal = line[:2]
    direction = np.array([-normal[1], normal[0]])
    foot = -line[2] * normal
    reach = 4.0 * (spec.width2 + spec.height2 + abs(line[2]))
    chord = shapely.LineString([foot - reach * direction, foot + reach * direction])
    clipped = shapely.intersection(chord, shapely.box(0.0, 0.0, spec.width2, spec.height2))
    if clipped.is_empty or clipped.length == 0.0:
        return np.vstack([foot, foot])
    coords = np.asarray(clipped.coords)
    return np.vstack([coords[0], coords[-1]])


def _outlier(rng, spec: SceneSpec, F, source, truth, line) -> np.ndarray:
    segment = _band_segment(spec, line)
    reach = 0.9 * np.sqrt(spec.delta)
    t = rng.uniform(0.0, 1.0, OUTLIER_TRIES)
    offset = rng.uniform(-reach, reach, OUTLIER_TRIES)
    candidates = segment[0] + t[:, None] * (segment[1] - segment[0]) + offset[:, None] * line[:2]
    ok = (np.linalg.norm(candidates - truth, axis=1) >= spec.min_outlier_offset) & (
        sampson_distances(F, source, candidates) < spec.delta
    )
    pick = np.flatnonzero(ok)
    return candidates[pick[0] if len(pick) else int(np.argmax(np.linalg.norm(candidates - truth, axis=1)))]


def generate(spec: SceneSpec) -> GroundTruth:
    """Candidate matches on the patches: noisy inliers plus hard outliers inside the epipolar band."""
    _check_front_facing(spec)
    rng = np.random.default_rng(spec.seed)
    F = fundamental_from_cameras(spec.camera1, spec.camera2)

    samples = [_sample_patch(rng, spec, n) for n in range(len(spec.patches))]
    sources = np.vstack([s for s, _ in samples])
    truths = np.vstack([t for _, t in samples])
    n = len(sources)

    targets = truths + spec.noise_sigma * rng.standard_normal((n, 2))
    labels = np.ones(n, dtype=bool)
    n_outliers = int(round(spec.outlier_fraction * n))
    if n_outliers:
        chosen = np.sort(rng.choice(n, n_outliers, replace=False))
        lines = epipolar_lines(F, sources[chosen])
        for m, line in zip(chosen, lines):
            targets[m] = _outlier(rng, spec, F, sources[m], truths[m], line)
        labels[chosen] = False

    base = rng.standard_normal((n, spec.descriptor_dim))
    descriptors_a = base + spec.descriptor_noise * rng.standard_normal(base.shape)
    descriptors_b = base + spec.descriptor_noise * rng.standard_normal(base.shape)
    distractor_points = rng.uniform([0.0, 0.0], [spec.width2, spec.height2], size=(spec.distractors, 2))
    distractor_descriptors = rng.standard_normal((spec.distractors, spec.descriptor_dim))

    logger.info("synthetic scene: %d candidates, %d outliers, seed %d", n, n_outliers, spec.seed)
    return GroundTruth(
        spec=spec,
        fundamental=F,
        matches=MatchSet(sources=sources, targets=targets),
        labels=labels,
        true_targets=truths,
        features_a=FeatureSet(keypoints=sources, descriptors=descriptors_a),
        features_b=FeatureSet(
            keypoints=np.vstack([targets, distractor_points]),
            descriptors=np.vstack([descriptors_b, distractor_descriptors]),
        ),
    )
