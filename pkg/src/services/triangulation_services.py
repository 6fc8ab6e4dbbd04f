import logging
from typing import Optional

import numpy as np
import shapely

from src.core import ConfigError, GeometryError, InputError
from src.models import EpipolarTriangulation, FundamentalMatrix, GridConfig, ImageRect
from src.models.geometry_model import Epipole
from src.services.geometry_services import epipole

logger = logging.getLogger(__name__)

MIN_FACE_AREA = 1e-6
BARYCENTRIC_SLACK = 1e-9
# Cap on the arc length of the farthest ring, in units of eta.
MAX_ARC_FACTOR = 4.0


def _polar_grid(image: ImageRect, ep: Epipole, cfg: GridConfig):
    eta = cfg.eta
    e = ep.point
    corners = image.corners
    inside = bool(image.contains(e)[0])
    dx = max(0.0, -e[0], e[0] - image.width)
    dy = max(0.0, -e[1], e[1] - image.height)
    d0 = float(np.hypot(dx, dy))
    r_far = float(np.max(np.linalg.norm(corners - e, axis=1)))

    near = inside or d0 < 2.0 * eta
    r_min = cfg.r_min if cfg.r_min is not None else (eta if near else 0.0)
    if inside and r_min == 0.0:
        raise ConfigError("Epipole inside the image requires r_min > 0", details={"epipole": e.tolist()})
    r_start = max(d0 - 0.5 * eta, r_min)
    if r_start <= 1e-9:
        raise ConfigError("Epipole on the image boundary requires r_min > 0", details={"epipole": e.tolist()})

    if inside:
        theta0, span, wrap = 0.0, 2.0 * np.pi, True
    else:
        center = np.array([image.width, image.height]) / 2.0 - e
        base = float(np.arctan2(center[1], center[0]))
        rel = np.arctan2(corners[:, 1] - e[1], corners[:, 0] - e[0]) - base
        rel = (rel + np.pi) % (2.0 * np.pi) - np.pi
        theta0, span, wrap = base + float(rel.min()), float(rel.max() - rel.min()), False

    r_ref = max(r_start, eta, r_far / MAX_ARC_FACTOR)
    n_steps = max(3 if wrap else 1, int(np.ceil(span * r_ref / eta)))
    step = span / n_steps
    n_rays = n_steps if wrap else n_steps + 1
    # Chords of the last ring must still reach the farthest corner.
    reach = r_far / np.cos(min(step, np.pi / 2) / 2.0)
    n_rings = max(1, int(np.ceil((reach - r_start) / eta)))

    angles = theta0 + step * np.arange(n_rays)
    radii = r_start + eta * np.arange(n_rings + 1)
    grid = e + radii[None, :, None] * np.stack([np.cos(angles), np.sin(angles)], axis=1)[:, None, :]
    coords = np.stack(np.broadcast_arrays(angles[:, None], radii[None, :]), axis=2)
    return grid, coords, wrap


def _parallel_grid(image: ImageRect, ep: Epipole, cfg: GridConfig):
    eta = cfg.eta
    u = ep.direction
    n = np.array([-u[1], u[0]])
    corners = image.corners

    def _span(axis):
        proj = corners @ axis
        count = max(1, int(np.ceil((proj.max() - proj.min()) / eta)))
        start = 0.5 * (proj.max() + proj.min()) - 0.5 * count * eta
        return start + eta * np.arange(count + 1)

    offsets_n = _span(n)
    offsets_u = _span(u)
    grid = offsets_n[:, None, None] * n + offsets_u[None, :, None] * u
    line_ids = np.arange(len(offsets_n), dtype=float)
    coords = np.stack(np.broadcast_arrays(line_ids[:, None], offsets_u[None, :]), axis=2)
    return grid, coords, False


def build(image: ImageRect, F: FundamentalMatrix, cfg: Optional[GridConfig] = None) -> EpipolarTriangulation:
    """Triangulate the source image so every face has an edge on an epipolar line.

    Vertices sit on a grid of epipolar lines (rays from a finite epipole, or
    parallel lines) times radii/offsets spaced eta apart. Each cell between two
    adjacent lines is cut along the diagonal from (i, k) to (i + 1, k + 1); the
    first triangle keeps its edge on line i + 1, the second on line i.
    """
    cfg = cfg or GridConfig()
    if image.width <= 0 or image.height <= 0:
        raise InputError("Image rectangle is empty")
    ep = epipole(F)
    grid, coords, wrap = _parallel_grid(image, ep, cfg) if ep.at_infinity else _polar_grid(image, ep, cfg)
    n_lines, n_steps = grid.shape[:2]

    vertices = grid.reshape(-1, 2)
    ray_coords = coords.reshape(-1, 2)
    ray_ids = np.repeat(np.arange(n_lines), n_steps)

    i = np.arange(n_lines if wrap else n_lines - 1)
    k = np.arange(n_steps - 1)
    ii, kk = (a.reshape(-1) for a in np.meshgrid(i, k, indexing="ij"))
    jj = (ii + 1) % n_lines
    v00, v01 = ii * n_steps + kk, ii * n_steps + kk + 1
    v10, v11 = jj * n_steps + kk, jj * n_steps + kk + 1
    # The marked edge is always (face[0], face[1]).
    faces = np.concatenate(
        [np.stack([v10, v11, v00], axis=1), np.stack([v00, v01, v11], axis=1)]
    )

    corners = vertices[faces]
    e1 = corners[:, 1] - corners[:, 0]
    e2 = corners[:, 2] - corners[:, 0]
    clockwise = (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]) < 0
    faces[clockwise] = faces[clockwise][:, [1, 0, 2]]

    box = shapely.box(0.0, 0.0, image.width, image.height)
    polygons = shapely.polygons(vertices[faces])
    keep = shapely.area(shapely.intersection(polygons, box)) > 0.0
    faces = faces[keep]
    if len(faces) == 0:
        raise GeometryError("No face of the epipolar grid meets the image")

    used = np.unique(faces)
    remap = np.full(len(vertices), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    faces = remap[faces]
    vertices = vertices[used]
    ray_coords = ray_coords[used]
    ray_ids = ray_ids[used]

    # Line of each face: from the inner marked vertex, pointing away from the epipole.
    first, second = faces[:, 0], faces[:, 1]
    swap = ray_coords[first, 1] > ray_coords[second, 1]
    inner = np.where(swap, second, first)
    outer = np.where(swap, first, second)
    directions = vertices[outer] - vertices[inner]
    directions /= np.linalg.norm(directions, axis=1)[:, None]

    mesh = EpipolarTriangulation(
        image=image,
        epipole=ep,
        vertices=vertices,
        faces=faces,
        marked_edges=np.zeros(len(faces), dtype=np.int64),
        line_points=vertices[inner],
        line_directions=directions,
        ray_ids=ray_ids,
        ray_coords=ray_coords,
    )
    if np.any(mesh.signed_areas <= MIN_FACE_AREA):
        raise GeometryError("Triangulation produced degenerate faces", details={"eta": cfg.eta})
    logger.info(
        "epipolar triangulation: %d vertices, %d faces (%s)",
        mesh.n_vertices,
        mesh.n_faces,
        "parallel lines" if ep.at_infinity else "polar",
    )
    return mesh


def _contains(mesh: EpipolarTriangulation, face: int, point: np.ndarray) -> bool:
    weights = mesh.face_basis_inverse[face] @ np.array([point[0], point[1], 1.0])
    return bool(np.all(weights >= -BARYCENTRIC_SLACK))


def locate_many(mesh: EpipolarTriangulation, points) -> np.ndarray:
    """Containing face per point (lowest index on shared edges), -1 when outside."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.full(len(pts), -1, dtype=np.int64)
    if len(pts) == 0:
        return out
    radius = mesh.locate_radius * (1.0 + 1e-9) + 1e-9
    candidates = mesh.centroid_tree.query_ball_point(pts, r=radius)
    basis = mesh.face_basis_inverse
    for n, (point, faces) in enumerate(zip(pts, candidates)):
        if not faces:
            continue
        faces = np.sort(np.asarray(faces, dtype=np.int64))
        weights = basis[faces] @ np.array([point[0], point[1], 1.0])
        hits = np.flatnonzero(np.all(weights >= -BARYCENTRIC_SLACK, axis=1))
        if len(hits):
            out[n] = faces[hits[0]]
    return out


def locate(mesh: EpipolarTriangulation, point) -> Optional[int]:
    face = int(locate_many(mesh, np.asarray(point, dtype=float).reshape(1, 2))[0])
    return None if face < 0 else face


def barycentric(mesh: EpipolarTriangulation, face: int, point) -> np.ndarray:
    if abs(mesh.signed_areas[face]) <= MIN_FACE_AREA:
        raise GeometryError("Degenerate face", details={"face": face})
    point = np.asarray(point, dtype=float)
    weights = mesh.face_basis_inverse[face] @ np.array([point[0], point[1], 1.0])
    if np.any(weights < -BARYCENTRIC_SLACK):
        raise GeometryError("Point lies outside the face", details={"face": face, "point": point.tolist()})
    return weights


def barycentric_many(mesh: EpipolarTriangulation, faces, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    homogeneous = np.column_stack([pts, np.ones(len(pts))])
    return np.einsum("nij,nj->ni", mesh.face_basis_inverse[np.asarray(faces)], homogeneous)
