from functools import cached_property
from typing import Optional

import numpy as np
from pydantic import Field
from scipy.spatial import cKDTree

from src.models.base_model import FrozenModel, IndexArray, Matrix, Points
from src.models.geometry_model import DirectedLine, Epipole


class GridConfig(FrozenModel):
    eta: float = Field(25.0, gt=0.0, description="Radial (or line) spacing in pixels")
    r_min: Optional[float] = Field(
        default=None,
        ge=0.0,
        description="Smallest ring radius; None picks eta when the epipole is inside or near the image",
    )


class ImageRect(FrozenModel):
    width: float = Field(..., gt=0.0)
    height: float = Field(..., gt=0.0)

    @property
    def corners(self) -> np.ndarray:
        return np.array(
            [[0.0, 0.0], [self.width, 0.0], [self.width, self.height], [0.0, self.height]]
        )

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.width, self.height))

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(points)
        return (
            (pts[:, 0] >= 0.0)
            & (pts[:, 0] <= self.width)
            & (pts[:, 1] >= 0.0)
            & (pts[:, 1] <= self.height)
        )


class EpipolarTriangulation(FrozenModel):
    """Source-image mesh whose every face has one edge on an epipolar line.

    ``marked_edges[f] = k`` marks the edge ``(faces[f, k], faces[f, (k + 1) % 3])``.
    ``ray_coords`` holds ``(angle, radius)`` per vertex around a finite epipole,
    or ``(line id, offset)`` when the epipolar lines are parallel.
    """

    image: ImageRect
    epipole: Epipole
    vertices: Points
    faces: IndexArray
    marked_edges: IndexArray
    line_points: Points
    line_directions: Points
    ray_ids: IndexArray
    ray_coords: Matrix

    @property
    def parallel(self) -> bool:
        return self.epipole.at_infinity

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_faces(self) -> int:
        return int(self.faces.shape[0])

    def face_line(self, face: int) -> DirectedLine:
        return DirectedLine(point=self.line_points[face], direction=self.line_directions[face])

    def marked_vertices(self, face: int) -> tuple[int, int]:
        k = int(self.marked_edges[face])
        return int(self.faces[face, k]), int(self.faces[face, (k + 1) % 3])

    @cached_property
    def signed_areas(self) -> np.ndarray:
        v = self.vertices[self.faces]
        e1 = v[:, 1] - v[:, 0]
        e2 = v[:, 2] - v[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def face_basis_inverse(self) -> np.ndarray:
        """Per face, the inverse of [[v_i v_j v_k], [1 1 1]]."""
        v = self.vertices[self.faces]
        basis = np.ones((self.n_faces, 3, 3))
        basis[:, :2, :] = np.transpose(v, (0, 2, 1))
        return np.linalg.inv(basis)

    @cached_property
    def interior_edges(self) -> np.ndarray:
        """Pairs (f, g), f < g, of faces sharing an edge."""
        local = np.array([[0, 1], [1, 2], [2, 0]])
        edges = np.sort(self.faces[:, local].reshape(-1, 2), axis=1)
        owners = np.repeat(np.arange(self.n_faces), 3)
        _, inverse, counts = np.unique(edges, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        shared = np.flatnonzero(counts[inverse] == 2)
        shared = shared[np.argsort(inverse[shared], kind="stable")]
        pairs = owners[shared].reshape(-1, 2)
        return np.sort(pairs, axis=1)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.faces].mean(axis=1)

    @cached_property
    def centroid_tree(self) -> cKDTree:
        return cKDTree(self.centroids)

    @cached_property
    def locate_radius(self) -> float:
        offsets = self.vertices[self.faces] - self.centroids[:, None, :]
        return float(np.max(np.linalg.norm(offsets, axis=2)))
