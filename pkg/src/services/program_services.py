import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from src.core import ConfigError, DegeneratePointError, GeometryError
from src.helpers.program_helper import dump_problem
from src.models import (
    AffineDecomposition,
    ConeBlocks,
    ConeRows,
    ConicProblem,
    EBDProgramSpec,
    EpipolarTriangulation,
    FundamentalMatrix,
    LinearRows,
    MatchTerm,
    PLMap,
)
from src.services.affine_services import A_FLOOR, decompose
from src.services.geometry_services import LineOrienter, epipolar_lines

logger = logging.getLogger(__name__)


def face_vars(faces: np.ndarray) -> np.ndarray:
    """Column indices (x_i, y_i, x_j, y_j, x_k, y_k) of each face's targets."""
    faces = np.asarray(faces, dtype=np.int64)
    return np.stack([2 * faces, 2 * faces + 1], axis=-1).reshape(len(faces), 6)


def affine_coefficients(mesh: EpipolarTriangulation, face: int, phi: PLMap) -> AffineDecomposition:
    if abs(mesh.signed_areas[face]) <= 1e-6:
        raise GeometryError("Degenerate source face", details={"face": face})
    targets = phi.targets[mesh.faces[face]].T
    affine = targets @ mesh.face_basis_inverse[face]
    return decompose(affine[:, :2], affine[:, 2])


def vertex_epipolar_rows(mesh: EpipolarTriangulation, F: FundamentalMatrix) -> LinearRows:
    """One row l_i . (v~_i, 1) = 0 per vertex, l_i = F (v_i, 1) with unit normal part."""
    try:
        lines = epipolar_lines(F, mesh.vertices)
    except DegeneratePointError as exc:
        raise GeometryError("A triangulation vertex coincides with the epipole", details=exc.details) from exc
    n = mesh.n_vertices
    rows = np.repeat(np.arange(n), 2)
    cols = np.arange(2 * n)
    matrix = sparse.csr_matrix((lines[:, :2].reshape(-1), (rows, cols)), shape=(n, 2 * n))
    return LinearRows(matrix=matrix, rhs=-lines[:, 2])


def face_cone_rows(
    mesh: EpipolarTriangulation, F: FundamentalMatrix, mu: float, orientation: int = 1
) -> ConeRows:
    """Coefficients of (a, b, c, d) of g2^-1 o Phi_f o g1 over each face's six unknowns.

    For target vertex k with component r, the adapted linear part is
    (R2' e_r)(R1' s_k)', where s_k is row k of the face's inverse basis.
    """
    orient = LineOrienter(F, orientation)
    n_faces = mesh.n_faces
    r1 = np.empty((n_faces, 2, 2))
    r2 = np.empty((n_faces, 2, 2))
    points2 = np.empty((n_faces, 2))
    directions2 = np.empty((n_faces, 2))
    for f in range(n_faces):
        l1, l2 = orient(mesh.face_line(f))
        d1, d2 = l1.direction, l2.direction
        r1[f] = [[d1[0], -d1[1]], [d1[1], d1[0]]]
        r2[f] = [[d2[0], -d2[1]], [d2[1], d2[0]]]
        points2[f] = l2.point
        directions2[f] = l2.direction

    s = mesh.face_basis_inverse[:, :, :2]
    w = np.einsum("fji,fkj->fki", r1, s)
    # u[f, r] = R2' e_r, the r-th row of R2.
    u = r2
    coeffs = {name: np.empty((n_faces, 3, 2)) for name in "abcd"}
    for r in range(2):
        u0 = u[:, r, 0][:, None]
        u1 = u[:, r, 1][:, None]
        w0, w1 = w[:, :, 0], w[:, :, 1]
        coeffs["a"][:, :, r] = 0.5 * (u0 * w0 + u1 * w1)
        coeffs["b"][:, :, r] = 0.5 * (u0 * w1 - u1 * w0)
        coeffs["c"][:, :, r] = 0.5 * (u0 * w0 - u1 * w1)
        coeffs["d"][:, :, r] = 0.5 * (u0 * w1 + u1 * w0)

    return ConeRows(
        face_vars=face_vars(mesh.faces),
        target_points=points2,
        target_directions=directions2,
        **{name: value.reshape(n_faces, 6) for name, value in coeffs.items()},
    )


def bending_rows(mesh: EpipolarTriangulation) -> sparse.csr_matrix:
    """Rows of L_f - L_g, four per interior edge, over the flattened targets.

    L_f is the linear part of the face map; the rows vanish exactly on globally
    affine placements.
    """
    pairs = mesh.interior_edges
    n = 2 * mesh.n_vertices
    if len(pairs) == 0:
        return sparse.csr_matrix((0, n))
    basis = mesh.face_basis_inverse
    first, second = pairs[:, 0], pairs[:, 1]
    edge = np.arange(len(pairs))
    rows, cols, vals = [], [], []
    for axis in range(2):
        for column in range(2):
            row = np.repeat(4 * edge + 2 * axis + column, 6)
            var = np.concatenate([2 * mesh.faces[first] + axis, 2 * mesh.faces[second] + axis], axis=1)
            coeff = np.concatenate([basis[first, :, column], -basis[second, :, column]], axis=1)
            rows.append(row)
            cols.append(var.reshape(-1))
            vals.append(coeff.reshape(-1))
    return sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(4 * len(pairs), n)
    ).tocsr()


def build_iteration_program(
    mesh: EpipolarTriangulation,
    F: FundamentalMatrix,
    mu: float,
    terms: Sequence[MatchTerm],
    orientation: int = 1,
    *,
    equalities: Optional[LinearRows] = None,
    cones: Optional[ConeRows] = None,
    smoothness: float = 0.0,
    bending: Optional[sparse.csr_matrix] = None,
) -> EBDProgramSpec:
    """Sum_m w_m ||h_m||^2 + smoothness * ||D x||^2 as 0.5 x'Px + q'x + r over the flattened targets.

    D holds the ``bending_rows`` of the mesh. ``equalities``, ``cones`` and
    ``bending`` do not depend on the weights; pass them to skip reassembly
    between iterations.
    """
    if smoothness < 0.0:
        raise ConfigError("Smoothness weight must be non-negative", details={"smoothness": smoothness})
    if not terms:
        raise ConfigError("Iteration program needs at least one match term")
    n = 2 * mesh.n_vertices
    faces = np.array([t.face for t in terms], dtype=np.int64)
    if faces.min() < 0 or faces.max() >= mesh.n_faces:
        raise ConfigError("Match term references an unknown face")
    bary = np.stack([t.weights for t in terms])
    targets = np.stack([t.target for t in terms])
    weights = np.array([t.weight for t in terms])

    vertices = mesh.faces[faces]
    rows, cols, vals = [], [], []
    linear = np.zeros(n)
    for axis in range(2):
        idx = 2 * vertices + axis
        rows.append(np.repeat(idx, 3, axis=1).reshape(-1))
        cols.append(np.tile(idx, (1, 3)).reshape(-1))
        vals.append((2.0 * weights[:, None, None] * bary[:, :, None] * bary[:, None, :]).reshape(-1))
        np.add.at(linear, idx.reshape(-1), (-2.0 * weights[:, None] * bary * targets[:, axis][:, None]).reshape(-1))
    quadratic = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    if smoothness > 0.0:
        D = bending if bending is not None else bending_rows(mesh)
        quadratic = quadratic + 2.0 * smoothness * (D.T @ D).tocsr()
    constant = float(np.sum(weights * np.sum(targets**2, axis=1)))
    logger.debug("iteration program: %d terms over %d faces", len(terms), len(np.unique(faces)))

    return EBDProgramSpec(
        n=n,
        objective_matrix=quadratic,
        objective_linear=linear,
        objective_constant=constant,
        equalities=equalities if equalities is not None else vertex_epipolar_rows(mesh, F),
        cones=cones if cones is not None else face_cone_rows(mesh, F, mu, orientation),
        mu=mu,
        a_floor=A_FLOOR,
    )


def _scatter(cones: ConeRows, values: np.ndarray, n: int) -> sparse.csr_matrix:
    count = cones.n_rows
    rows = np.repeat(np.arange(count), 6)
    return sparse.csr_matrix((values.reshape(-1), (rows, cones.face_vars.reshape(-1))), shape=(count, n))


def to_conic_problem(program: EBDProgramSpec) -> ConicProblem:
    """Lower to: equalities, -a <= -a_floor, ||(sqrt(1-mu^2) b, c)|| <= mu a per face."""
    cones = program.cones
    n = program.n
    count = cones.n_rows
    a_rows = _scatter(cones, cones.a, n)
    b_rows = _scatter(cones, np.sqrt(1.0 - program.mu**2) * cones.b, n)
    c_rows = _scatter(cones, cones.c, n)
    # Interleave so block f owns rows (2f, 2f + 1).
    stacked = sparse.vstack([b_rows, c_rows]).tocsr()
    order = np.stack([np.arange(count), count + np.arange(count)], axis=1).reshape(-1)
    return ConicProblem(
        n=n,
        P=program.objective_matrix,
        q=program.objective_linear,
        r=program.objective_constant,
        A=program.equalities.matrix,
        b=program.equalities.rhs,
        G=-a_rows,
        h=np.full(count, -program.a_floor),
        cones=ConeBlocks(
            dims=[2] * count,
            M=stacked[order],
            m=np.zeros(2 * count),
            R=program.mu * a_rows,
            s=np.zeros(count),
        ),
    )


def dump_program(program: EBDProgramSpec, path: Path) -> Path:
    return dump_problem(to_conic_problem(program), path)
