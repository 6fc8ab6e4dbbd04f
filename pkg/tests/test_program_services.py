import numpy as np
import pytest

from src.core import ConfigError, SolverStatus
from src.models import DirectedLine, DistortionBound, GridConfig, ImageRect, MatchTerm, PLMap
from src.services import (
    affine_coefficients,
    bending_rows,
    build,
    build_iteration_program,
    check_epipolar_bd,
    decompose,
    face_cone_rows,
    locate_many,
    resolve_orientation,
    solve,
    to_conic_problem,
    to_line_frame,
    vertex_epipolar_rows,
)
from src.services.geometry_services import LineOrienter, epipolar_lines
from src.services.synthetic_services import ground_truth_map, patch_index
from src.services.triangulation_services import barycentric_many


def _adapted(cones, targets) -> dict[str, np.ndarray]:
    values = np.asarray(targets).reshape(-1)[cones.face_vars]
    return {name: np.sum(getattr(cones, name) * values, axis=1) for name in "abcd"}


def _objective(program, x) -> float:
    return float(0.5 * x @ (program.objective_matrix @ x) + program.objective_linear @ x + program.objective_constant)


@pytest.fixture
def rectified_mesh(rectified_f, image):
    return build(image, rectified_f, GridConfig(eta=25.0))


def test_identity_placement_decomposes_to_identity(scene_mesh):
    phi = PLMap(targets=scene_mesh.vertices)
    for f in (0, 7, scene_mesh.n_faces - 1):
        g = affine_coefficients(scene_mesh, f, phi)
        np.testing.assert_allclose([g.a, g.b, g.c, g.d], [1.0, 0.0, 0.0, 0.0], atol=1e-9)
        np.testing.assert_allclose(g.t, [0.0, 0.0], atol=1e-7)


def test_global_similarity_has_no_anti_similarity_part(scene_mesh):
    angle, scale = 0.3, 1.7
    rotation = scale * np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    phi = PLMap(targets=scene_mesh.vertices @ rotation.T + [4.0, -2.0])
    for f in range(0, scene_mesh.n_faces, 37):
        g = affine_coefficients(scene_mesh, f, phi)
        assert abs(g.c) <= 1e-9 and abs(g.d) <= 1e-9
        np.testing.assert_allclose(g.linear, rotation, atol=1e-9)


def test_face_maps_reproduce_their_vertices(scene_mesh):
    rng = np.random.default_rng(0)
    phi = PLMap(targets=scene_mesh.vertices + rng.normal(scale=5.0, size=scene_mesh.vertices.shape))
    for f in range(0, scene_mesh.n_faces, 11):
        corners = scene_mesh.faces[f]
        mapped = affine_coefficients(scene_mesh, f, phi).apply(scene_mesh.vertices[corners])
        np.testing.assert_allclose(mapped, phi.targets[corners], atol=1e-9)


def test_rectified_rows_fix_the_scanline(rectified_f, rectified_mesh):
    rows = vertex_epipolar_rows(rectified_mesh, rectified_f)
    assert rows.n_rows == rectified_mesh.n_vertices
    dense = rows.matrix.toarray()
    for i in range(0, rectified_mesh.n_vertices, 13):
        np.testing.assert_allclose(dense[i, 2 * i : 2 * i + 2], [0.0, 1.0], atol=1e-12)
        assert rows.rhs[i] == pytest.approx(rectified_mesh.vertices[i, 1], abs=1e-12)
        assert np.count_nonzero(dense[i]) == 1


def test_ground_truth_satisfies_vertex_rows(scene_truth, scene_mesh):
    truth, valid = ground_truth_map(scene_truth.spec, scene_mesh.vertices)
    assert np.count_nonzero(valid) > 50
    rows = vertex_epipolar_rows(scene_mesh, scene_truth.fundamental)
    x = np.where(valid[:, None], truth, scene_mesh.vertices).reshape(-1)
    residual = rows.matrix @ x - rows.rhs
    assert np.max(np.abs(residual[valid])) <= 1e-6


def test_ground_truth_faces_are_inside_the_cone(scene_truth, scene_mesh, exact_matches):
    F = scene_truth.fundamental
    orientation = resolve_orientation(F, exact_matches)
    cones = face_cone_rows(scene_mesh, F, 0.6, orientation)
    assert cones.n_rows == scene_mesh.n_faces
    truth, valid = ground_truth_map(scene_truth.spec, scene_mesh.vertices)
    owner = patch_index(scene_truth.spec, scene_mesh.vertices)
    corners = scene_mesh.faces
    whole = np.all(valid[corners], axis=1) & np.all(owner[corners] == owner[corners][:, :1], axis=1)
    assert np.count_nonzero(whole) > 20

    coeffs = _adapted(cones, np.where(valid[:, None], truth, 0.0))
    a, b, c, d = (coeffs[k][whole] for k in "abcd")
    assert np.all(a > 0)
    assert np.all(np.sqrt((1 - 0.6**2) * b**2 + c**2) <= 0.6 * a)
    # The vertex rows already force d = b.
    assert np.max(np.abs(d - b)) <= 1e-6


def test_cone_rows_match_line_frames(scene_truth, scene_mesh):
    F = scene_truth.fundamental
    rng = np.random.default_rng(1)
    phi = PLMap(targets=scene_mesh.vertices + rng.normal(scale=2.0, size=scene_mesh.vertices.shape))
    cones = face_cone_rows(scene_mesh, F, 0.5)
    coeffs = _adapted(cones, phi.targets)
    orient = LineOrienter(F)
    for f in range(0, scene_mesh.n_faces, 17):
        l1, l2 = orient(scene_mesh.face_line(f))
        g = to_line_frame(affine_coefficients(scene_mesh, f, phi), l1, l2)
        np.testing.assert_allclose([coeffs[k][f] for k in "abcd"], [g.a, g.b, g.c, g.d], atol=1e-9)


def test_rectified_identity_sits_strictly_inside_the_cone(rectified_f, rectified_mesh):
    cones = face_cone_rows(rectified_mesh, rectified_f, 0.5)
    coeffs = _adapted(cones, rectified_mesh.vertices)
    np.testing.assert_allclose(coeffs["a"], 1.0, atol=1e-9)
    for name in "bcd":
        np.testing.assert_allclose(coeffs[name], 0.0, atol=1e-9)


def test_rectified_stretch_along_scanlines(rectified_f, rectified_mesh):
    stretched = rectified_mesh.vertices * [2.0, 1.0]
    cones = face_cone_rows(rectified_mesh, rectified_f, 0.5)
    coeffs = _adapted(cones, stretched)
    np.testing.assert_allclose(coeffs["a"], 1.5, atol=1e-9)
    np.testing.assert_allclose(coeffs["c"], 0.5, atol=1e-9)
    np.testing.assert_allclose(coeffs["b"], 0.0, atol=1e-9)
    f = decompose(np.diag([2.0, 1.0]))
    line = rectified_mesh.face_line(0)
    l2 = LineOrienter(rectified_f)(line)[1]
    mapped = DirectedLine(point=f.apply(line.point), direction=l2.direction)
    assert check_epipolar_bd(f, line, mapped, DistortionBound(mu=0.34))
    assert not check_epipolar_bd(f, line, mapped, DistortionBound(mu=0.33))


def test_single_vertex_term(rectified_f, rectified_mesh):
    face = 5
    vertex = int(rectified_mesh.faces[face, 0])
    target = np.array([12.0, -3.0])
    term = MatchTerm(face=face, weights=[1.0, 0.0, 0.0], target=target, weight=1.0)
    program = build_iteration_program(rectified_mesh, rectified_f, 0.5, [term])
    rng = np.random.default_rng(2)
    for _ in range(5):
        x = rng.normal(scale=20.0, size=program.n)
        expected = np.sum((x[2 * vertex : 2 * vertex + 2] - target) ** 2)
        assert _objective(program, x) == pytest.approx(expected, rel=1e-12)


def test_doubling_weights_doubles_the_objective(scene_truth, scene_mesh):
    rng = np.random.default_rng(3)
    faces = rng.integers(0, scene_mesh.n_faces, size=10)
    terms = [
        MatchTerm(face=int(f), weights=rng.dirichlet(np.ones(3)), target=rng.uniform(0, 300, 2), weight=w)
        for f, w in zip(faces, rng.uniform(0.1, 1.0, size=10))
    ]
    doubled = [t.model_copy(update={"weight": 2.0 * t.weight}) for t in terms]
    F = scene_truth.fundamental
    one = build_iteration_program(scene_mesh, F, 0.6, terms)
    two = build_iteration_program(scene_mesh, F, 0.6, doubled, equalities=one.equalities, cones=one.cones)
    x = rng.normal(size=one.n)
    assert _objective(two, x) == pytest.approx(2.0 * _objective(one, x), rel=1e-12)


def test_empty_terms_are_rejected(rectified_f, rectified_mesh):
    with pytest.raises(ConfigError):
        build_iteration_program(rectified_mesh, rectified_f, 0.5, [])
    with pytest.raises(ConfigError):
        build_iteration_program(
            rectified_mesh,
            rectified_f,
            0.5,
            [MatchTerm(face=rectified_mesh.n_faces, weights=[1.0, 0.0, 0.0], target=[0.0, 0.0], weight=1.0)],
        )


def test_conic_problem_shape(scene_truth, scene_mesh):
    term = MatchTerm(face=0, weights=[1 / 3, 1 / 3, 1 / 3], target=[10.0, 10.0], weight=1.0)
    problem = to_conic_problem(build_iteration_program(scene_mesh, scene_truth.fundamental, 0.6, [term]))
    assert problem.n == 2 * scene_mesh.n_vertices
    assert problem.n_eq == scene_mesh.n_vertices
    assert problem.n_ineq == scene_mesh.n_faces
    assert problem.cones.count == scene_mesh.n_faces
    assert set(problem.cones.dims) == {2}


def test_exact_matches_are_fitted_exactly(flat_truth):
    spec = flat_truth.spec
    F = flat_truth.fundamental
    matches = flat_truth.matches
    mesh = build(ImageRect(width=spec.width, height=spec.height), F, GridConfig(eta=50.0))
    faces = locate_many(mesh, matches.sources)
    assert np.all(faces >= 0)
    weights = barycentric_many(mesh, faces, matches.sources)
    terms = [
        MatchTerm(face=int(f), weights=c, target=q, weight=1.0) for f, c, q in zip(faces, weights, matches.targets)
    ]
    program = build_iteration_program(mesh, F, 0.6, terms, resolve_orientation(F, matches))
    result = solve(to_conic_problem(program))
    assert result.status == SolverStatus.OPTIMAL
    assert abs(result.objective) <= 1e-6
    fitted = np.einsum("nk,nkd->nd", weights, result.x.reshape(-1, 2)[mesh.faces[faces]])
    np.testing.assert_allclose(fitted, matches.targets, atol=1e-5)


def _on_lines(mesh, F, rng, spread=300.0) -> np.ndarray:
    """Random placement with every vertex on its own epipolar line."""
    lines = epipolar_lines(F, mesh.vertices)
    normals = lines[:, :2]
    foot = -lines[:, 2:3] * normals
    along = np.stack([-normals[:, 1], normals[:, 0]], axis=1)
    return foot + rng.uniform(-spread, spread, size=(mesh.n_vertices, 1)) * along


def test_vertex_rows_force_line_preservation(scene_truth, scene_mesh):
    F = scene_truth.fundamental
    rng = np.random.default_rng(8)
    orient = LineOrienter(F)
    rows = vertex_epipolar_rows(scene_mesh, F)
    for _ in range(3):
        targets = _on_lines(scene_mesh, F, rng)
        assert np.max(np.abs(rows.matrix @ targets.reshape(-1) - rows.rhs)) <= 1e-9
        phi = PLMap(targets=targets)
        for f in range(scene_mesh.n_faces):
            l1, l2 = orient(scene_mesh.face_line(f))
            g = to_line_frame(affine_coefficients(scene_mesh, f, phi), l1, l2)
            assert abs(g.d - g.b) <= 1e-8
            assert abs(g.t[1]) <= 1e-8


def test_bending_rows_vanish_on_affine_placements(scene_mesh):
    D = bending_rows(scene_mesh)
    assert D.shape == (4 * len(scene_mesh.interior_edges), 2 * scene_mesh.n_vertices)
    rng = np.random.default_rng(9)
    for _ in range(5):
        linear = rng.normal(size=(2, 2))
        x = (scene_mesh.vertices @ linear.T + rng.normal(scale=50.0, size=2)).reshape(-1)
        assert np.max(np.abs(D @ x)) <= 1e-9

    bumped = scene_mesh.vertices.copy()
    inner = int(np.argmin(np.linalg.norm(bumped - bumped.mean(axis=0), axis=1)))
    bumped[inner] += [3.0, 0.0]
    assert np.linalg.norm(D @ bumped.reshape(-1)) > 1e-3


def test_smoothness_adds_the_bending_energy(scene_truth, scene_mesh):
    F = scene_truth.fundamental
    rng = np.random.default_rng(10)
    terms = [
        MatchTerm(face=int(f), weights=rng.dirichlet(np.ones(3)), target=rng.uniform(0, 300, 2), weight=1.0)
        for f in rng.integers(0, scene_mesh.n_faces, size=8)
    ]
    plain = build_iteration_program(scene_mesh, F, 0.6, terms)
    smooth = build_iteration_program(
        scene_mesh, F, 0.6, terms, equalities=plain.equalities, cones=plain.cones, smoothness=2.5
    )
    D = bending_rows(scene_mesh)
    x = scene_mesh.vertices.reshape(-1) + rng.normal(size=plain.n)
    bend = D @ x
    assert _objective(smooth, x) == pytest.approx(_objective(plain, x) + 2.5 * bend @ bend, rel=1e-10)
    with pytest.raises(ConfigError):
        build_iteration_program(scene_mesh, F, 0.6, terms, smoothness=-1.0)


def test_mixtures_of_solved_maps_stay_feasible(scene_truth, scene_mesh, exact_matches):
    F = scene_truth.fundamental
    orientation = resolve_orientation(F, exact_matches)
    faces = locate_many(scene_mesh, exact_matches.sources)
    inside = faces >= 0
    weights = barycentric_many(scene_mesh, faces[inside], exact_matches.sources[inside])
    goals = exact_matches.targets[inside]
    rng = np.random.default_rng(12)
    equalities = vertex_epipolar_rows(scene_mesh, F)
    cones = face_cone_rows(scene_mesh, F, 0.6, orientation)

    solutions = []
    for noise in (0.0, 4.0):
        terms = [
            MatchTerm(face=int(f), weights=c, target=q + rng.normal(scale=noise, size=2), weight=w)
            for f, c, q, w in zip(faces[inside], weights, goals, rng.uniform(0.1, 1.0, size=len(goals)))
        ]
        program = build_iteration_program(
            scene_mesh, F, 0.6, terms, orientation, equalities=equalities, cones=cones, smoothness=1.0
        )
        result = solve(to_conic_problem(program))
        assert result.accepted
        solutions.append(result.x)

    for lam in (0.0, 0.25, 0.5, 0.8, 1.0):
        x = lam * solutions[0] + (1.0 - lam) * solutions[1]
        assert np.max(np.abs(equalities.matrix @ x - equalities.rhs)) <= 1e-6
        coeffs = _adapted(cones, x)
        a, b, c = coeffs["a"], coeffs["b"], coeffs["c"]
        assert np.all(a > 0)
        assert np.all(np.sqrt((1 - 0.6**2) * b**2 + c**2) <= 0.6 * a + 1e-6)
