import math

import numpy as np
import pytest

from src.core import ConfigError, GeometryError, InputError
from src.models import GridConfig, ImageRect, IRLSConfig, MatchSet, PLMap, SolveReport
from src.services import (
    affine_coefficients,
    bending_rows,
    build,
    classify_inliers,
    default_scene,
    epsilon_schedule,
    evaluate_map,
    face_cone_rows,
    fronto_parallel_scene,
    g_pe,
    generate,
    majorizer_weight,
    mu_of,
    resolve_orientation,
    run,
    vertex_epipolar_rows,
)
from src.services.irls_services import majorizer, phase_energy

P = 0.001


@pytest.fixture(scope="module")
def flat_mesh(flat_truth):
    spec = flat_truth.spec
    return build(ImageRect(width=spec.width, height=spec.height), flat_truth.fundamental, GridConfig(eta=50.0))


@pytest.fixture(scope="module")
def flat_report(flat_truth, flat_mesh):
    F = flat_truth.fundamental
    matches = flat_truth.matches
    return run(flat_mesh, F, 0.6, matches, IRLSConfig(), resolve_orientation(F, matches))


def _report(residuals, threshold=2.0) -> SolveReport:
    residuals = np.asarray(residuals, dtype=float)
    return SolveReport(
        map=PLMap(targets=np.zeros((3, 2))),
        residuals=residuals,
        inliers=residuals <= threshold,
        kept=np.arange(len(residuals)),
        threshold=threshold,
    )


def test_g_pe_examples():
    eps = 0.5
    assert g_pe(0.0, P, eps) == pytest.approx((1 - P / 2) * eps**P)
    assert g_pe(1.0, P, eps) == pytest.approx(1.0)
    assert g_pe(eps, P, eps) == pytest.approx(eps**P, rel=1e-12)


def test_g_pe_is_smooth_at_epsilon():
    for p, eps in [(P, 0.5), (1.0, 2.0), (1.5, 10.0)]:
        h = 1e-6 * eps
        below = (g_pe(eps, p, eps) - g_pe(eps - h, p, eps)) / h
        above = (g_pe(eps + h, p, eps) - g_pe(eps, p, eps)) / h
        expected = p * eps ** (p - 1)
        assert below == pytest.approx(expected, rel=1e-4)
        assert above == pytest.approx(expected, rel=1e-4)
        quadratic = 0.5 * p * eps ** (p - 2) * eps**2 + (1 - 0.5 * p) * eps**p
        assert quadratic == pytest.approx(eps**p, rel=1e-12)


def test_majorizer_weight_examples():
    eps = 0.5
    assert majorizer_weight(0.0, P, eps) == pytest.approx(eps ** (P - 2))
    assert majorizer_weight(2 * eps, P, eps) == pytest.approx((2 * eps) ** (P - 2))
    np.testing.assert_allclose(majorizer_weight([0.0, 0.25, 1.0], P, eps), [eps ** (P - 2)] * 2 + [1.0])


def test_majorizer_touches_and_dominates():
    r = np.linspace(0.0, 20.0, 401)
    for p in (P, 0.5, 1.0, 1.9):
        for eps in (0.1, 1.0, 5.0):
            for s in (0.0, 0.5 * eps, eps, 3.0, 17.0):
                bound = majorizer(r, s, p, eps)
                assert np.all(bound >= g_pe(r, p, eps) - 1e-9 * (1 + np.abs(bound)))
                assert majorizer(s, s, p, eps) == pytest.approx(g_pe(s, p, eps), rel=1e-12)


def test_epsilon_schedule():
    schedule = epsilon_schedule(554.0, 1.0, 0.5)
    assert len(schedule) == math.ceil(math.log2(554.0))
    assert schedule[0] == 554.0 and schedule[-1] == 1.0
    assert all(a > b for a, b in zip(schedule, schedule[1:]))
    assert epsilon_schedule(1.0, 1.0, 0.5) == [1.0]
    assert epsilon_schedule(8.0, 1.0, 0.5) == [8.0, 4.0, 1.0]


def test_config_ranges():
    with pytest.raises(ValueError):
        IRLSConfig(p=2.0)
    with pytest.raises(ValueError):
        IRLSConfig(eps_factor=1.0)
    with pytest.raises(ConfigError):
        IRLSConfig(eps_init=0.5, eps_final=1.0)
    assert IRLSConfig(eps_final=1.5).inlier_threshold == 3.0


def test_classify_inliers():
    assert classify_inliers(_report([0.0, 0.0, 0.0])).all()
    flags = classify_inliers(_report([0.0, 0.3, 5.0]), threshold=0.0)
    np.testing.assert_array_equal(flags, [True, False, False])
    np.testing.assert_array_equal(classify_inliers(_report([1.9, 2.0, 2.1])), [True, True, False])


def test_evaluate_map(scene_mesh):
    identity = PLMap(targets=scene_mesh.vertices)
    rng = np.random.default_rng(0)
    shifted = PLMap(targets=scene_mesh.vertices + rng.normal(size=scene_mesh.vertices.shape))
    for f in (0, scene_mesh.n_faces // 3):
        i = int(scene_mesh.faces[f, 1])
        np.testing.assert_allclose(evaluate_map(shifted, scene_mesh, scene_mesh.vertices[i]), shifted.targets[i], atol=1e-9)
        point = scene_mesh.centroids[f]
        np.testing.assert_allclose(evaluate_map(identity, scene_mesh, point), point, atol=1e-9)
    with pytest.raises(GeometryError):
        evaluate_map(identity, scene_mesh, [-1e4, -1e4])


def test_run_rejects_empty_matches(flat_truth, flat_mesh):
    empty = MatchSet(sources=np.zeros((0, 2)), targets=np.zeros((0, 2)))
    with pytest.raises(InputError):
        run(flat_mesh, flat_truth.fundamental, 0.6, empty, IRLSConfig())
    outside = MatchSet(sources=[[-1e4, -1e4]], targets=[[0.0, 0.0]])
    with pytest.raises(InputError):
        run(flat_mesh, flat_truth.fundamental, 0.6, outside, IRLSConfig())


def test_noiseless_matches_are_fitted(flat_report):
    assert np.max(flat_report.residuals) <= 0.1
    assert flat_report.inliers.all()
    assert flat_report.dropped == 0
    assert flat_report.eps_schedule[-1] == 1.0


def test_energy_descends_within_each_phase(flat_report):
    phases = sorted({r.phase for r in flat_report.energy_trace})
    assert phases
    for phase in phases:
        energies = flat_report.phase_energies(phase)
        for before, after in zip(energies, energies[1:]):
            assert after <= before * (1 + 1e-9)


def test_fitted_map_stays_feasible(flat_truth, flat_mesh, flat_report):
    F = flat_truth.fundamental
    x = flat_report.map.targets.reshape(-1)
    rows = vertex_epipolar_rows(flat_mesh, F)
    assert np.max(np.abs(rows.matrix @ x - rows.rhs)) <= 1e-5
    cones = face_cone_rows(flat_mesh, F, 0.6, flat_report.orientation)
    values = x[cones.face_vars]
    a, b, c = (np.sum(getattr(cones, k) * values, axis=1) for k in "abc")
    assert np.all(a > 0)
    assert np.all(np.sqrt((1 - 0.6**2) * b**2 + c**2) <= 0.6 * a + 1e-6)


@pytest.mark.slow
def test_outliers_are_separated(scene_truth, scene_mesh):
    F = scene_truth.fundamental
    matches = scene_truth.matches
    report = run(scene_mesh, F, 0.6, matches, IRLSConfig(), resolve_orientation(F, matches))
    labels = scene_truth.labels[report.kept]
    flags = classify_inliers(report)
    assert np.mean(flags[labels]) >= 0.95
    assert np.mean(~flags[~labels]) >= 0.95


def test_phase_energy_adds_scaled_bending(flat_mesh):
    rng = np.random.default_rng(4)
    residuals = rng.uniform(0.0, 10.0, size=20)
    targets = flat_mesh.vertices + rng.normal(size=flat_mesh.vertices.shape)
    D = bending_rows(flat_mesh)
    bend = D @ targets.reshape(-1)
    eps = 2.0
    plain = phase_energy(residuals, targets, None, IRLSConfig(), eps)
    assert plain == pytest.approx(float(np.sum(g_pe(residuals, P, eps))), rel=1e-12)
    assert phase_energy(residuals, targets, D, IRLSConfig(smoothness=0.0), eps) == pytest.approx(plain, rel=1e-12)
    smooth = phase_energy(residuals, targets, D, IRLSConfig(smoothness=3.0), eps)
    assert smooth == pytest.approx(plain + 0.5 * P * eps ** (P - 2) * 3.0 * bend @ bend, rel=1e-12)


def test_recovered_fronto_parallel_map_is_undistorted(flat_truth):
    spec = flat_truth.spec
    F = flat_truth.fundamental
    mesh = build(ImageRect(width=spec.width, height=spec.height), F, GridConfig(eta=25.0))
    matches = flat_truth.matches
    report = run(mesh, F, 0.6, matches, IRLSConfig(), resolve_orientation(F, matches))
    distortion = [mu_of(affine_coefficients(mesh, f, report.map)) for f in range(mesh.n_faces)]
    assert max(distortion) <= 1e-4


@pytest.mark.slow
def test_energy_descends_over_seeded_scenes():
    for seed in range(20):
        scene = default_scene if seed % 2 else fronto_parallel_scene
        truth = generate(scene(seed=seed))
        spec = truth.spec
        F = truth.fundamental
        mesh = build(ImageRect(width=spec.width, height=spec.height), F, GridConfig(eta=50.0))
        cfg = IRLSConfig(inner_max_iterations=8)
        report = run(mesh, F, 0.6, truth.matches, cfg, resolve_orientation(F, truth.matches))
        for phase in sorted({r.phase for r in report.energy_trace}):
            energies = report.phase_energies(phase)
            assert energies
            for before, after in zip(energies, energies[1:]):
                assert after <= before * (1 + cfg.descent_slack)
