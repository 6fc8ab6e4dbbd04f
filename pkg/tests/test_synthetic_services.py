import numpy as np
import pytest

from src.core import InputError
from src.models import GridConfig, ImageRect, Patch, PLMap
from src.services import (
    affine_coefficients,
    build,
    default_scene,
    epipole,
    fronto_parallel_scene,
    generate,
    ground_truth_map,
    mu_of,
    sampson_distances,
)
from src.services.synthetic_services import patch_index

FLAT_SHIFT = np.array([-80.0, -10.0])


def test_default_scene_layout(scene, scene_truth):
    assert len(scene.patches) == 3
    assert len(scene_truth.matches) == sum(p.n_points for p in scene.patches)
    outliers = np.count_nonzero(~scene_truth.labels)
    assert outliers == round(0.3 * len(scene_truth.matches))
    np.testing.assert_allclose(epipole(scene_truth.fundamental).point, [2230.5, 279.0], atol=1e-6)


def test_true_correspondences_are_epipolar(scene_truth):
    F = scene_truth.fundamental
    assert np.max(sampson_distances(F, scene_truth.matches.sources, scene_truth.true_targets)) <= 1e-9


def test_noiseless_candidates_are_epipolar():
    truth = generate(default_scene(seed=1, noise_sigma=0.0, outlier_fraction=0.0))
    assert truth.labels.all()
    np.testing.assert_array_equal(truth.matches.targets, truth.true_targets)
    assert np.max(sampson_distances(truth.fundamental, truth.matches.sources, truth.matches.targets)) <= 1e-9


def test_outliers_sit_in_the_band_away_from_the_truth(scene, scene_truth):
    outliers = ~scene_truth.labels
    sources = scene_truth.matches.sources[outliers]
    targets = scene_truth.matches.targets[outliers]
    truth = scene_truth.true_targets[outliers]
    assert np.all(sampson_distances(scene_truth.fundamental, sources, targets) < scene.delta)
    assert np.mean(np.linalg.norm(targets - truth, axis=1) >= scene.min_outlier_offset) >= 0.95


def test_inlier_noise_level(scene_truth):
    inliers = scene_truth.labels
    noise = scene_truth.matches.targets[inliers] - scene_truth.true_targets[inliers]
    assert 0.2 <= np.std(noise) <= 0.4


def test_generation_is_seeded():
    one, two = generate(default_scene(seed=4)), generate(default_scene(seed=4))
    np.testing.assert_array_equal(one.matches.sources, two.matches.sources)
    np.testing.assert_array_equal(one.matches.targets, two.matches.targets)
    np.testing.assert_array_equal(one.features_b.descriptors, two.features_b.descriptors)
    other = generate(default_scene(seed=5))
    assert not np.array_equal(one.matches.sources, other.matches.sources)


def test_candidate_features_line_up(scene_truth):
    n = len(scene_truth.matches)
    np.testing.assert_array_equal(scene_truth.features_a.keypoints, scene_truth.matches.sources)
    np.testing.assert_array_equal(scene_truth.features_b.keypoints[:n], scene_truth.matches.targets)
    assert len(scene_truth.features_b) == n + scene_truth.spec.distractors


def test_ground_truth_is_continuous_across_folds(scene):
    for x in (153.5, 307.5):
        left = np.array([[x - 1e-6, 100.0], [x - 1e-6, 200.0]])
        right = left + [2e-6, 0.0]
        q_left, ok_left = ground_truth_map(scene, left)
        q_right, ok_right = ground_truth_map(scene, right)
        assert ok_left.all() and ok_right.all()
        assert np.all(patch_index(scene, left) != patch_index(scene, right))
        np.testing.assert_allclose(q_left, q_right, atol=1e-3)


def test_fronto_parallel_map_is_a_translation():
    spec = fronto_parallel_scene()
    rng = np.random.default_rng(0)
    points = rng.uniform([100.0, 20.0], [450.0, 300.0], size=(50, 2))
    q, valid = ground_truth_map(spec, points)
    assert valid.all()
    np.testing.assert_allclose(q, points + FLAT_SHIFT, atol=1e-9)


def test_fronto_parallel_truth_is_undistorted(flat_truth):
    spec = flat_truth.spec
    mesh = build(ImageRect(width=spec.width, height=spec.height), flat_truth.fundamental, GridConfig(eta=25.0))
    phi = PLMap(targets=mesh.vertices + FLAT_SHIFT)
    assert max(mu_of(affine_coefficients(mesh, f, phi)) for f in range(mesh.n_faces)) <= 1e-6


def test_patch_behind_a_camera_is_rejected():
    spec = default_scene()
    behind = spec.model_copy(
        update={"patches": [Patch(plane=[0.0, 0.0, 1.0, 5.0], polygon=spec.patches[1].polygon, n_points=10)]}
    )
    with pytest.raises(InputError):
        generate(behind)


def test_invisible_patch_is_rejected():
    spec = default_scene()
    # This corner of image I transfers past the right edge of image J.
    corner = Patch(plane=[0.0, 0.0, 1.0, -5.0], polygon=[[451, 298], [461, 298], [461, 308], [451, 308]], n_points=10)
    with pytest.raises(InputError):
        generate(spec.model_copy(update={"patches": [corner]}))
