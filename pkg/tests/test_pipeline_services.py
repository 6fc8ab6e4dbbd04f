import numpy as np
import pytest

from src.config import Settings
from src.core import InputError
from src.helpers.plot_helper import SWEEP_HEADER
from src.main import main
from src.models import RunConfig
from src.services import epipole, sampson_distances, scale_baseline, scene_fundamental
from src.services.geometry_services import fundamental_from_cameras
from src.services.pipeline_services import baseline_length, irls_config


def test_run_config_defaults_come_from_settings():
    config = RunConfig(subcommand="eval")
    assert config.thresholds == Settings().thresholds
    assert config.baseline_factors == Settings().baseline_factors
    assert RunConfig.from_settings(Settings(), "eval").thresholds == config.thresholds


def test_threshold_override_from_the_environment(monkeypatch):
    monkeypatch.setenv("EBD_EVAL_THRESHOLDS", "1,3")
    assert RunConfig.from_settings(Settings(), "eval").thresholds == [1.0, 3.0]
    assert RunConfig(subcommand="eval").thresholds == [1.0, 3.0]


def test_irls_config_carries_the_smoothness():
    assert irls_config(RunConfig(subcommand="solve", smoothness=0.0)).smoothness == 0.0
    assert irls_config(RunConfig(subcommand="solve", smoothness=4.0)).smoothness == 4.0


def test_scaling_the_baseline_keeps_the_epipole(scene):
    F = fundamental_from_cameras(scene.camera1, scene.camera2)
    for factor in (0.25, 0.5, 2.0):
        scaled = scale_baseline(scene, factor)
        assert baseline_length(scaled) == pytest.approx(factor * baseline_length(scene), rel=1e-12)
        F_scaled = fundamental_from_cameras(scaled.camera1, scaled.camera2)
        np.testing.assert_allclose(epipole(F_scaled).point, epipole(F).point, atol=1e-6)
    assert baseline_length(scene) == pytest.approx(np.linalg.norm([0.8, 0.05, 0.2]), rel=1e-12)
    with pytest.raises(InputError):
        scale_baseline(scene, 0.0)


def test_scene_fundamental_uses_the_truth_by_default(scene_truth):
    F = scene_fundamental(scene_truth, RunConfig(subcommand="batch"))
    np.testing.assert_array_equal(F.entries, scene_truth.fundamental.entries)


def test_estimated_fundamental_explains_the_true_correspondences(scene_truth):
    F = scene_fundamental(scene_truth, RunConfig(subcommand="batch", estimate_f=True))
    labels = scene_truth.labels
    distances = sampson_distances(F, scene_truth.matches.sources[labels], scene_truth.true_targets[labels])
    assert np.median(distances) <= 1.0


@pytest.mark.slow
def test_sweep_writes_one_row_per_baseline(tmp_path):
    assert main(["sweep", "--baselines", "0.5,1", "--count", "1", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == SWEEP_HEADER
    rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    np.testing.assert_array_equal(rows[:, 0], [0.5, 1.0])
    assert rows[1, 1] == pytest.approx(2.0 * rows[0, 1], rel=1e-12)
    assert np.all((rows[:, 2] >= 0.0) & (rows[:, 2] <= 1.0))
    assert (tmp_path / "sweep.svg").exists()


@pytest.mark.slow
def test_batch_with_an_estimated_fundamental(tmp_path):
    assert main(["batch", "--count", "1", "--estimate-f", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "batch.csv").exists()
