import numpy as np
import pytest

from src.core import CoverageError, InputError
from src.helpers.plot_helper import read_eval_table
from src.models import EvalReport, GridConfig, ImageRect, PLMap, RunConfig
from src.services import aggregate_reports, build, default_scene, emit_plots, evaluate
from src.services.evaluation_services import cumulative_fractions, grid_samples
from src.services.pipeline_services import run_scene

FLAT_SHIFT = np.array([-80.0, -10.0])
THRESHOLDS = [0.5, 1.0, 2.0, 5.0]


@pytest.fixture(scope="module")
def flat_mesh(flat_truth):
    spec = flat_truth.spec
    return build(ImageRect(width=spec.width, height=spec.height), flat_truth.fundamental, GridConfig(eta=25.0))


def _report(fractions, thresholds=THRESHOLDS) -> EvalReport:
    return EvalReport(thresholds=thresholds, fractions=fractions, fraction_within_1px=fractions[1] if len(fractions) > 1 else 0.0)


def test_grid_samples_sit_at_cell_centres():
    samples = grid_samples(4.0, 2.0, 2.0)
    np.testing.assert_array_equal(samples, [[1.0, 1.0], [3.0, 1.0]])


def test_cumulative_fractions():
    errors = np.array([0.1, 0.9, 1.0, 3.0, np.inf])
    np.testing.assert_allclose(cumulative_fractions(errors, [0.5, 1.0, 5.0]), [0.2, 0.6, 0.8])
    np.testing.assert_array_equal(cumulative_fractions(np.zeros(0), [1.0]), [0.0])


def test_exact_map_scores_one_everywhere(flat_truth, flat_mesh):
    phi = PLMap(targets=flat_mesh.vertices + FLAT_SHIFT)
    report = evaluate(phi, flat_mesh, flat_truth, THRESHOLDS)
    np.testing.assert_array_equal(report.fractions, [1.0] * len(THRESHOLDS))
    assert report.fraction_within_1px == 1.0
    assert report.coverage == 1.0
    assert report.n_samples > 10_000


def test_offset_map_scores_by_threshold(flat_truth, flat_mesh):
    phi = PLMap(targets=flat_mesh.vertices + FLAT_SHIFT + [2.0, 0.0])
    report = evaluate(phi, flat_mesh, flat_truth, [1.0, 2.0])
    np.testing.assert_array_equal(report.fractions, [0.0, 1.0])
    assert report.fraction_within_1px == 0.0


def test_small_domain_raises_coverage_error(flat_truth):
    mesh = build(ImageRect(width=60.0, height=60.0), flat_truth.fundamental, GridConfig(eta=25.0))
    with pytest.raises(CoverageError):
        evaluate(PLMap(targets=mesh.vertices), mesh, flat_truth, THRESHOLDS)


def test_emit_plots_writes_figure_and_table(tmp_path):
    report = _report(np.array([0.2, 0.5, 0.8, 1.0]))
    figure, table = emit_plots(report, tmp_path / "curve")
    assert figure.suffix == ".svg" and figure.read_text().lstrip().startswith("<?xml")
    thresholds, fractions = read_eval_table(table)
    np.testing.assert_array_equal(thresholds, THRESHOLDS)
    np.testing.assert_array_equal(fractions, report.fractions)
    assert np.all(np.diff(fractions) >= 0)


def test_empty_thresholds_give_a_header_only_table(tmp_path):
    report = EvalReport(thresholds=[], fractions=[], fraction_within_1px=0.0)
    _, table = emit_plots(report, tmp_path / "empty")
    assert table.read_text() == "threshold,fraction\n"


def test_aggregate_takes_the_median():
    reports = [_report(np.array(f)) for f in ([0.1, 0.2, 0.3, 0.4], [0.5, 0.6, 0.7, 0.8], [0.2, 0.9, 0.9, 1.0])]
    median = aggregate_reports(reports)
    np.testing.assert_allclose(median.fractions, [0.2, 0.6, 0.7, 0.8])
    assert median.fraction_within_1px == pytest.approx(0.6)
    with pytest.raises(InputError):
        aggregate_reports([])
    with pytest.raises(InputError):
        aggregate_reports([reports[0], _report(np.array([0.1, 0.2]), thresholds=[1.0, 2.0])])


@pytest.mark.slow
def test_default_scene_is_recovered():
    report = run_scene(default_scene(seed=0), RunConfig(subcommand="batch", thresholds=[1.0, 2.0]))
    assert report.fraction_within_1px >= 0.9
