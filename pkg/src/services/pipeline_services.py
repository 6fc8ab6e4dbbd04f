import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

import numpy as np

from src.core import InputError
from src.models import (
    BaselineStep,
    EpipolarTriangulation,
    EvalReport,
    FundamentalMatrix,
    GridConfig,
    GroundTruth,
    ImageRect,
    IRLSConfig,
    MatchParams,
    MatchSet,
    RansacParams,
    RunConfig,
    SceneSpec,
    SolveReport,
)
from src.services.evaluation_services import evaluate
from src.services.geometry_services import resolve_orientation
from src.services.irls_services import run
from src.services.matching_services import epipolar_match, estimate_fundamental, ratio_match
from src.services.synthetic_services import default_scene, generate
from src.services.triangulation_services import build

logger = logging.getLogger(__name__)


def irls_config(config: RunConfig) -> IRLSConfig:
    return IRLSConfig(
        p=config.p,
        eps_final=config.eps_final,
        eps_factor=config.eps_factor,
        mu=config.mu,
        inner_tol=config.inner_tol,
        inner_max_iterations=config.inner_max_iterations,
        solver_tol=config.tol,
        solver_max_iter=config.max_iter,
        smoothness=config.smoothness,
    )


def solve_matches(
    F: FundamentalMatrix, matches: MatchSet, image: ImageRect, config: RunConfig
) -> tuple[EpipolarTriangulation, SolveReport]:
    """Triangulate image I, fix the line orientation from the matches and run IRLS."""
    mesh = build(image, F, GridConfig(eta=config.eta))
    orientation = resolve_orientation(F, matches)
    if orientation < 0:
        logger.info("epipolar lines oriented against the canonical plane")
    report = run(mesh, F, config.mu, matches, irls_config(config), orientation=orientation)
    return mesh, report


def scene_fundamental(gt: GroundTruth, config: RunConfig) -> FundamentalMatrix:
    """The true F, or one estimated by RANSAC from ratio-test matches when ``estimate_f`` is set."""
    if not config.estimate_f:
        return gt.fundamental
    putative = ratio_match(gt.features_a, gt.features_b, config.ratio)
    estimate = estimate_fundamental(
        putative,
        RansacParams(iterations=config.ransac_iterations, threshold=config.ransac_threshold, seed=config.seed),
    )
    logger.info("estimated F from %d of %d putative matches", int(estimate.inliers.sum()), len(putative))
    return estimate.fundamental


def run_scene(spec: SceneSpec, config: RunConfig) -> EvalReport:
    """Generate, match, solve and evaluate one synthetic pair."""
    gt = generate(spec)
    F = scene_fundamental(gt, config)
    matches = epipolar_match(gt.features_a, gt.features_b, F, MatchParams(delta=config.delta, ratio=config.ratio))
    image = ImageRect(width=spec.width, height=spec.height)
    mesh, report = solve_matches(F, matches, image, config)
    return evaluate(report.map, mesh, gt, config.thresholds, step=config.eval_step)


def run_scenes(scenes: Sequence[SceneSpec], config: RunConfig) -> list[EvalReport]:
    if config.jobs > 1 and len(scenes) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            return list(pool.map(run_scene, scenes, [config] * len(scenes)))
    return [run_scene(scene, config) for scene in scenes]


def scale_baseline(spec: SceneSpec, factor: float) -> SceneSpec:
    """Move the camera-2 centre along the baseline; camera 1 sits at the origin."""
    if factor <= 0.0:
        raise InputError("Baseline factor must be positive", details={"factor": factor})
    M1, p1 = spec.camera1[:, :3], spec.camera1[:, 3]
    if not np.allclose(np.linalg.solve(M1, p1), 0.0):
        raise InputError("Baseline scaling needs camera 1 at the origin")
    camera2 = spec.camera2.copy()
    camera2[:, 3] *= factor
    return spec.model_copy(update={"camera2": camera2})


def baseline_length(spec: SceneSpec) -> float:
    M2, p2 = spec.camera2[:, :3], spec.camera2[:, 3]
    return float(np.linalg.norm(np.linalg.solve(M2, p2)))


def baseline_sweep(
    config: RunConfig, count: int, factors: Optional[Sequence[float]] = None
) -> list[BaselineStep]:
    """Median fraction within 1 px over ``count`` default scenes per baseline scale."""
    factors = list(config.baseline_factors if factors is None else factors)
    if not factors or count < 1:
        raise InputError("Sweep needs at least one baseline factor and one scene")
    scenes = [scale_baseline(default_scene(seed=config.seed + k), f) for f in factors for k in range(count)]
    reports = run_scenes(scenes, config)
    steps = []
    for n, factor in enumerate(factors):
        block = reports[n * count : (n + 1) * count]
        median = float(np.median([r.fraction_within_1px for r in block]))
        step = BaselineStep(
            factor=factor, baseline=baseline_length(scenes[n * count]), fraction_within_1px=median, n_scenes=count
        )
        logger.info("baseline x%.3g (%.3f): median %.2f%% within 1 px", factor, step.baseline, 100.0 * median)
        steps.append(step)
    return steps
