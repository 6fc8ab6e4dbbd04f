from src.services.affine_services import (
    check_bd,
    check_epipolar_bd,
    conformal_distortion,
    decompose,
    mu_of,
    to_line_frame,
)
from src.services.evaluation_services import aggregate_reports, emit_plots, evaluate
from src.services.geometry_services import (
    epipolar_line,
    epipole,
    fundamental_from_cameras,
    left_epipole,
    line_adapted_similarity,
    orient_epipolar_pair,
    resolve_orientation,
    sampson_distance,
    sampson_distances,
)
from src.services.irls_services import (
    classify_inliers,
    epsilon_schedule,
    evaluate_map,
    g_pe,
    majorizer_weight,
    run,
)
from src.services.matching_services import epipolar_match, estimate_fundamental, ratio_match
from src.services.pipeline_services import (
    baseline_sweep,
    run_scene,
    run_scenes,
    scale_baseline,
    scene_fundamental,
    solve_matches,
)
from src.services.program_services import (
    affine_coefficients,
    bending_rows,
    build_iteration_program,
    dump_program,
    face_cone_rows,
    to_conic_problem,
    vertex_epipolar_rows,
)
from src.services.solver_services import project_soc, solve
from src.services.synthetic_services import default_scene, fronto_parallel_scene, generate, ground_truth_map
from src.services.triangulation_services import barycentric, barycentric_many, build, locate, locate_many

__all__ = [
    "epipole",
    "left_epipole",
    "epipolar_line",
    "sampson_distance",
    "sampson_distances",
    "orient_epipolar_pair",
    "resolve_orientation",
    "line_adapted_similarity",
    "fundamental_from_cameras",
    "decompose",
    "mu_of",
    "conformal_distortion",
    "check_bd",
    "check_epipolar_bd",
    "to_line_frame",
    "build",
    "locate",
    "locate_many",
    "barycentric",
    "barycentric_many",
    "affine_coefficients",
    "vertex_epipolar_rows",
    "face_cone_rows",
    "bending_rows",
    "build_iteration_program",
    "to_conic_problem",
    "dump_program",
    "solve",
    "project_soc",
    "g_pe",
    "majorizer_weight",
    "epsilon_schedule",
    "run",
    "classify_inliers",
    "evaluate_map",
    "epipolar_match",
    "ratio_match",
    "estimate_fundamental",
    "default_scene",
    "fronto_parallel_scene",
    "generate",
    "ground_truth_map",
    "evaluate",
    "aggregate_reports",
    "emit_plots",
    "solve_matches",
    "scene_fundamental",
    "run_scene",
    "run_scenes",
    "scale_baseline",
    "baseline_sweep",
]
