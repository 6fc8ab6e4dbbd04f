from src.helpers.io_helper import (
    atomic_path as atomic_path,
    atomic_write_text as atomic_write_text,
    read_features as read_features,
    read_fundamental as read_fundamental,
    read_ground_truth as read_ground_truth,
    read_matches as read_matches,
    read_plmap as read_plmap,
    read_report as read_report,
    read_scene_spec as read_scene_spec,
    read_triangulation_arrays as read_triangulation_arrays,
    write_features as write_features,
    write_fundamental as write_fundamental,
    write_ground_truth as write_ground_truth,
    write_matches as write_matches,
    write_plmap as write_plmap,
    write_report as write_report,
    write_scene_spec as write_scene_spec,
    write_triangulation as write_triangulation,
)
from src.helpers.program_helper import dump_problem as dump_problem, load_problem as load_problem
