import logging
from pathlib import Path
from typing import Annotated, Optional

import typer
from rich.console import Console

from src.dependencies import (
    Delta,
    EpsFinal,
    EstimateF,
    Eta,
    Jobs,
    Mu,
    OutDir,
    Power,
    Ratio,
    Reverse,
    Seed,
    Smoothness,
    Step,
    Thresholds,
    Tol,
    get_run_config,
    parse_numbers,
)
from src.helpers import (
    read_features,
    read_fundamental,
    read_ground_truth,
    read_matches,
    read_report,
    read_scene_spec,
    write_features,
    write_fundamental,
    write_ground_truth,
    write_matches,
    write_plmap,
    write_report,
    write_triangulation,
)
from src.helpers.plot_helper import plot_baseline_sweep, write_eval_table, write_sweep_table
from src.models import ImageRect, MatchParams, RansacParams
from src.services import (
    aggregate_reports,
    baseline_sweep,
    default_scene,
    emit_plots,
    epipolar_match,
    estimate_fundamental,
    evaluate,
    generate,
    ratio_match,
    run_scenes,
    solve_matches,
)

logger = logging.getLogger(__name__)
console = Console()

app = typer.Typer(name="ebd", no_args_is_help=True, add_completion=False)


@app.command("gen")
def gen_command(
    out: OutDir = Path("out"),
    spec: Annotated[Optional[Path], typer.Option("--spec", help="Scene spec (YAML); default scene if omitted")] = None,
    seed: Seed = None,
):
    """Generate a synthetic scene: F, both feature files, candidate matches and ground truth."""
    config = get_run_config("gen", out=out, seed=seed)
    scene = read_scene_spec(spec) if spec else default_scene(seed=config.seed)
    if spec and seed is not None:
        scene = scene.model_copy(update={"seed": seed})
    gt = generate(scene)
    files = [
        write_fundamental(gt.fundamental, out / "fundamental.txt"),
        write_features(gt.features_a, out / "features_a.txt"),
        write_features(gt.features_b, out / "features_b.txt"),
        write_matches(gt.matches, out / "matches.csv"),
        write_ground_truth(gt, out / "ground_truth.yaml"),
    ]
    for path in files:
        console.print(f"wrote {path}")


@app.command("match")
def match_command(
    features_a: Annotated[Path, typer.Argument(help="Features of image I")],
    features_b: Annotated[Path, typer.Argument(help="Features of image J")],
    fundamental: Annotated[Optional[Path], typer.Option("--fundamental", "-F", help="F file; estimated when omitted")] = None,
    out: Annotated[Path, typer.Option("--out", help="Match file to write")] = Path("matches.csv"),
    delta: Delta = None,
    ratio: Ratio = None,
    seed: Seed = None,
    reverse: Reverse = False,
):
    """Candidate correspondences inside the epipolar band, with the ratio test."""
    config = get_run_config("match", out=out, delta=delta, ratio=ratio, seed=seed)
    A, B = read_features(features_a), read_features(features_b)
    if reverse:
        A, B = B, A
    if fundamental is not None:
        F = read_fundamental(fundamental)
        F = F.T if reverse else F
    else:
        putative = ratio_match(A, B, config.ratio)
        estimate = estimate_fundamental(
            putative,
            RansacParams(iterations=config.ransac_iterations, threshold=config.ransac_threshold, seed=config.seed),
        )
        F = estimate.fundamental
        path = write_fundamental(F, out.parent / "fundamental_estimated.txt")
        console.print(f"estimated F from {estimate.n_inliers} consensus matches, wrote {path}")
    matches = epipolar_match(A, B, F, MatchParams(delta=config.delta, ratio=config.ratio))
    console.print(f"wrote {write_matches(matches, out)} ({len(matches)} matches)")


@app.command("solve")
def solve_command(
    fundamental: Annotated[Path, typer.Argument(help="Fundamental matrix file")],
    matches: Annotated[Path, typer.Argument(help="Match file (x1,y1,x2,y2)")],
    width: Annotated[float, typer.Option("--width", help="Width of the source image")],
    height: Annotated[float, typer.Option("--height", help="Height of the source image")],
    out: OutDir = Path("out"),
    mu: Mu = None,
    eta: Eta = None,
    p: Power = None,
    eps_final: EpsFinal = None,
    tol: Tol = None,
    smoothness: Smoothness = None,
    seed: Seed = None,
    reverse: Reverse = False,
):
    """Fit an EBD map to the matches; writes report.yaml, map.txt and mesh.txt."""
    config = get_run_config(
        "solve", out=out, mu=mu, eta=eta, p=p, eps_final=eps_final, tol=tol, smoothness=smoothness, seed=seed
    )
    F = read_fundamental(fundamental)
    pairs = read_matches(matches)
    if reverse:
        F, pairs = F.T, pairs.reversed()
    mesh, report = solve_matches(F, pairs, ImageRect(width=width, height=height), config)
    write_report(report, mesh, out / "report.yaml")
    write_plmap(report.map, out / "map.txt")
    write_triangulation(mesh, out / "mesh.txt")
    console.print(
        f"{int(report.inliers.sum())} of {len(pairs)} matches within {report.threshold:g} px; results in {out}"
    )


@app.command("eval")
def eval_command(
    report: Annotated[Path, typer.Argument(help="Solve report (report.yaml)")],
    ground_truth: Annotated[Path, typer.Argument(help="Ground truth (ground_truth.yaml)")],
    out: Annotated[Path, typer.Option("--out", help="Table to write")] = Path("eval.csv"),
    step: Step = None,
    thresholds: Thresholds = None,
):
    """Cumulative error table of a solved map against the ground truth."""
    config = get_run_config("eval", out=out, eval_step=step, thresholds=parse_numbers(thresholds))
    solved, mesh = read_report(report)
    result = evaluate(solved.map, mesh, read_ground_truth(ground_truth), config.thresholds, step=config.eval_step)
    write_eval_table(result, out)
    console.print(f"{100.0 * result.fraction_within_1px:.2f}% of pixels within 1 px; wrote {out}")


@app.command("plot")
def plot_command(
    report: Annotated[Path, typer.Argument(help="Solve report (report.yaml)")],
    ground_truth: Annotated[Path, typer.Argument(help="Ground truth (ground_truth.yaml)")],
    out: Annotated[Path, typer.Option("--out", help="Output stem; .svg and .csv are added")] = Path("eval"),
    step: Step = None,
    thresholds: Thresholds = None,
):
    """Cumulative error curve (SVG) and table (CSV)."""
    config = get_run_config("plot", out=out, eval_step=step, thresholds=parse_numbers(thresholds))
    solved, mesh = read_report(report)
    result = evaluate(solved.map, mesh, read_ground_truth(ground_truth), config.thresholds, step=config.eval_step)
    for path in emit_plots(result, out):
        console.print(f"wrote {path}")


@app.command("batch")
def batch_command(
    out: OutDir = Path("batch"),
    specs: Annotated[Optional[list[Path]], typer.Option("--spec", help="Scene spec; repeat for several")] = None,
    count: Annotated[int, typer.Option("--count", min=1, help="Default scenes to run when no spec is given")] = 4,
    jobs: Jobs = None,
    seed: Seed = None,
    mu: Mu = None,
    eta: Eta = None,
    delta: Delta = None,
    thresholds: Thresholds = None,
    estimate_f: EstimateF = False,
):
    """Median cumulative error over several synthetic pairs."""
    config = get_run_config(
        "batch",
        out=out,
        jobs=jobs,
        seed=seed,
        mu=mu,
        eta=eta,
        delta=delta,
        thresholds=parse_numbers(thresholds),
        estimate_f=estimate_f or None,
    )
    scenes = [read_scene_spec(path) for path in specs] if specs else [
        default_scene(seed=config.seed + k) for k in range(count)
    ]
    reports = run_scenes(scenes, config)
    for k, result in enumerate(reports):
        logger.info("scene %d: %.2f%% within 1 px", k, 100.0 * result.fraction_within_1px)
    median = aggregate_reports(reports)
    label = "EBD, estimated F" if config.estimate_f else "EBD, true F"
    for path in emit_plots(median, out / "batch", label=label):
        console.print(f"wrote {path}")
    console.print(f"median {100.0 * median.fraction_within_1px:.2f}% within 1 px over {len(reports)} scenes")


@app.command("sweep")
def sweep_command(
    out: OutDir = Path("sweep"),
    baselines: Annotated[
        Optional[str], typer.Option("--baselines", help="Comma-separated scales of the camera-2 centre")
    ] = None,
    count: Annotated[int, typer.Option("--count", min=1, help="Default scenes per baseline")] = 4,
    jobs: Jobs = None,
    seed: Seed = None,
    mu: Mu = None,
    eta: Eta = None,
    estimate_f: EstimateF = False,
):
    """Median fraction within 1 px of the default scene as the baseline grows."""
    config = get_run_config(
        "sweep",
        out=out,
        jobs=jobs,
        seed=seed,
        mu=mu,
        eta=eta,
        baseline_factors=parse_numbers(baselines),
        estimate_f=estimate_f or None,
    )
    steps = baseline_sweep(config, count)
    table = write_sweep_table(steps, out / "sweep.csv")
    figure = plot_baseline_sweep(steps, out / "sweep.svg")
    for path in (figure, table):
        console.print(f"wrote {path}")
    for step in steps:
        console.print(f"baseline x{step.factor:g}: median {100.0 * step.fraction_within_1px:.2f}% within 1 px")
