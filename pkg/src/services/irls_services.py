import logging
import math
import tempfile
from pathlib import Path
from typing import Optional

import numpy as np

from src.core import GeometryError, InputError, SolverError, SolverStatus
from src.models import (
    EnergyRecord,
    EpipolarTriangulation,
    FundamentalMatrix,
    IRLSConfig,
    MatchSet,
    MatchTerm,
    PLMap,
    SolveReport,
)
from src.services.program_services import (
    bending_rows,
    build_iteration_program,
    dump_program,
    face_cone_rows,
    to_conic_problem,
    vertex_epipolar_rows,
)
from src.services.solver_services import solve
from src.services.triangulation_services import barycentric, barycentric_many, locate, locate_many

logger = logging.getLogger(__name__)


def g_pe(r, p: float, eps: float):
    """C1 surrogate of r^p: quadratic below eps, r^p above."""
    r = np.asarray(r, dtype=float)
    quadratic = 0.5 * p * eps ** (p - 2.0) * r**2 + (1.0 - 0.5 * p) * eps**p
    power = np.power(np.maximum(r, eps), p)
    out = np.where(r > eps, power, quadratic)
    return float(out) if out.ndim == 0 else out


def majorizer_weight(s, p: float, eps: float):
    out = np.power(np.maximum(np.asarray(s, dtype=float), eps), p - 2.0)
    return float(out) if out.ndim == 0 else out


def majorizer(r, s, p: float, eps: float):
    """Quadratic G(r, s) touching g_pe at r = s and lying above it elsewhere."""
    s = np.asarray(s, dtype=float)
    return 0.5 * p * majorizer_weight(s, p, eps) * np.asarray(r, dtype=float) ** 2 + (
        g_pe(s, p, eps) - 0.5 * p * majorizer_weight(s, p, eps) * s**2
    )


def epsilon_schedule(eps_init: float, eps_final: float, factor: float) -> list[float]:
    stages = max(1, math.ceil(math.log(eps_init / eps_final) / math.log(1.0 / factor)))
    return [float(eps_init * factor**k) for k in range(stages - 1)] + [float(eps_final)]


def phase_energy(residuals, targets: np.ndarray, bending, cfg: IRLSConfig, eps: float) -> float:
    """Sum of g_pe over the matches plus the bending term on the scale of the majorizer."""
    energy = float(np.sum(g_pe(residuals, cfg.p, eps)))
    if bending is not None and cfg.smoothness > 0.0:
        bend = bending @ np.asarray(targets, dtype=float).reshape(-1)
        energy += 0.5 * cfg.p * eps ** (cfg.p - 2.0) * cfg.smoothness * float(bend @ bend)
    return energy


def evaluate_many(phi: PLMap, mesh: EpipolarTriangulation, points) -> tuple[np.ndarray, np.ndarray]:
    """Phi at each point and a mask of the points inside the triangulation."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    faces = locate_many(mesh, pts)
    inside = faces >= 0
    values = np.full(pts.shape, np.nan)
    if np.any(inside):
        weights = barycentric_many(mesh, faces[inside], pts[inside])
        values[inside] = np.einsum("nk,nkd->nd", weights, phi.targets[mesh.faces[faces[inside]]])
    return values, inside


def evaluate_map(phi: PLMap, mesh: EpipolarTriangulation, point) -> np.ndarray:
    face = locate(mesh, point)
    if face is None:
        raise GeometryError("Point lies outside the triangulation", details={"point": np.asarray(point).tolist()})
    weights = barycentric(mesh, face, point)
    return weights @ phi.targets[mesh.faces[face]]


def classify_inliers(report: SolveReport, threshold: Optional[float] = None) -> np.ndarray:
    threshold = report.threshold if threshold is None else threshold
    return report.residuals <= threshold


def _residuals(targets: np.ndarray, mesh: EpipolarTriangulation, faces, weights, goals) -> np.ndarray:
    mapped = np.einsum("nk,nkd->nd", weights, targets[mesh.faces[faces]])
    return np.linalg.norm(mapped - goals, axis=1)


def _dump_failed(program) -> str:
    handle = tempfile.NamedTemporaryFile(prefix="ebd-failed-", suffix=".txt", delete=False)
    handle.close()
    return str(dump_program(program, Path(handle.name)))


def run(
    mesh: EpipolarTriangulation,
    F: FundamentalMatrix,
    mu: Optional[float],
    matches: MatchSet,
    cfg: IRLSConfig,
    orientation: int = 1,
) -> SolveReport:
    """Robust fit of an EBD map to candidate matches.

    Outer loop: epsilon follows a geometric schedule down to eps_final.
    Inner loop: reweighted convex solves until the relative energy change
    drops below inner_tol; an iterate that raises the energy ends the phase.
    """
    mu = cfg.mu if mu is None else float(mu)
    if len(matches) == 0:
        raise InputError("No candidate matches")

    faces = locate_many(mesh, matches.sources)
    kept = np.flatnonzero(faces >= 0)
    dropped = len(matches) - len(kept)
    if dropped:
        logger.warning("%d of %d matches fall outside the triangulation and were dropped", dropped, len(matches))
    if len(kept) == 0:
        raise InputError("No match locates inside the triangulation")
    faces = faces[kept]
    sources = matches.sources[kept]
    goals = matches.targets[kept]
    weights = barycentric_many(mesh, faces, sources)

    equalities = vertex_epipolar_rows(mesh, F)
    cones = face_cone_rows(mesh, F, mu, orientation)
    bending = bending_rows(mesh) if cfg.smoothness > 0.0 else None
    eps_init = cfg.eps_init if cfg.eps_init is not None else mesh.image.diameter
    if cfg.eps_final > eps_init:
        raise InputError("eps_final exceeds the initial epsilon", details={"eps_init": eps_init})
    schedule = epsilon_schedule(eps_init, cfg.eps_final, cfg.eps_factor)
    logger.info(
        "IRLS: %d matches, %d vertices, %d faces, %d epsilon phases",
        len(kept),
        mesh.n_vertices,
        mesh.n_faces,
        len(schedule),
    )

    residuals = np.linalg.norm(sources - goals, axis=1)
    targets: Optional[np.ndarray] = None
    reference = mesh.vertices.reshape(-1)
    trace: list[EnergyRecord] = []
    for phase, eps in enumerate(schedule):
        previous: Optional[float] = None
        for iteration in range(cfg.inner_max_iterations):
            # A match within eps weighs 1; the bending weight is relative to that.
            w = np.atleast_1d(majorizer_weight(residuals, cfg.p, eps)) / majorizer_weight(0.0, cfg.p, eps)
            terms = [
                MatchTerm(face=int(f), weights=c, target=q, weight=float(wm))
                for f, c, q, wm in zip(faces, weights, goals, w)
            ]
            program = build_iteration_program(
                mesh,
                F,
                mu,
                terms,
                orientation,
                equalities=equalities,
                cones=cones,
                smoothness=cfg.smoothness,
                bending=bending,
            )
            result = solve(to_conic_problem(program), cfg.solver_tol, cfg.solver_max_iter, reference=reference)
            if not result.accepted:
                raise SolverError(
                    f"Iteration solve failed: {result.status.value}",
                    details={"phase": phase, "iteration": iteration, "dump": _dump_failed(program)},
                )
            if result.status == SolverStatus.INACCURATE:
                logger.debug("phase %d iteration %d solved to reduced accuracy", phase, iteration)

            candidate = result.x.reshape(-1, 2)
            candidate_residuals = _residuals(candidate, mesh, faces, weights, goals)
            energy = phase_energy(candidate_residuals, candidate, bending, cfg, eps)
            if previous is not None and energy > previous * (1.0 + cfg.descent_slack):
                logger.debug("phase %d: energy rose to %.9g, keeping the previous map", phase, energy)
                break
            targets, residuals = candidate, candidate_residuals
            reference = result.x
            trace.append(EnergyRecord(phase=phase, epsilon=eps, iteration=iteration, energy=energy))
            logger.debug("phase %d iteration %d: eps=%.4g energy=%.9g", phase, iteration, eps, energy)
            if previous is not None and abs(previous - energy) <= cfg.inner_tol * abs(previous):
                break
            previous = energy
        logger.info("epsilon %.4g: energy %.6g", eps, trace[-1].energy if trace else float("nan"))

    touched = np.unique(mesh.faces[faces])
    constrained = np.unique(mesh.ray_ids[touched])
    unconstrained = np.setdiff1d(np.unique(mesh.ray_ids), constrained)
    if len(unconstrained):
        logger.info("%d epipolar lines carry no match term", len(unconstrained))

    threshold = cfg.inlier_threshold
    inliers = residuals <= threshold
    logger.info("IRLS done: %d of %d matches within %.3g px", int(inliers.sum()), len(kept), threshold)
    return SolveReport(
        map=PLMap(targets=targets),
        residuals=residuals,
        inliers=inliers,
        kept=kept,
        dropped=dropped,
        energy_trace=trace,
        eps_schedule=schedule,
        unconstrained_rays=[int(r) for r in unconstrained],
        threshold=threshold,
        orientation=orientation,
    )
