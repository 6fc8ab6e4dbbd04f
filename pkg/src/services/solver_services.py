import logging
from typing import Optional

import clarabel
import numpy as np
from scipy import sparse

from src.core import InputError, SolverStatus
from src.models import ConicProblem, SolverResult

logger = logging.getLogger(__name__)

_CLARABEL_STATUS = {
    "Solved": SolverStatus.OPTIMAL,
    "AlmostSolved": SolverStatus.INACCURATE,
    "PrimalInfeasible": SolverStatus.INFEASIBLE,
    "AlmostPrimalInfeasible": SolverStatus.INFEASIBLE,
    "MaxIterations": SolverStatus.MAX_ITERATIONS,
    "MaxTime": SolverStatus.MAX_ITERATIONS,
}
# A solve already this far inside the gap tolerance is not re-centred.
REFINE_BELOW = 1e-2


def project_soc(v) -> np.ndarray:
    """Euclidean projection onto {(u, t): ||u|| <= t}; t is the last coordinate."""
    v = np.asarray(v, dtype=float)
    u, t = v[:-1], v[-1]
    norm_u = np.linalg.norm(u)
    if norm_u <= t:
        return v.copy()
    if norm_u <= -t:
        return np.zeros_like(v)
    alpha = 0.5 * (norm_u + t)
    return np.append(alpha * u / norm_u, alpha)


def _stack(problem: ConicProblem):
    """Clarabel form A x + s = b with cones in the order zero, nonnegative, SOC."""
    n = problem.n
    blocks, rhs, cones = [], [], []
    if problem.n_eq:
        blocks.append(problem.A)
        rhs.append(problem.b)
        cones.append(clarabel.ZeroConeT(problem.n_eq))
    if problem.n_ineq:
        blocks.append(problem.G)
        rhs.append(problem.h)
        cones.append(clarabel.NonnegativeConeT(problem.n_ineq))
    soc = problem.cones
    if soc.count:
        offsets = soc.offsets
        # Per block: the scalar row (-r', s) followed by its (-M, m) rows.
        order = np.concatenate(
            [np.concatenate([[i], soc.count + np.arange(offsets[i], offsets[i + 1])]) for i in range(soc.count)]
        )
        rows = sparse.vstack([-soc.R, -soc.M]).tocsr()[order]
        blocks.append(rows)
        rhs.append(np.concatenate([soc.s, soc.m])[order])
        cones.extend(clarabel.SecondOrderConeT(k + 1) for k in soc.dims)
    if blocks:
        A = sparse.vstack(blocks).tocsc()
        b = np.concatenate(rhs)
    else:
        A = sparse.csc_matrix((0, n))
        b = np.zeros(0)
    return A, b, cones


def _residuals(problem: ConicProblem, A, b, x, z) -> tuple[float, float, float, float]:
    P = problem.P
    Px = P @ x
    Ax = A @ x
    Atz = A.T @ z
    objective = problem.objective(x)

    dual = Px + problem.q + Atz
    stationarity = np.max(np.abs(dual), initial=0.0) / (
        1.0 + max(np.max(np.abs(problem.q), initial=0.0), np.max(np.abs(Px), initial=0.0), np.max(np.abs(Atz), initial=0.0))
    )

    slack = b - Ax
    violation = []
    n_eq, n_ineq = problem.n_eq, problem.n_ineq
    violation.append(np.abs(slack[:n_eq]))
    violation.append(np.maximum(0.0, -slack[n_eq : n_eq + n_ineq]))
    start = n_eq + n_ineq
    for k in problem.cones.dims:
        block = slack[start : start + k + 1]
        as_ut = np.append(block[1:], block[0])
        violation.append([np.linalg.norm(as_ut - project_soc(as_ut))])
        start += k + 1
    worst = max((np.max(v, initial=0.0) for v in violation), default=0.0)
    primal = worst / (1.0 + max(np.max(np.abs(b), initial=0.0), np.max(np.abs(Ax), initial=0.0)))

    complementarity = abs(float(slack @ z)) / (1.0 + abs(objective))
    return objective, float(stationarity), float(primal), complementarity


def _shifted(problem: ConicProblem, x0: np.ndarray) -> ConicProblem:
    """The same program in the displacement y = x - x0."""
    cones = problem.cones
    update = {
        "q": problem.P @ x0 + problem.q,
        "r": problem.objective(x0),
        "b": problem.b - problem.A @ x0 if problem.n_eq else problem.b,
        "h": problem.h - problem.G @ x0 if problem.n_ineq else problem.h,
    }
    if cones.count:
        update["cones"] = cones.model_copy(update={"m": cones.m + cones.M @ x0, "s": cones.s + cones.R @ x0})
    return problem.model_copy(update=update)


def _clarabel(problem: ConicProblem, A, b, cones, tol: float, max_iter: int):
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = int(max_iter)
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    solver = clarabel.DefaultSolver(
        sparse.triu(problem.P).tocsc(), np.asarray(problem.q, dtype=float), A, b, cones, settings
    )
    return solver.solve()


def _attempt(problem: ConicProblem, x0: np.ndarray, tol: float, max_iter: int) -> SolverResult:
    shifted = _shifted(problem, x0)
    A, b, cones = _stack(shifted)
    solution = _clarabel(shifted, A, b, cones, tol, max_iter)

    name = getattr(solution.status, "name", None) or str(solution.status).split(".")[-1]
    status = _CLARABEL_STATUS.get(name, SolverStatus.NUMERICAL_ERROR)
    y = np.asarray(solution.x, dtype=float)
    z = np.asarray(solution.z, dtype=float)
    if not np.all(np.isfinite(y)) or not np.all(np.isfinite(z)):
        if status in (SolverStatus.OPTIMAL, SolverStatus.INACCURATE):
            status = SolverStatus.NUMERICAL_ERROR
        x = x0 + np.where(np.isfinite(y), y, 0.0)
        objective, stationarity, primal, gap = float("nan"), float("inf"), float("inf"), float("inf")
    else:
        x = x0 + y
        # Slacks and multipliers are shift invariant; residuals are taken on the unshifted data.
        A0, b0, _ = _stack(problem)
        objective, stationarity, primal, gap = _residuals(problem, A0, b0, x, z)
        worst = max(stationarity, primal, gap)
        if status == SolverStatus.OPTIMAL and worst > tol:
            status = SolverStatus.INACCURATE
        elif status == SolverStatus.INACCURATE and worst <= tol:
            status = SolverStatus.OPTIMAL
    return SolverResult(
        status=status,
        x=x,
        objective=objective,
        stationarity=stationarity,
        primal_feasibility=primal,
        complementarity=gap,
        iterations=int(solution.iterations),
    )


def solve(
    problem: ConicProblem,
    tol: float = 1e-8,
    max_iter: int = 200,
    reference: Optional[np.ndarray] = None,
    refinements: int = 1,
) -> SolverResult:
    """Interior-point solve of a convex quadratic cone program.

    The program is solved for the displacement from ``reference`` (the origin
    by default), then re-solved around each accepted solution ``refinements``
    times, so the gap tolerance applies to an objective near zero rather than
    to the size of the coordinates. ``optimal`` is reported only when the
    recomputed KKT residuals are within ``tol``; a converged solve that misses
    it is ``inaccurate``.
    """
    x0 = np.zeros(problem.n) if reference is None else np.asarray(reference, dtype=float).reshape(-1)
    if x0.shape != (problem.n,) or not np.all(np.isfinite(x0)):
        raise InputError("Reference point does not match the program", details={"n": problem.n})
    result = _attempt(problem, x0, tol, max_iter)
    iterations = result.iterations
    for _ in range(refinements):
        if not result.accepted or (result.status == SolverStatus.OPTIMAL and result.complementarity <= REFINE_BELOW * tol):
            break
        refined = _attempt(problem, result.x, tol, max_iter)
        iterations += refined.iterations
        if not refined.accepted or _rank(refined) > _rank(result):
            break
        result = refined

    logger.debug(
        "conic solve: %s after %d iterations, objective %.6g, residuals %.2e / %.2e / %.2e",
        result.status.value,
        iterations,
        result.objective,
        result.stationarity,
        result.primal_feasibility,
        result.complementarity,
    )
    return result.model_copy(update={"iterations": iterations})


def _rank(result: SolverResult) -> tuple[int, float]:
    worst = max(result.stationarity, result.primal_feasibility, result.complementarity)
    return (0 if result.status == SolverStatus.OPTIMAL else 1, worst)
