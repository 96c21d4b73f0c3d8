"""Optimality error metrics, the adaptive reflection parameter, and exit logic.

Three metric families share the same residual vectors:

* 2-norm absolutes feeding the weighted KKT restart metric,
* their 1-norm-denominator relatives feeding maxErr and the reflection rule,
* infinity-norm absolutes/relatives feeding the termination test.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import cones
from .linalg import inf_norm, one_norm, two_norm
from .model import ConicProblem, LambdaSet, dual_objective, recover_dual

EXIT_OPTIMAL = 0
EXIT_MAX_ITER = 1
EXIT_PRIMAL_INFEASIBLE_LOW = 2
EXIT_PRIMAL_INFEASIBLE_HIGH = 3
EXIT_DUAL_INFEASIBLE_LOW = 4
EXIT_DUAL_INFEASIBLE_HIGH = 5
EXIT_TIME_LIMIT = 6
EXIT_CONTINUE = 7
EXIT_NUMERICAL_ERROR = 8

EXIT_STATUS = {
    EXIT_OPTIMAL: ":optimal",
    EXIT_MAX_ITER: ":max_iter",
    EXIT_PRIMAL_INFEASIBLE_LOW: ":primal_infeasible_low_acc",
    EXIT_PRIMAL_INFEASIBLE_HIGH: ":primal_infeasible_high_acc",
    EXIT_DUAL_INFEASIBLE_LOW: ":dual_infeasible_low_acc",
    EXIT_DUAL_INFEASIBLE_HIGH: ":dual_infeasible_high_acc",
    EXIT_TIME_LIMIT: ":time_limit",
    EXIT_CONTINUE: ":continue",
    EXIT_NUMERICAL_ERROR: ":numerical_error",
}

EXIT_CODE_FOR_STATUS = {status: code for code, status in EXIT_STATUS.items()}


@dataclass(frozen=True)
class ExitInfo:
    code: int
    status: str
    iterations: int = 0
    wall_time_s: float = 0.0
    p_obj: float = math.nan
    d_obj: float = math.nan

    def __post_init__(self) -> None:
        if EXIT_STATUS.get(self.code) != self.status:
            raise ValueError(f"exit code {self.code} does not map to status {self.status}")


@dataclass(frozen=True)
class ErrorReport:
    """All twelve optimality metrics plus the two objectives."""

    abs_p: float
    abs_d: float
    abs_gap: float
    rel_p1: float
    rel_d1: float
    rel_gap1: float
    abs_p_inf: float
    abs_d_inf: float
    abs_gap_term: float
    rel_p_inf: float
    rel_d_inf: float
    rel_gap_term: float
    primal_obj: float
    dual_obj: float

    def is_finite(self) -> bool:
        return all(
            math.isfinite(v)
            for v in (
                self.abs_p, self.abs_d, self.abs_gap,
                self.abs_p_inf, self.abs_d_inf, self.abs_gap_term,
                self.primal_obj, self.dual_obj,
            )
        )


def compute_errors(
    problem: ConicProblem,
    x: np.ndarray,
    y: np.ndarray,
    gx: np.ndarray | None = None,
    gty: np.ndarray | None = None,
) -> ErrorReport:
    """Evaluate every metric family at (x, y) with lambda = c - G^T y.

    `gx`/`gty` accept precomputed products so the solver loop can reuse its
    cached matvecs.
    """
    if gx is None:
        gx = problem.G.matvec(x)
    if gty is None:
        gty = problem.G.rmatvec(y)
    rec = recover_dual(problem, y, gty=gty)

    residual = gx - problem.h
    res_proj = cones.project_dual_residual_set(residual, problem)
    res_viol = residual - res_proj

    lam1 = rec.lam_box
    lam2 = rec.lam_cone
    lam1_viol = lam1 - LambdaSet.from_bounds(problem.l, problem.u).project(lam1)
    lam2_viol = lam2 - cones.project_primal_cone_dual(lam2, problem)

    p_obj = float(np.dot(problem.c, x))
    d_obj = dual_objective(problem, rec)
    gap = abs(p_obj - d_obj)

    abs_p = two_norm(res_viol)
    abs_d = math.sqrt(two_norm(lam1_viol) ** 2 + two_norm(lam2_viol) ** 2)

    abs_p_inf = inf_norm(res_viol)
    abs_d_inf = max(inf_norm(lam1_viol), inf_norm(lam2_viol))

    denom_p_inf = 1.0 + max(inf_norm(problem.h), inf_norm(gx), inf_norm(res_proj))
    denom_d_inf = 1.0 + max(inf_norm(problem.c), inf_norm(gty))
    denom_gap_term = 1.0 + max(abs(p_obj), abs(d_obj))

    return ErrorReport(
        abs_p=abs_p,
        abs_d=abs_d,
        abs_gap=gap,
        rel_p1=abs_p / (1.0 + one_norm(problem.h)),
        rel_d1=abs_d / (1.0 + one_norm(problem.c)),
        rel_gap1=gap / (1.0 + abs(p_obj) + abs(d_obj)),
        abs_p_inf=abs_p_inf,
        abs_d_inf=abs_d_inf,
        abs_gap_term=gap,
        rel_p_inf=abs_p_inf / denom_p_inf,
        rel_d_inf=abs_d_inf / denom_d_inf,
        rel_gap_term=gap / denom_gap_term,
        primal_obj=p_obj,
        dual_obj=d_obj,
    )


def max_err(report: ErrorReport) -> float:
    """Overall optimality error: the worst of the 1-norm-relative metrics."""
    return max(report.rel_p1, report.rel_d1, report.rel_gap1)


def adaptive_reflection_parameter(report: ErrorReport) -> float:
    """clamp(-0.1*log10(maxErr) + 0.2, 0, 1); an exact optimum gets the clamp limit 1."""
    err = max_err(report)
    if err <= 0.0:
        return 1.0
    return min(max(-0.1 * math.log10(err) + 0.2, 0.0), 1.0)


@dataclass
class CheckContext:
    """The slice of solver state the termination checks need."""

    iterations: int
    elapsed: float
    max_iter: int
    time_limit: float


def check_termination(report: ErrorReport, options, ctx: CheckContext) -> ExitInfo | None:
    """Optimal iff every inf-norm absolute <= abs_tol AND every inf-norm
    relative <= rel_tol; otherwise map resource limits to their codes."""

    def make(code):
        return ExitInfo(
            code=code,
            status=EXIT_STATUS[code],
            iterations=ctx.iterations,
            wall_time_s=ctx.elapsed,
            p_obj=report.primal_obj,
            d_obj=report.dual_obj,
        )

    abs_ok = max(report.abs_p_inf, report.abs_d_inf, report.abs_gap_term) <= options.abs_tol
    rel_ok = max(report.rel_p_inf, report.rel_d_inf, report.rel_gap_term) <= options.rel_tol
    if abs_ok and rel_ok:
        return make(EXIT_OPTIMAL)
    if ctx.elapsed > ctx.time_limit:
        return make(EXIT_TIME_LIMIT)
    if ctx.iterations >= ctx.max_iter:
        return make(EXIT_MAX_ITER)
    return None


@dataclass
class InfeasibilityHistory:
    """Objective trajectories sampled at check cadence (3-check trend window)."""

    dual_objs: deque = field(default_factory=lambda: deque(maxlen=3))
    neg_primal_objs: deque = field(default_factory=lambda: deque(maxlen=3))

    def push(self, report: ErrorReport) -> None:
        self.dual_objs.append(report.dual_obj)
        self.neg_primal_objs.append(-report.primal_obj)


def _strictly_increasing(values: deque) -> bool:
    if len(values) < 3:
        return False
    return all(b > a for a, b in zip(values, list(values)[1:]))


def _project_box_recession(d: np.ndarray, l: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Projection onto the recession cone of [l, u]: {0} where both bounds are
    finite, half-lines where one is, all of R where neither is."""
    out = d.copy()
    lo_fin = np.isfinite(l)
    up_fin = np.isfinite(u)
    out[lo_fin & up_fin] = 0.0
    only_lo = lo_fin & ~up_fin
    only_up = up_fin & ~lo_fin
    out[only_lo] = np.maximum(d[only_lo], 0.0)
    out[only_up] = np.minimum(d[only_up], 0.0)
    return out


def dual_ray_quality(problem: ConicProblem, y: np.ndarray,
                     gty: np.ndarray) -> tuple[float, float] | None:
    """(error, objective) of the normalized dual ray y/||y||.

    The homogeneous certificate drops c: lambda_ray = -G^T y_hat must lie in
    Lambda x K_p* while y_hat h plus the bound support stays positive.  A
    positive objective with vanishing error certifies primal infeasibility.
    """
    ynorm = float(np.linalg.norm(y))
    if ynorm <= 1e-12:
        return None
    lam = -gty / ynorm
    lam1 = lam[: problem.num_box]
    lam2 = lam[problem.num_box:]
    lo_fin = np.isfinite(problem.l)
    up_fin = np.isfinite(problem.u)
    obj = float(np.dot(y, problem.h)) / ynorm
    obj += float(np.dot(problem.l[lo_fin], np.maximum(lam1, 0.0)[lo_fin]))
    obj -= float(np.dot(problem.u[up_fin], np.maximum(-lam1, 0.0)[up_fin]))
    lam1_viol = lam1 - LambdaSet.from_bounds(problem.l, problem.u).project(lam1)
    lam2_viol = lam2 - cones.project_primal_cone_dual(lam2, problem)
    err = max(inf_norm(lam1_viol), inf_norm(lam2_viol))
    return err, obj


def primal_ray_quality(problem: ConicProblem, x: np.ndarray,
                       gx: np.ndarray) -> tuple[float, float] | None:
    """(error, objective) of the normalized primal ray x/||x||.

    The ray must lie in the recession cone of [l, u] x K_p with G x_hat in
    K_d* (h dropped); the objective is -<c, x_hat>."""
    xnorm = float(np.linalg.norm(x))
    if xnorm <= 1e-12:
        return None
    xhat = x / xnorm
    ghat = gx / xnorm
    res_viol = ghat - cones.project_dual_residual_set(ghat, problem)
    box = xhat[: problem.num_box]
    box_viol = box - _project_box_recession(box, problem.l, problem.u)
    cone_part = xhat[problem.num_box:]
    cone_viol = cone_part - cones.project_primal_cone_part(cone_part, problem)
    err = max(inf_norm(res_viol), inf_norm(box_viol), inf_norm(cone_viol))
    obj = -float(np.dot(problem.c, xhat))
    return err, obj


def check_infeasibility(
    problem: ConicProblem,
    x: np.ndarray,
    y: np.ndarray,
    gx: np.ndarray,
    gty: np.ndarray,
    report: ErrorReport,
    history: InfeasibilityHistory,
    options,
    ctx: CheckContext,
) -> ExitInfo | None:
    """Ratio tests for the four infeasibility codes.

    Primal infeasibility divides the dual-side certificate error by the ray
    objective; dual infeasibility is symmetric on the primal ray.  The ratios
    are evaluated on normalized homogeneous rays so that feasible instances,
    whose iterates never carry an improving ray, cannot trip the test.
    Low-accuracy codes additionally require the corresponding objective to
    have increased strictly over the last three checks; high-accuracy codes
    fire on the ratio alone.  Nonpositive ray objectives are skipped.
    """

    def make(code):
        return ExitInfo(
            code=code,
            status=EXIT_STATUS[code],
            iterations=ctx.iterations,
            wall_time_s=ctx.elapsed,
            p_obj=report.primal_obj,
            d_obj=report.dual_obj,
        )

    dual_ray = dual_ray_quality(problem, y, gty)
    if dual_ray is not None and dual_ray[1] > 0.0:
        ratio = dual_ray[0] / dual_ray[1]
        if _strictly_increasing(history.dual_objs) and ratio < options.eps_primal_infeasible_low_acc:
            return make(EXIT_PRIMAL_INFEASIBLE_LOW)
        if ratio < options.eps_primal_infeasible_high_acc:
            return make(EXIT_PRIMAL_INFEASIBLE_HIGH)

    primal_ray = primal_ray_quality(problem, x, gx)
    if primal_ray is not None and primal_ray[1] > 0.0:
        ratio = primal_ray[0] / primal_ray[1]
        if _strictly_increasing(history.neg_primal_objs) and ratio < options.eps_dual_infeasible_low_acc:
            return make(EXIT_DUAL_INFEASIBLE_LOW)
        if ratio < options.eps_dual_infeasible_high_acc:
            return make(EXIT_DUAL_INFEASIBLE_HIGH)
    return None
