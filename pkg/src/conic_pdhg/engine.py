"""The iteration core: adaptive-step PDHG, reflected Halpern combination,
weighted averaging, and the restart-driven outer loop.

The loop keeps G x and G^T y for the current iterate as exact linear
combinations of the products already computed (the Halpern step is affine),
so each accepted iteration costs one G product and one G^T product; the
caches are refreshed from scratch at every check and restart to stop
round-off drift.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import cones
from . import restart as restarts
from . import scaling as scalings
from . import termination as term
from .linalg import NumericalError, WeightedNormContext, n_norm, omega_norm
from .model import ConicProblem, apply_rsoc_inverse, dual_objective, recover_dual, rsoc_to_soc

_ETA_FLOOR = 1e-12
_ETA_CEIL = 1e14
_MAX_LINE_SEARCH_TRIALS = 60


class IterateZ(NamedTuple):
    """Paired primal/dual iterate."""

    x: np.ndarray
    y: np.ndarray

    def copy(self) -> "IterateZ":
        return IterateZ(self.x.copy(), self.y.copy())


@dataclass
class SolverOptions:
    """Solver parameters; defaults follow the direct-API documentation."""

    rel_tol: float = 1e-6
    abs_tol: float = 1e-6
    time_limit: float = 1000.0
    max_iter: int = 1_000_000
    print_freq: int = 2000
    method: str = "halpern"  # restart-candidate rule: "halpern" or "average"
    use_preconditioner: bool = True
    use_adaptive_restart: bool = True
    use_adaptive_step_size_weight: bool = True
    use_kkt_restart: bool = False
    kkt_restart_freq: int = 2000
    use_duality_gap_restart: bool = True
    duality_gap_restart_freq: int = 2000
    eps_primal_infeasible_low_acc: float = 1e-12
    eps_dual_infeasible_low_acc: float = 1e-12
    eps_primal_infeasible_high_acc: float = 1e-16
    eps_dual_infeasible_high_acc: float = 1e-16
    verbose: int = 0
    logfile: str | None = None
    initial_step_norm: str = "max_abs"  # or "induced_inf"
    ruiz_iterations: int = 10
    use_pock_chambolle: bool = True
    allow_nonuniform_dual_soc: bool = False
    restart_constants: restarts.RestartConstants = field(default_factory=restarts.RestartConstants)
    fixed_reflection_beta: float | None = None
    iteration_callback: Callable | None = None

    def validate(self) -> None:
        for name in ("rel_tol", "abs_tol", "eps_primal_infeasible_low_acc",
                     "eps_dual_infeasible_low_acc", "eps_primal_infeasible_high_acc",
                     "eps_dual_infeasible_high_acc"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("print_freq", "kkt_restart_freq", "duality_gap_restart_freq", "max_iter"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.method not in ("halpern", "average"):
            raise ValueError(f"method must be 'halpern' or 'average', got {self.method!r}")
        if self.initial_step_norm not in ("max_abs", "induced_inf"):
            raise ValueError(
                f"initial_step_norm must be 'max_abs' or 'induced_inf', got {self.initial_step_norm!r}"
            )
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if self.fixed_reflection_beta is not None and not 0 <= self.fixed_reflection_beta <= 1:
            raise ValueError("fixed_reflection_beta must lie in [0, 1]")


@dataclass
class SolverState:
    """Mutable per-solve bookkeeping, exposed to iteration callbacks."""

    z: IterateZ
    z_anchor: IterateZ
    z_prev_anchor: IterateZ | None = None
    z_bar: IterateZ | None = None
    avg_weight: float = 0.0
    t: int = 0
    k: int = 0
    k_bar: int = 0
    eta: float = 0.0
    eta_hat: float = 0.0
    omega: float = 1.0
    beta: float = 0.0
    mode: str = "gap"
    last_restart_gap: float | None = None
    last_restart_kkt: float | None = None
    prev_candidate_gap: float = math.inf


@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    slack: np.ndarray
    exit: term.ExitInfo
    restarts: int

    @property
    def exit_code(self) -> int:
        return self.exit.code

    @property
    def exit_status(self) -> str:
        return self.exit.status

    @property
    def p_obj(self) -> float:
        return self.exit.p_obj

    @property
    def d_obj(self) -> float:
        return self.exit.d_obj

    @property
    def iterations(self) -> int:
        return self.exit.iterations

    @property
    def solve_time_s(self) -> float:
        return self.exit.wall_time_s


# ---------------------------------------------------------------------------
# Single PDHG iteration and the adaptive step-size line search
# ---------------------------------------------------------------------------


def _pdhg_candidate(problem, x, y, tau, sigma, grad_x):
    """One PDHG update given grad_x = c - G^T y; returns the extrapolated
    product G(2 x_hat - x) alongside the candidate."""
    x_hat = cones.project_primal_set(x - tau * grad_x, problem)
    w = problem.G.matvec(2.0 * x_hat - x)
    y_hat = cones.project_dual_set(y + sigma * (problem.h - w), problem)
    return x_hat, y_hat, w


def one_pdhg(problem: ConicProblem, z: IterateZ, tau: float, sigma: float) -> IterateZ:
    """x+ = proj_X(x - tau(c - G'y)); y+ = proj_Y(y + sigma(h - G(2x+ - x)))."""
    if tau <= 0 or sigma <= 0:
        raise ValueError("step sizes must be positive")
    grad_x = problem.c - problem.G.rmatvec(z.y)
    x_hat, y_hat, _ = _pdhg_candidate(problem, z.x, z.y, tau, sigma, grad_x)
    return IterateZ(x_hat, y_hat)


class StepResult(NamedTuple):
    z_hat: IterateZ
    eta_used: float
    eta_next: float
    k_bar: int
    trials: int
    gx_hat: np.ndarray
    gty: np.ndarray


def adaptive_step_pdhg(
    problem: ConicProblem,
    z: IterateZ,
    omega: float,
    eta: float,
    k_bar: int,
    gty: np.ndarray | None = None,
    gx: np.ndarray | None = None,
    max_trials: int = _MAX_LINE_SEARCH_TRIALS,
) -> StepResult:
    """Line search accepting the first candidate with eta < eta_bar, where
    eta_bar = ||dz||_w^2 / (2 |dy' G dx|).

    A zero interaction term makes the curvature condition vacuous, so the
    candidate is accepted with eta_bar = +inf.  Rejections shrink/grow eta by
    the (k_bar+1)^-0.3 / (k_bar+1)^-0.6 factors and advance k_bar; the
    returned proposal is floored at 1e-12.
    """
    if omega <= 0 or eta <= 0:
        raise ValueError("omega and eta must be positive")
    if gty is None:
        gty = problem.G.rmatvec(z.y)
    if gx is None:
        gx = problem.G.matvec(z.x)
    grad_x = problem.c - gty
    # below this movement the candidate is a numerical fixed point and the
    # curvature quotient is quantization noise
    noise_floor = 1e-14 * (1.0 + omega_norm(z.x, z.y, omega))

    for trial in range(max_trials):
        tau = eta / omega
        sigma = eta * omega
        x_hat, y_hat, w = _pdhg_candidate(problem, z.x, z.y, tau, sigma, grad_x)
        dx = x_hat - z.x
        dy = y_hat - z.y
        movement = omega * float(np.dot(dx, dx)) + float(np.dot(dy, dy)) / omega
        # G dx = G x_hat - G x reuses the extrapolated product: G x_hat = (w + gx)/2
        interaction = abs(float(np.dot(dy, w - gx))) / 2.0
        if math.isnan(movement) or math.isnan(interaction):
            raise NumericalError("non-finite quantities in the step-size line search")
        if interaction == 0.0 or math.sqrt(movement) <= noise_floor:
            eta_bar = math.inf
        else:
            eta_bar = movement / (2.0 * interaction)
        if math.isnan(eta_bar):
            raise NumericalError("undefined step-size bound in the line search")

        fac_shrink = 1.0 - (k_bar + 1.0) ** -0.3
        fac_grow = 1.0 + (k_bar + 1.0) ** -0.6
        if math.isinf(eta_bar):
            cand = math.inf if fac_shrink > 0.0 else 0.0
        else:
            cand = fac_shrink * eta_bar
        eta_next = min(max(_ETA_FLOOR, min(cand, fac_grow * eta)), _ETA_CEIL)

        if eta < eta_bar:
            gx_hat = 0.5 * (w + gx)
            return StepResult(IterateZ(x_hat, y_hat), eta, eta_next, k_bar, trial + 1, gx_hat, gty)
        eta = eta_next
        k_bar += 1
    raise NumericalError(f"step-size line search exceeded {max_trials} trials")


def reflected_halpern_step(
    z_hat: IterateZ, z_old: IterateZ, z_anchor: IterateZ, k: int, beta: float
) -> IterateZ:
    """(k+1)/(k+2) ((1+beta) z_hat - beta z_old) + 1/(k+2) z_anchor."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"reflection parameter must lie in [0, 1], got {beta}")
    if k < 0:
        raise ValueError("k must be nonnegative")
    a = (k + 1.0) / (k + 2.0)
    b = 1.0 / (k + 2.0)
    return IterateZ(
        a * ((1.0 + beta) * z_hat.x - beta * z_old.x) + b * z_anchor.x,
        a * ((1.0 + beta) * z_hat.y - beta * z_old.y) + b * z_anchor.y,
    )


def update_weighted_average(
    z_bar: IterateZ | None, weight: float, z_new: IterateZ, eta_new: float
) -> tuple[IterateZ, float]:
    """Streaming step-size-weighted average of the inner-loop iterates."""
    if eta_new <= 0:
        raise ValueError("averaging weight must be positive")
    if z_bar is None or weight == 0.0:
        return z_new.copy(), eta_new
    total = weight + eta_new
    return (
        IterateZ(
            (weight * z_bar.x + eta_new * z_new.x) / total,
            (weight * z_bar.y + eta_new * z_new.y) / total,
        ),
        total,
    )


# ---------------------------------------------------------------------------
# The solve loop
# ---------------------------------------------------------------------------


class _Loop:
    def __init__(self, original: ConicProblem, options: SolverOptions):
        self.original = original
        self.options = options
        self.t_start = time.monotonic()
        self.work = rsoc_to_soc(original)
        if options.use_preconditioner and self.work.G.nnz > 0:
            self.scaling = scalings.build_scaling(
                self.work,
                iterations=options.ruiz_iterations,
                use_pock_chambolle=options.use_pock_chambolle,
                allow_nonuniform_dual_soc=options.allow_nonuniform_dual_soc,
            )
        else:
            self.scaling = scalings.ScalingPair.identity(self.work.m, self.work.n)
        self.scaled = scalings.rescale_problem(self.work, self.scaling)
        self.consts = options.restart_constants
        self.history = term.InfeasibilityHistory()
        self.n_restarts = 0
        self.logfile = None
        self._last_report: term.ErrorReport | None = None

        if options.use_adaptive_restart and options.use_duality_gap_restart:
            self.check_freq = options.duality_gap_restart_freq
            self.base_mode = "gap"
        elif options.use_adaptive_restart and options.use_kkt_restart:
            self.check_freq = options.kkt_restart_freq
            self.base_mode = "kkt"
        else:
            self.check_freq = options.duality_gap_restart_freq
            self.base_mode = "gap"
        self.restarts_enabled = options.use_adaptive_restart and (
            options.use_duality_gap_restart or options.use_kkt_restart
        )

    # -- initialization ----------------------------------------------------

    def _initial_eta(self) -> float:
        g = self.scaled.G
        if g.nnz == 0:
            # No coupling: PDHG degenerates to projected gradient steps and
            # any positive step scale works.
            return 1.0
        if self.options.initial_step_norm == "induced_inf":
            return 1.0 / g.induced_inf_norm()
        return 1.0 / g.max_abs()

    def _init_state(self) -> SolverState:
        n, m = self.scaled.n, self.scaled.m
        z0 = IterateZ(np.zeros(n), np.zeros(m))
        eta0 = self._initial_eta()
        omega0 = restarts.initialize_primal_weight(self.scaled.c, self.scaled.h)
        state = SolverState(
            z=z0,
            z_anchor=z0.copy(),
            eta=eta0,
            eta_hat=eta0,
            omega=omega0,
            mode=self.base_mode,
        )
        self.omega_init = omega0
        self.gx = self.scaled.G.matvec(z0.x)
        self.gty = self.scaled.G.rmatvec(z0.y)
        self.gx_anchor = self.gx.copy()
        self.gty_anchor = self.gty.copy()
        return state

    # -- scaled-problem helpers ---------------------------------------------

    def _refresh_products(self, state: SolverState) -> None:
        self.gx = self.scaled.G.matvec(state.z.x)
        self.gty = self.scaled.G.rmatvec(state.z.y)

    def _gap_query(self, z: IterateZ, radius: float, ctx: WeightedNormContext) -> restarts.GapQuery:
        gx = self.scaled.G.matvec(z.x)
        gty = self.scaled.G.rmatvec(z.y)
        return restarts.GapQuery(
            x=z.x,
            y=z.y,
            b1=gty - self.scaled.c,
            b2=self.scaled.h - gx,
            r=radius,
            ctx=ctx,
            proj_x=lambda v: cones.project_primal_set(v, self.scaled),
            proj_y=lambda v: cones.project_dual_set(v, self.scaled),
        )

    def _gap_metric(self, z: IterateZ, anchor: IterateZ, ctx: WeightedNormContext) -> float:
        radius = n_norm(z.x - anchor.x, z.y - anchor.y, ctx)
        return restarts.normalized_gap(self._gap_query(z, radius, ctx))

    def _kkt_metric(self, z: IterateZ, omega: float) -> float:
        report = term.compute_errors(self.scaled, z.x, z.y)
        return restarts.kkt_omega(report, omega)

    def _baseline_gap(self, state: SolverState) -> None:
        """Restart baseline for the first outer loop: the gap of z0 at the
        radius of one plain PDHG step from z0."""
        ctx = WeightedNormContext(state.omega, state.eta_hat)
        z_ref = one_pdhg(self.scaled, state.z, ctx.tau, ctx.sigma)
        radius = n_norm(state.z.x - z_ref.x, state.z.y - z_ref.y, ctx)
        try:
            query = self._gap_query(state.z, radius, ctx)
            state.last_restart_gap = restarts.normalized_gap(query)
        except restarts.GapEvaluationError:
            state.mode = "kkt"
            state.last_restart_kkt = self._kkt_metric(state.z, state.omega)

    # -- original-problem report --------------------------------------------

    def _original_point(self, z: IterateZ):
        x_w, y_w = scalings.unscale_solution(z.x, z.y, self.scaling)
        return x_w, y_w

    def _original_report(self, z: IterateZ):
        x, y = self._original_point(z)
        gx = self.work.G.matvec(x)
        gty = self.work.G.rmatvec(y)
        report = term.compute_errors(self.work, x, y, gx=gx, gty=gty)
        return report, x, y, gx, gty

    # -- logging -------------------------------------------------------------

    def _log_line(self, state: SolverState, report: term.ErrorReport | None) -> None:
        if report is None:
            return
        line = (
            f"{state.k_bar}\t{report.primal_obj:.9e}\t{report.dual_obj:.9e}"
            f"\t{report.rel_p_inf:.3e}\t{report.rel_d_inf:.3e}\t{report.rel_gap_term:.3e}"
            f"\t{state.eta:.3e}\t{state.omega:.3e}\t{state.t}"
        )
        if self.options.verbose >= 1:
            print(line)
        if self.logfile is not None:
            self.logfile.write(line + "\n")

    # -- main loop -----------------------------------------------------------

    def run(self) -> SolveResult:
        options = self.options
        if options.logfile:
            self.logfile = open(options.logfile, "w")
        try:
            return self._run()
        finally:
            if self.logfile is not None:
                self.logfile.close()

    def _check_ctx(self, state: SolverState) -> term.CheckContext:
        return term.CheckContext(
            iterations=state.k_bar,
            elapsed=time.monotonic() - self.t_start,
            max_iter=self.options.max_iter,
            time_limit=self.options.time_limit,
        )

    def _termination_scan(self, state: SolverState, with_infeasibility: bool) -> term.ExitInfo | None:
        """Evaluate the original-problem report at the current iterate and run
        the exit tests; also emits the periodic log line."""
        report, x, y, gx, gty = self._original_report(state.z)
        self._last_report = report
        if not (
            np.all(np.isfinite(state.z.x))
            and np.all(np.isfinite(state.z.y))
            and report.is_finite()
        ):
            ctx = self._check_ctx(state)
            return term.ExitInfo(
                code=term.EXIT_NUMERICAL_ERROR,
                status=term.EXIT_STATUS[term.EXIT_NUMERICAL_ERROR],
                iterations=ctx.iterations,
                wall_time_s=ctx.elapsed,
            )
        ctx = self._check_ctx(state)
        info = term.check_termination(report, self.options, ctx)
        if info is None and with_infeasibility:
            self.history.push(report)
            info = term.check_infeasibility(
                self.work, x, y, gx, gty, report, self.history, self.options, ctx
            )
        return info

    def _restart_check(self, state: SolverState) -> None:
        """Evaluate the restart metric for both candidates and restart if any
        trigger fires.  Gap-mode numerical trouble flips the rest of this
        inner loop to the weighted-KKT metric."""
        ctx = WeightedNormContext(state.omega, state.eta)
        candidates_gap = None
        if state.mode == "gap":
            try:
                if state.last_restart_gap is None:
                    prev = state.z_prev_anchor
                    radius = n_norm(
                        state.z_anchor.x - prev.x, state.z_anchor.y - prev.y, ctx
                    )
                    state.last_restart_gap = restarts.normalized_gap(
                        self._gap_query(state.z_anchor, radius, ctx)
                    )
                metric = lambda z: self._gap_metric(z, state.z_anchor, ctx)  # noqa: E731
                if self.options.method == "average":
                    cand, cand_val, chose_last = state.z_bar, metric(state.z_bar), False
                else:
                    cand, cand_val, chose_last = restarts.get_restart_candidate(
                        state.z, state.z_bar, metric
                    )
                if cand_val < -1e-12 or state.last_restart_gap < -1e-12:
                    state.mode = "kkt"
                else:
                    candidates_gap = (cand, cand_val, state.last_restart_gap)
            except restarts.GapEvaluationError:
                state.mode = "kkt"

        if candidates_gap is None:
            # KKT fallback (or configured KKT restarts)
            if state.last_restart_kkt is None:
                state.last_restart_kkt = self._kkt_metric(state.z_anchor, state.omega)
            metric = lambda z: self._kkt_metric(z, state.omega)  # noqa: E731
            if self.options.method == "average":
                cand, cand_val, chose_last = state.z_bar, metric(state.z_bar), False
            else:
                cand, cand_val, chose_last = restarts.get_restart_candidate(
                    state.z, state.z_bar, metric
                )
            baseline = state.last_restart_kkt
        else:
            cand, cand_val, baseline = candidates_gap

        if restarts.should_restart(
            cand_val, state.prev_candidate_gap, baseline, state.k, state.k_bar, self.consts
        ):
            self._do_restart(state, cand.copy(), cand_val)
        else:
            state.prev_candidate_gap = cand_val

    def _do_restart(self, state: SolverState, candidate: IterateZ, cand_val: float) -> None:
        state.z_prev_anchor = state.z_anchor
        state.z_anchor = candidate.copy()
        state.z = candidate
        if self.options.use_adaptive_step_size_weight:
            dx = float(np.linalg.norm(state.z_anchor.x - state.z_prev_anchor.x))
            dy = float(np.linalg.norm(state.z_anchor.y - state.z_prev_anchor.y))
            state.omega = restarts.update_primal_weight(
                dx, dy, state.omega, self.omega_init, self.consts
            )
        state.t += 1
        self.n_restarts += 1
        state.k = 0
        state.z_bar = None
        state.avg_weight = 0.0
        state.prev_candidate_gap = math.inf
        if state.mode == "gap":
            state.last_restart_gap = cand_val
            state.last_restart_kkt = None
        else:
            state.last_restart_kkt = cand_val
            state.last_restart_gap = None
        state.mode = self.base_mode
        self._refresh_products(state)
        self.gx_anchor = self.gx.copy()
        self.gty_anchor = self.gty.copy()

    def _run(self) -> SolveResult:
        options = self.options
        state = self._init_state()
        if self.restarts_enabled and state.mode == "gap":
            self._baseline_gap(state)

        if options.verbose >= 2:
            print(
                f"conic-pdhg: n={self.original.n} m={self.original.m} "
                f"nnz={self.original.G.nnz} precondition={options.use_preconditioner}"
            )

        # Entry check: a solve started at an optimum must return immediately.
        exit_info = self._termination_scan(state, with_infeasibility=False)
        if exit_info is None:
            self._log_line(state, self._last_report)
        adaptive = options.use_adaptive_step_size_weight

        while exit_info is None:
            try:
                # k_bar counts every PDHG computation, including the one about
                # to happen, so the line-search factors never see the
                # degenerate value 0 after the solve starts.
                state.k_bar += 1
                if adaptive:
                    step = adaptive_step_pdhg(
                        self.scaled, state.z, state.omega, state.eta_hat, state.k_bar,
                        gty=self.gty, gx=self.gx,
                    )
                else:
                    ctx = WeightedNormContext(state.omega, state.eta_hat)
                    grad_x = self.scaled.c - self.gty
                    x_hat, y_hat, w = _pdhg_candidate(
                        self.scaled, state.z.x, state.z.y, ctx.tau, ctx.sigma, grad_x
                    )
                    step = StepResult(
                        IterateZ(x_hat, y_hat), state.eta_hat, state.eta_hat,
                        state.k_bar, 1, 0.5 * (w + self.gx), self.gty,
                    )
                z_hat = step.z_hat
                state.eta = step.eta_used
                state.eta_hat = step.eta_next
                state.k_bar = step.k_bar  # rejected trials also advance the count

                gty_hat = self.scaled.G.rmatvec(z_hat.y)
                gx_hat = step.gx_hat
                if options.fixed_reflection_beta is not None:
                    beta = options.fixed_reflection_beta
                else:
                    rep_hat = term.compute_errors(
                        self.scaled, z_hat.x, z_hat.y, gx=gx_hat, gty=gty_hat
                    )
                    beta = term.adaptive_reflection_parameter(rep_hat)
                state.beta = beta

                k = state.k
                z_new = reflected_halpern_step(z_hat, state.z, state.z_anchor, k, beta)
                a = (k + 1.0) / (k + 2.0)
                b = 1.0 / (k + 2.0)
                self.gx = a * ((1.0 + beta) * gx_hat - beta * self.gx) + b * self.gx_anchor
                self.gty = a * ((1.0 + beta) * gty_hat - beta * self.gty) + b * self.gty_anchor
                state.z = z_new
                state.z_bar, state.avg_weight = update_weighted_average(
                    state.z_bar, state.avg_weight, state.z, state.eta
                )
                state.k += 1
            except NumericalError:
                ctx = self._check_ctx(state)
                exit_info = term.ExitInfo(
                    code=term.EXIT_NUMERICAL_ERROR,
                    status=term.EXIT_STATUS[term.EXIT_NUMERICAL_ERROR],
                    iterations=ctx.iterations,
                    wall_time_s=ctx.elapsed,
                )
                break

            if options.iteration_callback is not None:
                options.iteration_callback(state)

            elapsed = time.monotonic() - self.t_start
            out_of_budget = state.k_bar >= options.max_iter or elapsed > options.time_limit
            at_check = state.k_bar % self.check_freq == 0 or out_of_budget
            at_print = state.k_bar % options.print_freq == 0

            if at_check:
                self._refresh_products(state)
                exit_info = self._termination_scan(state, with_infeasibility=True)
                if exit_info is None and at_print:
                    self._log_line(state, self._last_report)
                if exit_info is None and self.restarts_enabled and state.k >= 1:
                    try:
                        before = state.t
                        self._restart_check(state)
                        if state.t != before:
                            # Restart boundary: re-test termination at the new anchor.
                            exit_info = self._termination_scan(state, with_infeasibility=False)
                    except NumericalError:
                        ctx = self._check_ctx(state)
                        exit_info = term.ExitInfo(
                            code=term.EXIT_NUMERICAL_ERROR,
                            status=term.EXIT_STATUS[term.EXIT_NUMERICAL_ERROR],
                            iterations=ctx.iterations,
                            wall_time_s=ctx.elapsed,
                        )
            elif at_print and (options.verbose >= 1 or self.logfile is not None):
                report, *_ = self._original_report(state.z)
                self._last_report = report
                self._log_line(state, report)

        if options.verbose >= 1 or self.logfile is not None:
            self._log_line(state, self._last_report)
            if options.verbose >= 1:
                print(f"status {exit_info.status} code {exit_info.code} "
                      f"iters {exit_info.iterations} time {exit_info.wall_time_s:.3f}s")

        return self._build_result(state, exit_info)

    def _build_result(self, state: SolverState, exit_info: term.ExitInfo) -> SolveResult:
        x_w, y_w = self._original_point(state.z)
        slack_w = self.work.G.matvec(x_w) - self.work.h
        x, y, slack = apply_rsoc_inverse(self.original, x_w, y_w, slack_w)
        rec = recover_dual(self.original, y)
        p_obj = float(np.dot(self.original.c, x))
        d_obj = dual_objective(self.original, rec)
        final = term.ExitInfo(
            code=exit_info.code,
            status=exit_info.status,
            iterations=exit_info.iterations,
            wall_time_s=time.monotonic() - self.t_start,
            p_obj=p_obj,
            d_obj=d_obj,
        )
        return SolveResult(
            x=x, y=y, lam=rec.lam, slack=slack, exit=final, restarts=self.n_restarts
        )


def solve(problem: ConicProblem, options: SolverOptions | None = None) -> SolveResult:
    """Presolve rotated blocks, precondition, run the restarted PDHG loop,
    and map the solution back to the original instance."""
    if options is None:
        options = SolverOptions()
    options.validate()
    return _Loop(problem, options).run()
