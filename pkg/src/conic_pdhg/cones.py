"""Euclidean projections onto the supported cone blocks and their duals.

Closed forms cover the box, zero, nonnegative, and second-order cones.  The
exponential cone is projected by reducing the KKT conditions to a univariate
root-finding problem in the exponent multiplier rho (heuristic candidates,
a bracketing step, then safeguarded damped Newton with bisection fallback).
Diagonally rescaled second-order cones reduce to a scalar root in the KKT
multiplier mu.  Dual/polar projections come from the Moreau identity
proj_{K*}(v) = v + proj_K(-v).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .linalg import NumericalError
from .model import Cone, ConicProblem, block_slices


@dataclass(frozen=True)
class ProjectionSettings:
    """Root-finding controls shared by the iterative projections."""

    root_tol: float = 1e-12
    max_root_iters: int = 100


DEFAULT_SETTINGS = ProjectionSettings()


def _safe_exp(x: float) -> float:
    if x >= 709.0:
        return math.inf
    return math.exp(x)


# ---------------------------------------------------------------------------
# Box and second-order cone (closed form)
# ---------------------------------------------------------------------------


def project_box(v: np.ndarray, l: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Componentwise clamp onto [l, u]; bounds may be infinite."""
    both = np.isfinite(l) & np.isfinite(u)
    if np.any(l[both] > u[both]):
        raise ValueError("box projection requires l <= u componentwise")
    return np.clip(v, l, u)


def project_soc(v: np.ndarray) -> np.ndarray:
    """Project (t, xbar) onto {t >= ||xbar||}."""
    t = v[0]
    x = v[1:]
    nx = float(np.linalg.norm(x))
    if nx <= t:
        return v.copy()
    if nx <= -t:
        return np.zeros_like(v)
    coef = 0.5 * (t + nx)
    out = np.empty_like(v)
    out[0] = coef
    out[1:] = (coef / nx) * x
    return out


# ---------------------------------------------------------------------------
# Exponential cone
# ---------------------------------------------------------------------------
#
# K_exp = cl{(a, b, c) : b > 0, c >= b * exp(a/b)}
#       = {b > 0, c >= b e^{a/b}} u {(a, 0, c) : a <= 0, c >= 0}
# K_exp* = {(u, v, w) : u < 0, w > 0, u*log(-u/w) - u + v >= 0}
#          u {(0, v, w) : v >= 0, w >= 0}


def in_exp(v, atol: float = 0.0) -> bool:
    a, b, c = float(v[0]), float(v[1]), float(v[2])
    if b > 0.0:
        ratio = a / b
        if ratio < 709.0 and c >= -atol and c + atol >= b * math.exp(ratio):
            return True
    if -atol <= b <= atol and a <= atol and c >= -atol:
        return True
    return False


def in_dual_exp(v, atol: float = 0.0) -> bool:
    u, vv, w = float(v[0]), float(v[1]), float(v[2])
    if u > atol:
        return False
    if u >= -atol:
        return vv >= -atol and w >= -atol
    if w <= 0.0:
        return False
    return u * math.log(-u / w) - u + vv >= -atol


def _exp_heuristic_primal(r0, s0, t0):
    """Cheap feasible candidate: the flat piece, or lifting t to the graph."""
    vp = (min(r0, 0.0), 0.0, max(t0, 0.0))
    dist = math.sqrt((r0 - vp[0]) ** 2 + s0 * s0 + (t0 - vp[2]) ** 2)
    if s0 > 0.0:
        tp = s0 * _safe_exp(r0 / s0)
        if math.isfinite(tp):
            tp = max(t0, tp)
            if tp - t0 < dist:
                vp = (r0, s0, tp)
                dist = tp - t0
    return vp, dist


def _exp_heuristic_polar(r0, s0, t0):
    vd = (0.0, min(s0, 0.0), min(t0, 0.0))
    dist = math.sqrt(r0 * r0 + (s0 - vd[1]) ** 2 + (t0 - vd[2]) ** 2)
    if r0 > 0.0:
        td = -r0 * _safe_exp(s0 / r0 - 1.0)
        if math.isfinite(td):
            td = min(t0, td)
            if t0 - td < dist:
                vd = (r0, s0, td)
                dist = t0 - td
    return vd, dist


def _hfun(r0, s0, t0, rho):
    quad = rho * (rho - 1.0) + 1.0
    ep = _safe_exp(rho)
    en = _safe_exp(-rho)
    ca = (rho - 1.0) * r0 + s0
    cb = r0 - rho * s0
    # inf * 0 -> treat the vanished coefficient as an exact zero term
    term1 = ca * ep if (math.isfinite(ep) or ca != 0.0) else 0.0
    term2 = cb * en if (math.isfinite(en) or cb != 0.0) else 0.0
    return term1 - term2 - quad * t0


def _hfun_grad(r0, s0, t0, rho):
    ep = _safe_exp(rho)
    en = _safe_exp(-rho)
    f = _hfun(r0, s0, t0, rho)
    df = (rho * r0 + s0) * ep + (r0 - (rho - 1.0) * s0) * en - (2.0 * rho - 1.0) * t0
    return f, df


def _ppsi(r0, s0):
    root = math.sqrt(r0 * r0 + s0 * s0 - r0 * s0)
    if r0 > s0:
        psi = (r0 - s0 + root) / r0
    else:
        psi = -s0 / (r0 - s0 - root)
    return ((psi - 1.0) * r0 + s0) / (psi * (psi - 1.0) + 1.0)


def _dpsi(r0, s0):
    root = math.sqrt(r0 * r0 + s0 * s0 - r0 * s0)
    if s0 > r0:
        psi = (r0 - root) / s0
    else:
        psi = (r0 - s0) / (r0 + root)
    return (r0 - psi * s0) / (psi * (psi - 1.0) + 1.0)


def _pomega(rho):
    val = _safe_exp(rho) / (rho * (rho - 1.0) + 1.0)
    if rho < 2.0:
        val = min(val, math.exp(2.0) / 3.0)
    return val


def _domega(rho):
    val = -_safe_exp(-rho) / (rho * (rho - 1.0) + 1.0)
    if rho > -1.0:
        val = max(val, -math.e / 3.0)
    return val


def _exp_bracket(r0, s0, t0, pdist, ddist):
    """Lower/upper bounds on the root of rho -> h(rho)."""
    eps = 1e-12
    big = 1e15
    low, upr = -big, big
    s0m = min(s0, 0.0)
    r0m = min(r0, 0.0)
    dp = math.sqrt(max(pdist * pdist - s0m * s0m, 0.0))
    dd = math.sqrt(max(ddist * ddist - r0m * r0m, 0.0))

    if t0 > 0.0:
        low = max(low, math.log(t0 / _ppsi(r0, s0)))
    elif t0 < 0.0:
        upr = min(upr, -math.log(-t0 / _dpsi(r0, s0)))

    if r0 > 0.0:
        baselow = 1.0 - s0 / r0
        low = max(low, baselow)
        tpu = max(eps, min(dd, dp + t0))
        pw = _pomega(low)
        if pw > 0.0:
            upr = min(upr, max(low, baselow + tpu / r0 / pw))
    if s0 > 0.0:
        baseupr = r0 / s0
        upr = min(upr, baseupr)
        tdl = -max(eps, min(dp, dd - t0))
        dw = _domega(upr)
        if dw < 0.0:
            low = max(low, min(upr, baseupr - tdl / s0 / dw))

    if low > upr:
        low = upr = 0.5 * (low + upr)
    if low != upr:
        fl = _hfun(r0, s0, t0, low)
        fu = _hfun(r0, s0, t0, upr)
        if fl * fu > 0.0:
            # keep the endpoint closer to a sign change
            if abs(fl) < abs(fu):
                upr = low
            else:
                low = upr
    return low, upr


def _exp_root(r0, s0, t0, xl, xu, settings: ProjectionSettings):
    """Damped Newton on h within [xl, xu], bisection fallback."""
    newton_iters = min(20, settings.max_root_iters)
    x = 0.5 * (xl + xu)
    converged = False
    for _ in range(newton_iters):
        f, df = _hfun_grad(r0, s0, t0, x)
        if abs(f) <= 1e-15:
            converged = True
            break
        if f < 0.0:
            xl = x
        else:
            xu = x
        if xu <= xl:
            return 0.5 * (xl + xu)
        if not math.isfinite(f) or df < 1e-13:
            break
        x_new = x - f / df
        if abs(x_new - x) <= 1e-15 * max(1.0, abs(x_new)):
            x = min(max(x_new, xl), xu)
            converged = True
            break
        if x_new >= xu:
            x = min(0.5 * x + 0.95 * xu, xu)
        elif x_new <= xl:
            x = max(0.5 * x + 0.95 * xl, xl)
        else:
            x = x_new
    if converged:
        return min(max(x, xl), xu)
    for _ in range(settings.max_root_iters - newton_iters):
        x = 0.5 * (xl + xu)
        f = _hfun(r0, s0, t0, x)
        if f < 0.0:
            xl = x
        else:
            xu = x
        if xu - xl <= settings.root_tol * max(1.0, abs(xu)):
            break
    return 0.5 * (xl + xu)


def _exp_primal_from_rho(r0, s0, t0, rho):
    """Projection candidate from the root rho of h.

    lin = (rho-1) r0 + s0 cancels catastrophically when the projection sits
    near the vertical ray (rho large, lin ~ exp(-rho)).  At the root,
    lin * e^rho = (r0 - rho*s0) e^-rho + quad*t0 exactly, and that right side
    is well conditioned precisely where the direct formula is not, so pick
    whichever evaluation has the smaller error scale.
    """
    quad = rho * (rho - 1.0) + 1.0
    en = _safe_exp(-rho)
    lin_direct = (rho - 1.0) * r0 + s0
    lin_exp_id = (r0 - rho * s0) * en + quad * t0  # equals lin * e^rho at the root
    cond_direct = abs(rho - 1.0) * abs(r0) + abs(s0)
    cond_id = (abs(r0 - rho * s0) * en + quad * abs(t0)) * en
    if cond_direct <= cond_id:
        lin = lin_direct
        ep = _safe_exp(rho)
        if lin <= 0.0 or not math.isfinite(ep):
            return None, math.inf
        vp = (rho * lin / quad, lin / quad, ep * lin / quad)
    else:
        lin = lin_exp_id * en
        if lin <= 0.0:
            return None, math.inf
        vp = (rho * lin / quad, lin / quad, lin_exp_id / quad)
    dist = math.sqrt((vp[0] - r0) ** 2 + (vp[1] - s0) ** 2 + (vp[2] - t0) ** 2)
    return vp, dist


def project_exp(v: np.ndarray, settings: ProjectionSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Exact Euclidean projection onto the exponential cone."""
    r0, s0, t0 = float(v[0]), float(v[1]), float(v[2])
    if not (math.isfinite(r0) and math.isfinite(s0) and math.isfinite(t0)):
        raise NumericalError("exponential-cone projection of a non-finite point")
    if in_exp((r0, s0, t0)):
        return np.asarray(v, dtype=np.float64).copy()
    if in_dual_exp((-r0, -s0, -t0)):
        return np.zeros(3)
    if r0 <= 0.0 and s0 <= 0.0:
        # Flat piece {(a, 0, c) : a <= 0, c >= 0} is exact in this region.
        return np.array([r0, 0.0, max(t0, 0.0)])

    vp, pdist = _exp_heuristic_primal(r0, s0, t0)
    vd, ddist = _exp_heuristic_polar(r0, s0, t0)
    tol = 1e-12 * max(1.0, abs(r0), abs(s0), abs(t0))
    moreau_err = max(
        abs(vp[0] + vd[0] - r0), abs(vp[1] + vd[1] - s0), abs(vp[2] + vd[2] - t0)
    )
    inner = vp[0] * vd[0] + vp[1] * vd[1] + vp[2] * vd[2]
    if min(pdist, ddist) <= tol or (moreau_err <= tol and inner <= tol):
        return np.array(vp)

    xl, xu = _exp_bracket(r0, s0, t0, pdist, ddist)
    rho = _exp_root(r0, s0, t0, xl, xu, settings)
    vp_root, dist_root = _exp_primal_from_rho(r0, s0, t0, rho)
    if vp_root is not None and dist_root <= pdist:
        return np.array(vp_root)
    return np.array(vp)


def project_dual_exp(v: np.ndarray, settings: ProjectionSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Moreau identity: proj_{K*}(v) = v + proj_K(-v)."""
    return v + project_exp(-np.asarray(v, dtype=np.float64), settings)


# ---------------------------------------------------------------------------
# Diagonally rescaled second-order cone
# ---------------------------------------------------------------------------
#
# The set is {z : diag(d) z in K_soc} = {(t, y) : t >= ||a o y||} with
# a = d[1:]/d[0].  Stationarity of 0.5||z - v||^2 with multiplier mu on the
# boundary ||a o y||^2 - t^2 = 0 gives
#     y_i(mu) = v_i / (1 + 2 mu a_i^2),   t(mu) = v_0 / (1 - 2 mu),
# and mu solves phi(mu) = ||a o y(mu)||^2 - t(mu)^2 = 0.  For v_0 > 0 the
# root lies in (0, 1/2); for v_0 < 0 in (1/2, inf); v_0 = 0 degenerates to
# mu = 1/2 with t recovered from the boundary equation.


def _rescaled_soc_residual(mu, t0, ay2_over, a2):
    z = ay2_over / (1.0 + 2.0 * mu * a2) ** 2
    t = t0 / (1.0 - 2.0 * mu)
    return float(np.sum(z) - t * t)


def project_rescaled_soc(
    v: np.ndarray, d: np.ndarray, settings: ProjectionSettings = DEFAULT_SETTINGS
) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64)
    if d.shape != v.shape:
        raise ValueError("scale vector must match the block dimension")
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise ValueError("scale entries must be strictly positive and finite")
    if np.all(d == d[0]):
        # A uniform positive scaling leaves the cone unchanged.
        return project_soc(v)

    a = d[1:] / d[0]
    t0 = float(v[0])
    y = v[1:]
    a2 = a * a
    ay2 = a2 * y * y
    # Membership tests share phi's squared arithmetic so a boundary point
    # cannot fall between the fast path and the root bracket.
    if t0 >= 0.0 and t0 * t0 >= float(np.sum(ay2)):
        return v.copy()
    if t0 <= 0.0 and t0 * t0 >= float(np.sum((y / a) ** 2)):
        return np.zeros_like(v)

    if t0 == 0.0:
        zbar = y / (1.0 + a2)
        out = np.empty_like(v)
        out[1:] = zbar
        out[0] = np.linalg.norm(a * zbar)
        return out

    def phi(mu):
        return _rescaled_soc_residual(mu, t0, ay2, a2)

    if t0 > 0.0:
        lo = 0.0
        hi = None
        for j in range(1, 53):
            cand = 0.5 * (1.0 - 2.0 ** (-j))
            if phi(cand) < 0.0:
                hi = cand
                break
        if hi is None:
            raise NumericalError("rescaled-soc projection failed to bracket the multiplier")
    else:
        lo = None
        for j in range(1, 53):
            cand = 0.5 * (1.0 + 2.0 ** (-j))
            if phi(cand) < 0.0:
                lo = cand
                break
        if lo is None:
            raise NumericalError("rescaled-soc projection failed to bracket the multiplier")
        hi = 1.0
        for _ in range(80):
            if phi(hi) > 0.0:
                break
            hi *= 2.0
        else:
            raise NumericalError("rescaled-soc projection failed to bracket the multiplier")

    try:
        mu = brentq(
            phi,
            lo,
            hi,
            xtol=1e-16,
            rtol=8.9e-16,
            maxiter=settings.max_root_iters,
        )
    except (ValueError, RuntimeError) as exc:  # pragma: no cover - defensive
        raise NumericalError(f"rescaled-soc root finding failed: {exc}") from exc

    out = np.empty_like(v)
    out[1:] = y / (1.0 + 2.0 * mu * a2)
    out[0] = t0 / (1.0 - 2.0 * mu)
    return out


# ---------------------------------------------------------------------------
# Block dispatch
# ---------------------------------------------------------------------------

_DUAL_KIND = {
    Cone.ZERO: Cone.FREE,
    Cone.FREE: Cone.ZERO,
    Cone.NONNEG: Cone.NONNEG,
    Cone.SOC: Cone.SOC,
    Cone.EXP: Cone.DUAL_EXP,
    Cone.DUAL_EXP: Cone.EXP,
}


def dual_cone_kind(kind: Cone) -> Cone:
    if kind not in _DUAL_KIND:
        raise ValueError(f"no dual-cone mapping for {kind}")
    return _DUAL_KIND[kind]


def project_cone(
    v: np.ndarray,
    kind: Cone,
    scale: np.ndarray | None = None,
    settings: ProjectionSettings = DEFAULT_SETTINGS,
) -> np.ndarray:
    """Project onto {z : diag(scale) z in K(kind)} (scale None or uniform = plain cone)."""
    uniform = scale is None or np.all(scale == scale[0])
    if kind is Cone.FREE:
        return v.copy()
    if kind is Cone.ZERO:
        return np.zeros_like(v)
    if kind is Cone.NONNEG:
        return np.maximum(v, 0.0)
    if kind is Cone.SOC:
        if uniform:
            return project_soc(v)
        return project_rescaled_soc(v, scale, settings)
    if kind is Cone.EXP or kind is Cone.DUAL_EXP:
        if not uniform:
            raise ValueError(
                f"{kind.value} blocks support only block-uniform scaling; rebuild the scaling"
            )
        return project_exp(v, settings) if kind is Cone.EXP else project_dual_exp(v, settings)
    if kind is Cone.RSOC:
        raise ValueError("rotated blocks must be reformulated (rsoc_to_soc) before projection")
    raise ValueError(f"unknown cone kind {kind}")


def project_cone_dual(
    v: np.ndarray,
    kind: Cone,
    scale: np.ndarray | None = None,
    settings: ProjectionSettings = DEFAULT_SETTINGS,
) -> np.ndarray:
    """Project onto the dual of {z : diag(scale) z in K(kind)}, i.e.
    {w : diag(1/scale) w in K(kind)*}."""
    inv = None if scale is None else 1.0 / scale
    return project_cone(v, dual_cone_kind(kind), inv, settings)


# ---------------------------------------------------------------------------
# Whole-vector set projections
# ---------------------------------------------------------------------------


def project_primal_set(x: np.ndarray, problem: ConicProblem,
                       settings: ProjectionSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Projection onto [l, u] x K_p (with any stored block scalings)."""
    out = np.empty_like(x)
    n1 = problem.num_box
    out[:n1] = project_box(x[:n1], problem.l, problem.u)
    for spec, sl in block_slices(problem.primal_cones, n1):
        out[sl] = project_cone(x[sl], spec.kind, spec.scale, settings)
    return out


def project_dual_set(y: np.ndarray, problem: ConicProblem,
                     settings: ProjectionSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Projection of the dual iterate onto K_d.

    Stored block kinds describe the residual cone K_d*, so each y-block is
    projected onto the dual of its (scaled) stored block; zero-tagged blocks
    leave y free because equality-row multipliers are sign-free.
    """
    out = np.empty_like(y)
    for spec, sl in block_slices(problem.dual_cones):
        out[sl] = project_cone(y[sl], dual_cone_kind(spec.kind), spec.scale, settings)
    return out


def project_dual_residual_set(r: np.ndarray, problem: ConicProblem,
                              settings: ProjectionSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Projection of the constraint residual Gx - h onto K_d*."""
    out = np.empty_like(r)
    for spec, sl in block_slices(problem.dual_cones):
        scale = None if np.all(spec.scale == 1.0) else 1.0 / spec.scale
        out[sl] = project_cone(r[sl], spec.kind, scale, settings)
    return out


def project_primal_cone_part(v: np.ndarray, problem: ConicProblem,
                             settings: ProjectionSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Projection of a length n - num_box vector onto K_p alone."""
    out = np.empty_like(v)
    for spec, sl in block_slices(problem.primal_cones):
        out[sl] = project_cone(v[sl], spec.kind, spec.scale, settings)
    return out


def project_primal_cone_dual(lam: np.ndarray, problem: ConicProblem,
                             settings: ProjectionSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Projection of the cone part of the multiplier lambda_2 onto K_p*."""
    out = np.empty_like(lam)
    for spec, sl in block_slices(problem.primal_cones):
        scale = None if np.all(spec.scale == 1.0) else 1.0 / spec.scale
        out[sl] = project_cone(lam[sl], dual_cone_kind(spec.kind), scale, settings)
    return out
