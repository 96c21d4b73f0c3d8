"""Diagonal preconditioning: build D1, D2, rescale the instance, map back.

The rescaled instance replaces G by D1 G D2 with c_hat = D2 c, h_hat = D1 h,
l_hat = D2^-1 l, u_hat = D2^-1 u.  Cone blocks pick up their diagonal slice
(primal blocks a slice of d2, dual blocks a slice of d1); membership in a
rescaled block is diag(slice) z in K.  Exponential blocks only admit
block-uniform scaling, enforced here by a geometric mean, as are dual-side
second-order blocks unless `allow_nonuniform_dual_soc` is set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Cone, ConicProblem, block_slices

_SCALE_CLAMP_LO = 1e-8
_SCALE_CLAMP_HI = 1e8


@dataclass(frozen=True)
class ScalingPair:
    """Row scales d1 (length m) and column scales d2 (length n)."""

    d1: np.ndarray
    d2: np.ndarray

    def __post_init__(self) -> None:
        for name, d in (("d1", self.d1), ("d2", self.d2)):
            if np.any(d <= 0) or not np.all(np.isfinite(d)):
                raise ValueError(f"{name} entries must be strictly positive and finite")

    @classmethod
    def identity(cls, m: int, n: int) -> "ScalingPair":
        return cls(np.ones(m), np.ones(n))


def _safe_inv_sqrt(v: np.ndarray) -> np.ndarray:
    """1/sqrt(v) with zero entries mapped to a unit (no-op) scale."""
    out = np.ones_like(v)
    nz = v > 0
    out[nz] = 1.0 / np.sqrt(v[nz])
    return out


def _geometric_mean(v: np.ndarray) -> float:
    return float(np.exp(np.mean(np.log(v))))


def _enforce_block_uniformity(
    d: np.ndarray, specs, offset: int, allow_nonuniform_soc: bool
) -> np.ndarray:
    out = d.copy()
    for spec, sl in block_slices(specs, offset):
        uniform = spec.kind in (Cone.EXP, Cone.DUAL_EXP, Cone.RSOC) or (
            spec.kind is Cone.SOC and not allow_nonuniform_soc
        )
        if uniform:
            out[sl] = _geometric_mean(out[sl])
    return out


def build_scaling(
    problem: ConicProblem,
    iterations: int = 10,
    use_pock_chambolle: bool = True,
    allow_nonuniform_dual_soc: bool = False,
) -> ScalingPair:
    """Ruiz equilibration followed by an optional Pock-Chambolle (alpha=1) pass.

    Each Ruiz round divides rows and columns by the square root of their
    current max-abs (computed simultaneously from the same snapshot); the
    Pock-Chambolle pass uses 1/sqrt of the row/column 1-norms.  Afterwards
    block-uniformity constraints are enforced and scales clamped to
    [1e-8, 1e8].
    """
    if problem.G.nnz == 0:
        raise ValueError("build_scaling needs a nonzero constraint matrix")

    d1 = np.ones(problem.m)
    d2 = np.ones(problem.n)
    g = problem.G
    for _ in range(iterations):
        r = _safe_inv_sqrt(g.row_max_abs())
        c = _safe_inv_sqrt(g.col_max_abs())
        d1 *= r
        d2 *= c
        g = g.scaled(r, c)

    if use_pock_chambolle:
        r = _safe_inv_sqrt(g.row_abs_sums())
        c = _safe_inv_sqrt(g.col_abs_sums())
        d1 *= r
        d2 *= c

    # Primal cone blocks sit after the box variables in the columns; exp and
    # (by default) dual soc blocks must stay projectable in closed/1-d form.
    d2 = _enforce_block_uniformity(d2, problem.primal_cones, problem.num_box, True)
    d1 = _enforce_block_uniformity(d1, problem.dual_cones, 0, allow_nonuniform_dual_soc)

    return ScalingPair(
        d1=np.clip(d1, _SCALE_CLAMP_LO, _SCALE_CLAMP_HI),
        d2=np.clip(d2, _SCALE_CLAMP_LO, _SCALE_CLAMP_HI),
    )


def rescale_problem(problem: ConicProblem, s: ScalingPair) -> ConicProblem:
    """Apply (d1, d2): the returned instance stores its block scale slices."""
    d1, d2 = s.d1, s.d2
    if d1.shape != (problem.m,) or d2.shape != (problem.n,):
        raise ValueError("scaling dimensions do not match the problem")

    d2_box = d2[: problem.num_box]
    with np.errstate(invalid="ignore"):
        l_hat = problem.l / d2_box
        u_hat = problem.u / d2_box

    primal = tuple(
        spec.with_scale(d2[sl])
        for spec, sl in block_slices(problem.primal_cones, problem.num_box)
    )
    dual = tuple(spec.with_scale(d1[sl]) for spec, sl in block_slices(problem.dual_cones))

    return ConicProblem(
        c=problem.c * d2,
        G=problem.G.scaled(d1, d2),
        h=problem.h * d1,
        l=l_hat,
        u=u_hat,
        num_box=problem.num_box,
        primal_cones=primal,
        dual_cones=dual,
    )


def unscale_solution(x_tilde: np.ndarray, y_tilde: np.ndarray, s: ScalingPair):
    """Map a rescaled-problem solution back: x = D2 x~, y = D1 y~."""
    return x_tilde * s.d2, y_tilde * s.d1
