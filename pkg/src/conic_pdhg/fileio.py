"""Problem and result files.

Problems are versioned JSON documents whose keys mirror the direct solver
API: n, m, nb, c, h, bl, bu, G (coordinate triplets, 0-based), mGzero,
mGnonnegative, socG, expG, dual_expG, and the optional rsocG extension
(rotated rows appended after the dual-exp rows).  Infinities in bl/bu are
encoded as the strings "inf"/"-inf", never as IEEE infinities in text.
The format only expresses box variables, so nb must equal n.
"""

from __future__ import annotations

import json
import math
import warnings

import numpy as np

from .linalg import SparseMatrix
from .model import Cone, ConeSpec, ConicProblem

FORMAT_VERSION = 1

_KNOWN_KEYS = {
    "format_version", "n", "m", "nb", "c", "h", "bl", "bu", "G",
    "mGzero", "mGnonnegative", "socG", "expG", "dual_expG", "rsocG",
}


class ProblemFormatError(ValueError):
    """Raised when a problem file violates the format."""


def _encode_bound(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def _decode_bound(v, key: str) -> float:
    if isinstance(v, str):
        if v == "inf":
            return math.inf
        if v == "-inf":
            return -math.inf
        raise ProblemFormatError(f"{key}: infinite bounds must be 'inf' or '-inf', got {v!r}")
    x = float(v)
    if math.isinf(x) or math.isnan(x):
        raise ProblemFormatError(f"{key}: numeric entries must be finite (use 'inf'/'-inf' strings)")
    return x


def _require(doc: dict, key: str):
    if key not in doc:
        raise ProblemFormatError(f"missing required key {key!r}")
    return doc[key]


def _finite_array(values, key: str) -> np.ndarray:
    arr = np.asarray([float(v) for v in values], dtype=np.float64)
    if arr.size and not np.all(np.isfinite(arr)):
        raise ProblemFormatError(f"{key}: entries must be finite")
    return arr


def problem_to_document(problem: ConicProblem) -> dict:
    """Serialize a box-variable ConicProblem into the file schema."""
    if problem.num_box != problem.n:
        raise ProblemFormatError(
            "the file format only expresses box variables (nb == n); "
            f"got num_box={problem.num_box}, n={problem.n}"
        )
    counts = {Cone.ZERO: 0, Cone.NONNEG: 0}
    soc, exp, dexp, rsoc = [], 0, 0, []
    for spec in problem.dual_cones:
        if spec.kind is Cone.ZERO:
            counts[Cone.ZERO] += spec.dim
        elif spec.kind is Cone.NONNEG:
            counts[Cone.NONNEG] += spec.dim
        elif spec.kind is Cone.SOC:
            soc.append(spec.dim)
        elif spec.kind is Cone.EXP:
            exp += 1
        elif spec.kind is Cone.DUAL_EXP:
            dexp += 1
        elif spec.kind is Cone.RSOC:
            rsoc.append(spec.dim)
    coo = problem.G.tocoo()
    doc = {
        "format_version": FORMAT_VERSION,
        "n": problem.n,
        "m": problem.m,
        "nb": problem.num_box,
        "c": [float(v) for v in problem.c],
        "h": [float(v) for v in problem.h],
        "bl": [_encode_bound(v) for v in problem.l],
        "bu": [_encode_bound(v) for v in problem.u],
        "G": {
            "rows": [int(i) for i in coo.row],
            "cols": [int(j) for j in coo.col],
            "vals": [float(v) for v in coo.data],
        },
        "mGzero": counts[Cone.ZERO],
        "mGnonnegative": counts[Cone.NONNEG],
        "socG": soc,
        "expG": exp,
        "dual_expG": dexp,
    }
    if rsoc:
        doc["rsocG"] = rsoc
    return doc


def document_to_problem(doc: dict) -> ConicProblem:
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        warnings.warn(f"ignoring unknown problem-file keys: {sorted(unknown)}", stacklevel=2)
    version = _require(doc, "format_version")
    if version != FORMAT_VERSION:
        raise ProblemFormatError(f"unsupported format_version {version}")

    n = int(_require(doc, "n"))
    m = int(_require(doc, "m"))
    nb = int(_require(doc, "nb"))
    if nb != n:
        raise ProblemFormatError(f"nb must equal n (box variables only), got nb={nb}, n={n}")

    c = _finite_array(_require(doc, "c"), "c")
    h = _finite_array(_require(doc, "h"), "h")
    if c.shape != (n,):
        raise ProblemFormatError(f"c must have length n={n}, got {c.shape[0]}")
    if h.shape != (m,):
        raise ProblemFormatError(f"h must have length m={m}, got {h.shape[0]}")

    bl = np.array([_decode_bound(v, "bl") for v in _require(doc, "bl")])
    bu = np.array([_decode_bound(v, "bu") for v in _require(doc, "bu")])
    if bl.shape != (nb,) or bu.shape != (nb,):
        raise ProblemFormatError(f"bl and bu must have length nb={nb}")

    g = _require(doc, "G")
    rows = np.asarray(g.get("rows", []), dtype=np.int64)
    cols = np.asarray(g.get("cols", []), dtype=np.int64)
    vals = _finite_array(g.get("vals", []), "G.vals")
    if not (rows.shape == cols.shape == vals.shape):
        raise ProblemFormatError("G.rows, G.cols, G.vals must have equal lengths")
    if rows.size and (rows.min() < 0 or rows.max() >= m):
        raise ProblemFormatError("G.rows entries must lie in [0, m)")
    if cols.size and (cols.min() < 0 or cols.max() >= n):
        raise ProblemFormatError("G.cols entries must lie in [0, n)")

    m_zero = int(doc.get("mGzero", 0))
    m_nonneg = int(doc.get("mGnonnegative", 0))
    soc = [int(d) for d in doc.get("socG", [])]
    exp = int(doc.get("expG", 0))
    dexp = int(doc.get("dual_expG", 0))
    rsoc = [int(d) for d in doc.get("rsocG", [])]
    total = m_zero + m_nonneg + sum(soc) + 3 * exp + 3 * dexp + sum(rsoc)
    if total != m:
        raise ProblemFormatError(
            "row blocks are inconsistent: mGzero + mGnonnegative + sum(socG) "
            f"+ 3*expG + 3*dual_expG + sum(rsocG) = {total} but m = {m}"
        )

    dual = []
    if m_zero:
        dual.append(ConeSpec(Cone.ZERO, m_zero))
    if m_nonneg:
        dual.append(ConeSpec(Cone.NONNEG, m_nonneg))
    dual.extend(ConeSpec(Cone.SOC, d) for d in soc)
    dual.extend(ConeSpec(Cone.EXP, 3) for _ in range(exp))
    dual.extend(ConeSpec(Cone.DUAL_EXP, 3) for _ in range(dexp))
    dual.extend(ConeSpec(Cone.RSOC, d) for d in rsoc)

    return ConicProblem(
        c=c,
        G=SparseMatrix.from_coo(rows, cols, vals, (m, n)),
        h=h,
        l=bl,
        u=bu,
        num_box=nb,
        primal_cones=(),
        dual_cones=tuple(dual),
    )


def parse_problem(path: str) -> ConicProblem:
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ProblemFormatError(f"{path} is not valid JSON: {exc}") from exc
    return document_to_problem(doc)


def serialize_problem(problem: ConicProblem, path: str) -> None:
    with open(path, "w") as f:
        json.dump(problem_to_document(problem), f, indent=1, sort_keys=True, allow_nan=False)
        f.write("\n")


def result_to_document(result, options) -> dict:
    echo = {
        "rel_tol": options.rel_tol,
        "abs_tol": options.abs_tol,
        "time_limit": options.time_limit,
        "max_iter": options.max_iter,
        "method": options.method,
        "use_preconditioner": options.use_preconditioner,
        "use_adaptive_restart": options.use_adaptive_restart,
        "use_adaptive_step_size_weight": options.use_adaptive_step_size_weight,
        "use_kkt_restart": options.use_kkt_restart,
        "kkt_restart_freq": options.kkt_restart_freq,
        "use_duality_gap_restart": options.use_duality_gap_restart,
        "duality_gap_restart_freq": options.duality_gap_restart_freq,
        "eps_primal_infeasible_low_acc": options.eps_primal_infeasible_low_acc,
        "eps_dual_infeasible_low_acc": options.eps_dual_infeasible_low_acc,
        "eps_primal_infeasible_high_acc": options.eps_primal_infeasible_high_acc,
        "eps_dual_infeasible_high_acc": options.eps_dual_infeasible_high_acc,
        "print_freq": options.print_freq,
        "verbose": options.verbose,
    }
    return {
        "format_version": FORMAT_VERSION,
        "exit_code": result.exit_code,
        "exit_status": result.exit_status,
        "pObj": result.p_obj,
        "dObj": result.d_obj,
        "iterations": result.iterations,
        "solve_time_sec": result.solve_time_s,
        "primal": [float(v) for v in result.x],
        "dual": [float(v) for v in result.y],
        "slack": [float(v) for v in result.slack],
        "options": echo,
    }


def write_result(result, options, path: str) -> None:
    with open(path, "w") as f:
        json.dump(result_to_document(result, options), f, indent=1, sort_keys=True)
        f.write("\n")


def load_result(path: str) -> dict:
    with open(path) as f:
        return json.load(f)
