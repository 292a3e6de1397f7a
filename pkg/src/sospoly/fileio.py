"""JSON/CSV formats for problems, solutions, certificates, and point sets.

All writes are atomic (temp file + rename). Serialized output is
deterministic apart from the top-level "timestamp" field, which consumers
should exclude when comparing files.
"""

from __future__ import annotations

import csv
import datetime
import json
import os
import tempfile

import numpy as np

from .hsd import ConicProblem, SolveResult
from .interpolation import BoxDomain, PointSet, points_for_degree
from .problems import PolySpec, builtin_poly, chebyshev_poly
from .wsos import InterpWSOSCone, ProductCone


class SchemaError(ValueError):
    """Malformed input file; the message carries the offending field path."""


def write_atomic(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(path: str, obj):
    obj = dict(obj)
    obj["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _require(cond, path, msg):
    if not cond:
        raise SchemaError(f"{path}: {msg}")


def _num_list(obj, path):
    _require(isinstance(obj, list) and len(obj) > 0, path, "expected a nonempty array")
    arr = np.asarray(obj, dtype=float)
    _require(np.all(np.isfinite(arr)), path, "entries must be finite numbers")
    return arr


# ---------------------------------------------------------------------------
# problems


def problem_to_dict(problem: ConicProblem) -> dict:
    cones = []
    for factor in problem.cone.factors:
        blocks = []
        for i, B in enumerate(factor.blocks):
            entry = {"L": B.shape[1], "P_scaled": [float(v) for v in B.ravel()]}
            if factor.weights is not None:
                entry["weight"] = factor.weights[i].label
                entry["degree"] = factor.weights[i].degree
            blocks.append(entry)
        cones.append({"type": "wsos_interp", "U": factor.U, "blocks": blocks})
    return {
        "A": [[float(v) for v in row] for row in problem.A],
        "b": [float(v) for v in problem.b],
        "c": [float(v) for v in problem.c],
        "cones": cones,
    }


def problem_from_dict(data: dict, allow_rank_deficient=False) -> ConicProblem:
    _require(isinstance(data, dict), "$", "expected a JSON object")
    for key in ("A", "b", "c", "cones"):
        _require(key in data, key, "missing required field")
    A = _num_list(data["A"], "A")
    _require(A.ndim == 2, "A", "expected a matrix (array of arrays)")
    b = _num_list(data["b"], "b")
    c = _num_list(data["c"], "c")
    _require(A.shape[0] == b.size, "b", f"expected {A.shape[0]} entries to match rows of A")
    _require(A.shape[1] == c.size, "c", f"expected {A.shape[1]} entries to match columns of A")

    cones = data["cones"]
    _require(isinstance(cones, list) and cones, "cones", "expected a nonempty array")
    factors = []
    for ci, entry in enumerate(cones):
        path = f"cones[{ci}]"
        _require(isinstance(entry, dict), path, "expected an object")
        _require(entry.get("type") == "wsos_interp", f"{path}.type",
                 "only 'wsos_interp' cones are supported")
        U = entry.get("U")
        _require(isinstance(U, int) and U > 0, f"{path}.U", "expected a positive integer")
        blocks_data = entry.get("blocks")
        _require(isinstance(blocks_data, list) and blocks_data, f"{path}.blocks",
                 "expected a nonempty array")
        blocks = []
        for bi, bd in enumerate(blocks_data):
            bpath = f"{path}.blocks[{bi}]"
            L = bd.get("L") if isinstance(bd, dict) else None
            _require(isinstance(L, int) and 0 < L <= U, f"{bpath}.L",
                     f"expected an integer in [1, {U}]")
            flat = _num_list(bd.get("P_scaled"), f"{bpath}.P_scaled")
            _require(flat.size == U * L, f"{bpath}.P_scaled",
                     f"expected {U * L} row-major entries, got {flat.size}")
            blocks.append(flat.reshape(U, L))
        factors.append(InterpWSOSCone(blocks))
    cone = ProductCone(factors)
    _require(cone.dim == c.size, "cones",
             f"total cone dimension {cone.dim} does not match len(c) = {c.size}")
    return ConicProblem(A, b, c, cone, allow_rank_deficient=allow_rank_deficient)


def load_problem(path: str, allow_rank_deficient=False) -> ConicProblem:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"$: invalid JSON ({exc})") from exc
    return problem_from_dict(data, allow_rank_deficient=allow_rank_deficient)


# ---------------------------------------------------------------------------
# solutions


def solution_to_dict(result: SolveResult) -> dict:
    out = {
        "status": result.status,
        "primal_objective": result.primal_objective,
        "dual_objective": result.dual_objective,
        "residuals": {
            "primal_infeasibility": result.rel_primal_infeas,
            "dual_infeasibility": result.rel_dual_infeas,
            "gap": result.rel_gap,
        },
        "iterations": result.iterations,
        "message": result.message,
    }
    if result.x is not None:
        out["x"] = [float(v) for v in result.x]
        out["y"] = [float(v) for v in result.y]
        out["s"] = [float(v) for v in result.s]
    if result.final is not None:
        out["iterate"] = {
            "x": [float(v) for v in result.final.x],
            "s": [float(v) for v in result.final.s],
            "y": [float(v) for v in result.final.y],
            "tau": result.final.tau,
            "kappa": result.final.kappa,
            "mu": result.final.mu,
        }
    return out


def load_solution(path: str) -> dict:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"$: invalid JSON ({exc})") from exc
    _require(isinstance(data, dict) and "status" in data, "status", "missing field")
    return data


def write_trace_csv(path: str, trace):
    rows = ["iter,mu,alpha_p,nbhd_norm,corrector_steps"]
    for rec in trace:
        rows.append(f"{rec.iteration},{rec.mu:.17g},{rec.alpha_p:.17g},"
                    f"{rec.nbhd_norm:.17g},{rec.corrector_steps}")
    write_atomic(path, "\n".join(rows) + "\n")


# ---------------------------------------------------------------------------
# certificates


def certificate_to_dict(factor_reports: list) -> dict:
    """factor_reports: list of (GramCertificate, VerificationReport, SosDecomposition)."""
    factors = []
    for cert, report, deco in factor_reports:
        entry = {
            "delta": cert.delta,
            "adjoint_residual": cert.adjoint_residual,
            "blocks": [
                {
                    "L": S.shape[0],
                    "gram": [float(v) for v in S.ravel()],
                    "min_eigenvalue": float(me),
                }
                for S, me in zip(cert.grams, cert.min_eigenvalues)
            ],
        }
        if report is not None:
            entry["verification"] = {
                "passed": bool(report.passed),
                "residual": report.adjoint_residual,
                "block_psd": [bool(v) for v in report.block_psd],
            }
        if deco is not None:
            entry["sos_terms"] = [
                {"block": i, "coefficients": [[float(v) for v in row] for row in T]}
                for i, T in enumerate(deco.terms)
            ]
        factors.append(entry)
    return {"factors": factors}


# ---------------------------------------------------------------------------
# point sets and polynomials


def points_to_json(pts: PointSet) -> str:
    coords = [[float(v) for v in row] for row in pts.points]
    return json.dumps(coords, indent=2) + "\n"


def points_to_csv(pts: PointSet) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf)
    for row in pts.points:
        writer.writerow([f"{v:.17g}" for v in row])
    return buf.getvalue()


def polyspec_from_dict(data: dict) -> PolySpec:
    _require(isinstance(data, dict), "$", "expected a JSON object")
    kind = data.get("kind")
    _require(kind in ("chebyshev", "builtin", "values"), "kind",
             "expected one of 'chebyshev', 'builtin', 'values'")
    if kind == "builtin":
        name = data.get("name")
        _require(isinstance(name, str), "name", "expected a builtin name string")
        try:
            return builtin_poly(name)
        except KeyError as exc:
            raise SchemaError(f"name: {exc.args[0]}") from exc
    n = data.get("n")
    deg = data.get("deg")
    _require(isinstance(n, int) and n >= 1, "n", "expected a positive integer")
    _require(isinstance(deg, int) and deg >= 0, "deg", "expected a nonnegative integer")
    box_data = data.get("box")
    _require(isinstance(box_data, dict) and "lower" in box_data and "upper" in box_data,
             "box", "expected an object with 'lower' and 'upper'")
    lower = _num_list(box_data["lower"], "box.lower")
    upper = _num_list(box_data["upper"], "box.upper")
    _require(lower.size == n and upper.size == n, "box", f"bounds must have length {n}")
    try:
        box = BoxDomain(lower, upper)
    except ValueError as exc:
        raise SchemaError(f"box: {exc}") from exc
    if kind == "chebyshev":
        coeffs = _num_list(data.get("coeffs"), "coeffs")
        try:
            return chebyshev_poly(n, deg, coeffs, box)
        except ValueError as exc:
            raise SchemaError(f"coeffs: {exc}") from exc
    # values are taken at the canonical unisolvent set for (n, deg, box);
    # an explicit "points" array may override it
    values = _num_list(data.get("values"), "values")
    if "points" in data:
        pts_data = _num_list(data["points"], "points")
        _require(pts_data.ndim == 2 and pts_data.shape[1] == n, "points",
                 "expected an array of n-dimensional coordinates")
        pts = PointSet(pts_data, box)
    else:
        pts = points_for_degree(n, deg, box)
    _require(pts.U == values.size, "values",
             f"need one value per interpolation point ({pts.U})")
    return PolySpec("values", n, deg, box, values=values, points=pts)


def load_polyspec(path: str) -> PolySpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"$: invalid JSON ({exc})") from exc
    return polyspec_from_dict(data)
