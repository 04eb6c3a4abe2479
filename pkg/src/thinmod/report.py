"""Pipelines behind the CLI: run everything, compare the two routes, build the JSON report.

Every report is a plain dict with sorted keys when dumped, so two runs with
the same inputs, seed and mode produce identical bytes.  Numbers travel as
strings (``p/q`` in exact mode, ``repr`` in float mode); residuals are
plain JSON floats.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from . import __version__
from . import families as fam
from .graphs import Graph, distance_data, verify_distance_regular
from .invariants import SCALAR_FIELDS, ModuleError, analyze_module
from .kernel import Arith, IrrationalSpectrum
from .params import (AuditReport, FormulaMismatch, Incomparable, ParameterArray, derived_scalars,
                     duality_audit, encode_number, isomorphism_test, orthogonality_audit,
                     polynomial_sequences, validate_parameter_array)
from .scheme import SpectrumError, check_multiplicity_formula, krein_parameters, primitive_idempotents, q_polynomial_orderings
from .terwilliger import (DecompositionError, DualDataError, ExactPromotionError, ProfileError,
                          decompose_standard_module, dual_data)

SCHEMA = 1

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NOT_DRG = 3
EXIT_NOT_QPOLY = 4
EXIT_AUDIT = 5

INTERNAL_ERRORS = (SpectrumError, DualDataError, DecompositionError, ExactPromotionError, ProfileError,
                   IrrationalSpectrum, ArithmeticError)


@dataclass
class Outcome:
    report: dict
    exit_code: int

    def dumps(self) -> str:
        return dumps(self.report)


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def enc(x) -> Any:
    if isinstance(x, complex):
        return str(x)
    return encode_number(x)


def enc_seq(seq) -> list:
    return [enc(x) for x in seq]


def header(command: str, arith: Arith, seed: int | None, requested: str) -> dict:
    return {
        "schema": SCHEMA,
        "tool": f"thinmod {__version__}",
        "command": command,
        "mode": arith.mode,
        "requested_mode": requested,
        "fallback": None,
        "eps": arith.eps,
        "seed": seed,
    }


def audit_block(rep: AuditReport) -> dict:
    return {
        "passed": rep.passed,
        "failures": sorted(rep.failures()),
        "max_residual": rep.max_residual,
        "max_relative": rep.max_relative(),
    }


# ---------------------------------------------------------------------------
# the two routes side by side


CROSS_FIELDS = SCALAR_FIELDS + ("nu",)


def compare_scalars(matrix_side, formula_side, arith: Arith) -> dict:
    """Field-by-field deviations between ModuleScalars and DerivedScalars."""
    worst_abs, worst_rel = 0.0, 0.0
    fields = {}
    mismatched = []
    for name in CROSS_FIELDS:
        ours, theirs = getattr(matrix_side, name), getattr(formula_side, name)
        if name == "nu":
            ours, theirs = (ours,), (theirs,)
        dev_abs, dev_rel, ok = 0.0, 0.0, True
        for x, y in zip(ours, theirs):
            dev = arith.deviation(x, y)
            dev_abs = max(dev_abs, dev)
            dev_rel = max(dev_rel, dev / max(1.0, abs(float(x)), abs(float(y))))
            ok = ok and arith.same(x, y)
        if len(ours) != len(theirs):
            ok = False
        fields[name] = {"max_abs": dev_abs, "max_rel": dev_rel}
        if not ok:
            mismatched.append(name)
        worst_abs, worst_rel = max(worst_abs, dev_abs), max(worst_rel, dev_rel)
    return {"passed": not mismatched, "mismatched": mismatched, "max_abs": worst_abs,
            "max_rel": worst_rel, "fields": fields}


def scalar_block(sc, origin: str) -> dict:
    out = {"origin": origin}
    for name in SCALAR_FIELDS:
        out[name] = enc_seq(getattr(sc, name))
    out["nu"] = enc(sc.nu)
    return out


def formula_suite(pa: ParameterArray, arith: Arith) -> tuple[Any, dict, bool]:
    """Everything the formula route computes for one array.

    Returns ``(derived_scalars or None, block, passed)``.
    """
    block: dict[str, Any] = {}
    try:
        ds = derived_scalars(pa, arith)
        ps = polynomial_sequences(pa, ds, arith)
    except (FormulaMismatch, ArithmeticError, ValueError) as exc:
        block["error"] = str(exc)
        return None, block, False
    block["derived_checks"] = {"passed": True, "max_residual": max(ds.residuals.values(), default=0.0)}
    block["polynomial_checks"] = {"passed": True, "max_residual": max(ps.residuals.values(), default=0.0)}
    dual = duality_audit(pa, ds, ps, arith)
    orth, _, _ = orthogonality_audit(pa, ds, ps, arith)
    block["duality"] = audit_block(dual)
    block["orthogonality"] = audit_block(orth)
    return ds, block, dual.passed and orth.passed


# ---------------------------------------------------------------------------
# family blocks


def fit_block(kind: str, fit) -> dict:
    if kind == "qracah":
        out = {k: enc(getattr(fit, k)) for k in ("q", "h", "hstar", "s", "sstar")}
        if fit.r_sum is not None:
            out.update(r1=enc(fit.r1), r2=enc(fit.r2))
    else:
        out = {k: enc(getattr(fit, k)) for k in ("b", "alpha", "sigma", "eta", "mu", "h", "eta_star", "hstar",
                                                  "theta_star0", "tau")}
        out["D"] = fit.D
    out["fitted"] = True
    out["mode"] = "exact" if fit.exact else "float"
    out["audit"] = audit_block(fit.audit)
    return out


def module_family_block(kind: str, fit, pa: ParameterArray, arith: Arith) -> tuple[dict, bool]:
    try:
        mod, ints, rep = fam.family_audit(kind, fit, pa, arith)
    except (fam.NotOfType, fam.FamilyError, ArithmeticError) as exc:
        return {"error": str(exc)}, False
    if kind == "qracah":
        out = {"tau": enc(mod.tau), "r1": enc(mod.r1), "r2": enc(mod.r2)}
    else:
        out = {"tau": enc(mod.tau), "alpha": enc(mod.alpha), "sigma": enc(mod.sigma)}
    out["intersection_numbers"] = {k: enc_seq(v) for k, v in ints.items()}
    out["audit"] = audit_block(rep)
    return out, rep.passed


def global_fit(kind: str, theta, theta_star, arith: Arith, trivial_pa: ParameterArray | None, b_seq=None,
               c_seq=None):
    vphi = None if trivial_pa is None else trivial_pa.varphi
    phi = None if trivial_pa is None else trivial_pa.phi
    if kind == "qracah":
        return fam.fit_q_racah(theta, theta_star, arith, vphi, phi)
    return fam.fit_classical(theta, theta_star, b_seq, c_seq, arith, vphi, phi)


# ---------------------------------------------------------------------------
# graph pipeline


def analyze_graph(g: Graph, arith: Arith, base_vertex: int = 0, seed: int = 0, command: str = "analyze-graph",
                  with_families: bool = True, family: str | None = None) -> Outcome:
    """Run the full pipeline on a graph.  Raises the graph-layer errors for exit 3."""
    requested = arith.mode
    dd = distance_data(g)
    inn = verify_distance_regular(dd)
    report = header(command, arith, seed, requested)
    report["graph"] = {
        "n": g.n,
        "edges": len(g.edges),
        "diameter": inn.diameter,
        "valency": inn.valency,
        "base_vertex": base_vertex,
        "intersection_numbers": {"b": list(inn.b), "c": list(inn.c), "a": list(inn.a), "k": list(inn.k)},
    }
    if inn.diameter < 3 or inn.valency < 3:
        report["error"] = "diameter and valency must both be at least 3"
        return Outcome(report, EXIT_NOT_QPOLY)

    fallback = None
    try:
        try:
            body = _graph_body(dd, inn, arith, base_vertex, seed, with_families, family, command)
        except (IrrationalSpectrum, ExactPromotionError) as exc:
            if not arith.exact:
                raise
            fallback = f"exact arithmetic unavailable ({exc}); recomputed in float"
            arith = Arith(False, arith.eps)
            body = _graph_body(dd, inn, arith, base_vertex, seed, with_families, family, command)
    except INTERNAL_ERRORS as exc:
        # a structural identity failed before any module was reached
        report["mode"] = arith.mode
        report["fallback"] = fallback
        report["error"] = f"{type(exc).__name__}: {exc}"
        report["verdict"] = {"passed": False, "failures": ["pipeline"]}
        return Outcome(report, EXIT_AUDIT)
    report["mode"] = arith.mode
    report["fallback"] = fallback
    code = body.pop("_exit")
    report.update(body)
    return Outcome(report, code)


def _graph_body(dd, inn, arith: Arith, base_vertex: int, seed: int, with_families: bool, family,
                command: str) -> dict:
    sd = primitive_idempotents(dd, inn, arith)
    kd = krein_parameters(sd)
    orderings = q_polynomial_orderings(kd, arith, sd.n)
    out: dict[str, Any] = {}
    out["scheme"] = {
        "eigenvalues_descending": enc_seq(sd.theta),
        "multiplicities_descending": list(sd.m),
        "q_polynomial_orderings": [list(o) for o in orderings],
    }
    if not orderings:
        out["error"] = "no Q-polynomial ordering"
        out["verdict"] = {"passed": False, "failures": ["not_q_polynomial"]}
        out["_exit"] = EXIT_NOT_QPOLY
        return out
    order = orderings[0]
    sd = sd.reordered(order)
    kd = kd.reordered(order)
    dual = dual_data(sd, dd, base_vertex)
    out["scheme"].update(
        ordering_used=list(order),
        theta=enc_seq(sd.theta),
        theta_star=enc_seq(dual.theta_star),
        multiplicities=list(sd.m),
        dual_intersection_numbers={"bstar": enc_seq(kd.bstar), "cstar": enc_seq(kd.cstar),
                                   "astar": enc_seq(kd.astar)},
        multiplicity_formula=check_multiplicity_formula(kd, sd),
    )
    dec = decompose_standard_module(dual, sd, seed=seed)
    out["decomposition"] = {"modules": len(dec.modules), "thin": len(dec.thin_modules), "attempts": dec.attempts,
                            "exact": dec.exact, "notes": list(dec.notes)}
    failures: list[str] = []
    modules = []
    analyses = {}
    for idx, W in enumerate(dec.modules):
        block: dict[str, Any] = {"index": idx, "class_id": W.class_id, "r": W.r, "t": W.t, "d": W.d,
                                 "dim": W.dim, "thin": W.thin, "estar_dims": list(W.estar_dims),
                                 "e_dims": list(W.e_dims)}
        modules.append(block)
        if not W.thin:
            block["status"] = "not thin; skipped"
            continue
        if W.d < 1:
            block["status"] = "diameter 0; no split data"
            continue
        try:
            an = analyze_module(W, dual, sd)
        except (ModuleError, ArithmeticError, ValueError) as exc:
            block["status"] = "error"
            block["error"] = str(exc)
            failures.append(f"module {idx}: analysis error")
            continue
        analyses[idx] = an
        block["status"] = "analyzed"
        block["parameter_array"] = an.parameter_array.to_dict()
        block["matrix"] = scalar_block(an.scalars, "matrix")
        block["matrix_audit"] = audit_block(an.audit)
        if not an.audit.passed:
            failures.append(f"module {idx}: matrix audit")
        ds, fblock, ok = formula_suite(an.parameter_array, arith)
        block["formula_audit"] = fblock
        if not ok:
            failures.append(f"module {idx}: formula audit")
        if ds is not None:
            block["formula"] = scalar_block(ds, "formula")
            cross = compare_scalars(an.scalars, ds, arith)
        else:
            cross = {"passed": False, "mismatched": ["formula route failed"]}
        block["cross_check"] = cross
        if not cross["passed"]:
            failures.append(f"module {idx}: cross-check")

    out["modules"] = modules
    iso = isomorphism_consistency(dec.modules, analyses, arith)
    out["isomorphism"] = iso
    if not iso["consistent"]:
        failures.append("isomorphism grouping")

    if with_families:
        trivial = next((an for an in analyses.values() if an.module.is_trivial), None)
        trivial_pa = None if trivial is None else trivial.parameter_array
        out["families"] = {}
        kinds = ("qracah", "classical") if family is None else (family,)
        for kind in kinds:
            try:
                fit = global_fit(kind, sd.theta, dual.theta_star, arith, trivial_pa, inn.b, inn.c)
            except (fam.NotOfType, fam.FamilyError) as exc:
                out["families"][kind] = {"fitted": False, "reason": str(exc)}
                if family is not None:
                    failures.append(f"family {kind}: not of type")
                continue
            fblock = fit_block(kind, fit)
            if not fit.audit.passed:
                failures.append(f"family {kind}: global audit")
            per_module = {}
            for idx, an in analyses.items():
                mblock, ok = module_family_block(kind, fit, an.parameter_array, arith)
                per_module[str(idx)] = mblock
                if not ok:
                    failures.append(f"family {kind}: module {idx}")
            fblock["modules"] = per_module
            out["families"][kind] = fblock

    if command == "cross-check":
        gate = [f for f in failures if f.endswith("cross-check") or "analysis error" in f]
    else:
        gate = failures
    out["verdict"] = {"passed": not gate, "failures": gate}
    out["_exit"] = EXIT_OK if not gate else EXIT_AUDIT
    return out


def isomorphism_consistency(modules, analyses: dict, arith: Arith) -> dict:
    """Three groupings of the analyzed modules must coincide.

    By decomposition class, by (r, t, d) plus intersection numbers, and by
    the parameter-array test.
    """
    idxs = sorted(analyses)
    by_class, by_numbers, by_array = [], [], []
    for i in idxs:
        for j in idxs:
            if j <= i:
                continue
            a, b = analyses[i], analyses[j]
            by_class.append(modules[i].class_id == modules[j].class_id)
            same_shape = (a.module.r, a.module.t, a.module.d) == (b.module.r, b.module.t, b.module.d)
            same_numbers = same_shape and all(
                arith.same(x, y) for name in ("b", "c") for x, y in zip(getattr(a.scalars, name),
                                                                         getattr(b.scalars, name)))
            by_numbers.append(same_numbers)
            try:
                by_array.append(isomorphism_test(a.parameter_array, b.parameter_array, arith))
            except Incomparable:
                by_array.append(False)
    classes: dict[int, list[int]] = {}
    for i in idxs:
        classes.setdefault(modules[i].class_id, []).append(i)
    return {
        "consistent": by_class == by_numbers == by_array,
        "classes": [classes[c] for c in sorted(classes)],
    }


# ---------------------------------------------------------------------------
# parameter-array pipeline


def analyze_params(pa: ParameterArray, arith: Arith, family: str | None = None,
                   command: str = "analyze-params") -> Outcome:
    report = header(command, arith, None, arith.mode)
    pa = pa.convert(arith)
    report["parameter_array"] = pa.to_dict()
    val = validate_parameter_array(pa, arith)
    report["validation"] = {"ok": val.ok, "problems": [
        {"code": p.code, "index": p.index, "message": p.message} for p in val.problems]}
    failures: list[str] = []
    if not val.ok:
        report["verdict"] = {"passed": False, "failures": ["validation"]}
        return Outcome(report, EXIT_AUDIT)
    ds, block, ok = formula_suite(pa, arith)
    report["formula_audit"] = block
    if ds is not None:
        report["formula"] = scalar_block(ds, "formula")
    if not ok:
        failures.append("formula audit")
    if family is not None:
        report["families"] = {family: params_family(family, pa, ds, arith, failures)}
    report["verdict"] = {"passed": not failures, "failures": failures}
    return Outcome(report, EXIT_OK if not failures else EXIT_AUDIT)


def params_family(kind: str, pa: ParameterArray, ds, arith: Arith, failures: list) -> dict:
    """Fit a family to a standalone array, treating it as a trivial module (r = t = 0)."""
    own = pa.with_changes(r=0, t=0)
    if ds is None:
        failures.append(f"family {kind}: no derived scalars")
        return {"fitted": False, "reason": "formula route failed"}
    try:
        fit = global_fit(kind, own.theta, own.theta_star, arith, own, ds.b, ds.c)
    except (fam.NotOfType, fam.FamilyError) as exc:
        failures.append(f"family {kind}: not of type")
        return {"fitted": False, "reason": str(exc)}
    block = fit_block(kind, fit)
    if not fit.audit.passed:
        failures.append(f"family {kind}: global audit")
    mblock, ok = module_family_block(kind, fit, own, arith)
    block["module"] = mblock
    if not ok:
        failures.append(f"family {kind}: module audit")
    return block
