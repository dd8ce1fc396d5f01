"""Command-line interface.

Subcommands build context posets from ray-set files, compute and check
state-derived valuations and interval constructions, and run the
global-section search. All reports are JSON with sorted keys and embed the
config that produced them; repeated single-threaded runs on the same inputs
are byte-identical (timings stay null unless requested).

Exit codes: 0 success, 1 a checked property failed (reported), 2 usage or
input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import coarse, contexts, intervals, ks, valuations
from .linalg import DensityMatrix, ValidationError
from .scalars import QSqrt2, set_eps


def _load_poset(args) -> contexts.ContextPoset:
    if getattr(args, "poset", None):
        with open(args.poset) as fh:
            return contexts.ContextPoset.from_json(json.load(fh))
    if getattr(args, "rays", None):
        rs = ks.load_rayset(args.rays)
        poset = ks.poset_from_rayset(rs, close=getattr(args, "close", True),
                                     include_pairs=getattr(args, "pairs", False))
        if getattr(args, "coarsenings", False):
            gens = []
            for cid in poset.maximal_ids():
                gens.extend(contexts.all_coarsenings(poset.contexts[cid]))
            poset = contexts.build_poset(gens)
        return poset
    raise ValidationError("no input: pass --rays or --poset")


def _parse_state(spec: str, dim: int, backend: str) -> DensityMatrix:
    """State specs: 'maximally-mixed', 'basis-k', 'diag:w0,w1,..',
    'vec:v0,v1,..' (real components, fractions or decimals), or a JSON file
    holding a density matrix."""
    if spec == "maximally-mixed":
        return DensityMatrix.maximally_mixed(dim, backend)
    if spec.startswith("basis-"):
        k = int(spec[len("basis-"):])
        if not 0 <= k < dim:
            raise ValidationError(f"basis index {k} out of range for dim {dim}")
        vec = [0] * dim
        vec[k] = 1
        return DensityMatrix.pure(vec, backend)
    if spec.startswith("diag:"):
        parts = [Fraction(x) for x in spec[len("diag:"):].split(",")]
        if len(parts) != dim:
            raise ValidationError(f"diag state has {len(parts)} weights, dim is {dim}")
        if backend == "float":
            return DensityMatrix.from_diag([float(x) for x in parts], backend)
        return DensityMatrix.from_diag(parts, backend)
    if spec.startswith("vec:"):
        parts = [Fraction(x) for x in spec[len("vec:"):].split(",")]
        if backend == "float":
            return DensityMatrix.pure([float(x) for x in parts], backend)
        return DensityMatrix.pure(parts, backend)
    with open(spec) as fh:
        return DensityMatrix.from_json(json.load(fh))


def _parse_r(args):
    r = Fraction(args.r)
    if not 0 < r <= 1:
        raise ValidationError("threshold r must lie in (0, 1]")
    return r


def _state_r_value(r: Fraction, backend: str):
    return QSqrt2(r) if backend == "exact" else float(r)


def _emit(report: dict, args) -> None:
    text = json.dumps(report, sort_keys=True, indent=1)
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _config_of(args) -> dict:
    skip = {"func", "output"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_build_poset(args) -> int:
    poset = _load_poset(args)
    report = {
        "config": _config_of(args),
        "poset": poset.to_json(),
        "n_contexts": len(poset),
        "n_maximal": len(poset.maximal_ids()),
    }
    _emit(report, args)
    return 0


def cmd_valuate(args) -> int:
    poset = _load_poset(args)
    r = _parse_r(args)
    rho = _parse_state(args.state, poset.dim, poset.backend)
    table = valuations.valuation_table(rho, poset, r=_state_r_value(r, poset.backend))
    axioms = valuations.check_valuation(
        table, require_exclusivity=not args.no_exclusivity,
        require_unit=not args.no_unit,
    )
    report = {
        "config": _config_of(args),
        "table": table.to_json(),
        "axioms": axioms,
        "ok": axioms["ok"],
    }
    _emit(report, args)
    return 0 if axioms["ok"] else 1


def cmd_intervals(args) -> int:
    poset = _load_poset(args)
    r = _parse_r(args)
    rho = _parse_state(args.state, poset.dim, poset.backend)
    rv = _state_r_value(r, poset.backend)
    table = valuations.valuation_table(rho, poset, r=rv)

    true_sub = intervals.true_subobject(rho, poset)
    sigma_report = intervals.check_spectral_subobject(true_sub, poset)
    gamma, gamma_report = intervals.global_element_from_valuation(table, poset)
    family = intervals.probability_family(rho, rv, poset)
    g_report = intervals.check_coarse_subobject(family, poset)
    semantic = intervals.check_semantic_subobject(family, poset)

    ideal_matches = None
    if args.state.startswith(("vec:", "basis-")):
        psi = _pure_vector(args.state, poset.dim)
        ideal = intervals.ideal_valuation(psi, poset)
        ideal_matches = ideal.sets == true_sub.sets

    ok = sigma_report["ok"] and gamma_report["ok"] and g_report["ok"] and semantic["ok"]
    if ideal_matches is not None:
        ok = ok and ideal_matches
    report = {
        "config": _config_of(args),
        "true_subobject": true_sub.to_json(),
        "spectral_subobject_check": sigma_report,
        "global_element": gamma.to_json() if gamma is not None else None,
        "global_element_check": gamma_report,
        "coarse_subobject_check": g_report,
        "semantic_subobject_check": semantic,
        "ideal_valuation_matches": ideal_matches,
        "ok": ok,
    }
    _emit(report, args)
    return 0 if ok else 1


def _pure_vector(spec: str, dim: int):
    if spec.startswith("basis-"):
        k = int(spec[len("basis-"):])
        vec = [0] * dim
        vec[k] = 1
        return vec
    return [Fraction(x) for x in spec[len("vec:"):].split(",")]


def cmd_ks_check(args) -> int:
    poset = _load_poset(args)
    section, rep = ks.find_global_section(poset, timings=args.timings)
    valid = None
    if section is not None:
        valid = ks.validate_section(section, poset)
    report = {
        "config": _config_of(args),
        "section": section.to_json() if section is not None else None,
        "section_validates": valid,
        "nodes_explored": rep["nodes"],
        "n_contexts": rep["n_contexts"],
        "n_maximal": rep["n_maximal"],
        "kernel": rep["kernel"],
        "elapsed_ms": rep["elapsed_ms"],
    }
    _emit(report, args)
    return 0 if (section is None or valid) else 1


def cmd_verify_axioms(args) -> int:
    poset = _load_poset(args)
    r = _parse_r(args)
    rho = _parse_state(args.state, poset.dim, poset.backend)
    rv = _state_r_value(r, poset.backend)
    table = valuations.valuation_table(rho, poset, r=rv)

    checks = {
        "coarse_functoriality": coarse.coarse_functoriality_check(poset),
        "clopen_isomorphism": coarse.clopen_iso_check(poset),
        "valuation_axioms": valuations.check_valuation(table),
        "naturality": valuations.natural_transformation_check(table),
        "state_global_element": {"ok": contexts.check_state_global_element(rho, poset)},
        "coarse_subobject": intervals.check_coarse_subobject(
            intervals.probability_family(rho, rv, poset), poset),
    }
    ok = all(c["ok"] for c in checks.values())
    report = {"config": _config_of(args), "checks": checks, "ok": ok}
    _emit(report, args)
    return 0 if ok else 1


def cmd_report(args) -> int:
    with open(args.input) as fh:
        obj = json.load(fh)
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _add_common(sp, state: bool = False):
    sp.add_argument("--rays", help="ray-set JSON file or packaged fixture name")
    sp.add_argument("--poset", help="poset JSON file (float backend)")
    sp.add_argument("--close", action="store_true", default=True,
                    help="close the poset under meets (default on)")
    sp.add_argument("--no-close", dest="close", action="store_false")
    sp.add_argument("--pairs", action="store_true",
                    help="also generate contexts from orthogonal ray pairs")
    sp.add_argument("--coarsenings", action="store_true",
                    help="include every coarsening of each maximal context")
    sp.add_argument("--output", help="write the report here instead of stdout")
    sp.add_argument("--eps", type=float, default=None, help="float-backend tolerance")
    sp.add_argument("--threads", type=int, default=1,
                    help="worker count; affects timing only, never content")
    sp.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
    if state:
        sp.add_argument("--state", default="maximally-mixed",
                        help="maximally-mixed | basis-k | diag:w0,w1,.. | vec:.. | file")
        sp.add_argument("--r", default="1", help="probability threshold in (0,1]")
        sp.add_argument("--no-exclusivity", action="store_true")
        sp.add_argument("--no-unit", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qcontexts",
                                 description="context posets, valuations, and "
                                             "global-section search")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("build-poset", help="build a context poset from rays")
    _add_common(sp)
    sp.set_defaults(func=cmd_build_poset)

    sp = sub.add_parser("valuate", help="state-derived sieve valuation + axioms")
    _add_common(sp, state=True)
    sp.set_defaults(func=cmd_valuate)

    sp = sub.add_parser("intervals", help="interval-valued constructions + checks")
    _add_common(sp, state=True)
    sp.set_defaults(func=cmd_intervals)

    sp = sub.add_parser("ks-check", help="search for a global section")
    _add_common(sp)
    sp.add_argument("--timings", action="store_true",
                    help="include elapsed time (breaks byte-reproducibility)")
    sp.set_defaults(func=cmd_ks_check)

    sp = sub.add_parser("verify-axioms", help="run the full invariant suite")
    _add_common(sp, state=True)
    sp.set_defaults(func=cmd_verify_axioms)

    sp = sub.add_parser("report", help="pretty-print a JSON report")
    sp.add_argument("input")
    sp.set_defaults(func=cmd_report)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if getattr(args, "eps", None):
        set_eps(args.eps)
    try:
        return args.func(args)
    except (ValidationError, OSError, ValueError, KeyError) as exc:
        sys.stdout.write(json.dumps(
            {"error": f"{type(exc).__name__}: {exc}"}, sort_keys=True) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
