"""Command-line frontend.

Subcommands: check-family, estimate, witness, pipeline, martingale,
transfer, pde-check.  Global flags: --seed, --out DIR, --config FILE (JSON
with flag defaults).  Exit codes: 0 success, 2 invariant violation (for
example a ratio above its theoretical ceiling), 3 input error.

Every run is reproducible: the resolved configuration and seed are embedded
in the JSON report, and identical configurations produce byte-identical
reports apart from the "meta" timestamp block.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import List, Optional, Sequence

import numpy as np

from . import reporting
from .estimator import (EstimateReport, SolverOptions, maximize_ratio,
                        ratio_objective, reference_upper_bound,
                        single_frequency_scan)
from .martingale import (burkholder_ceiling, sign_field_check, umd_lower_search,
                         walsh_coefficients)
from .pde import CATALOG, pde_check
from .symbols import (DerivativeFamily, convex_combination_check,
                      find_parity_set, make_symbol, normalize_family, order,
                      parse_multiindex)
from .torus import TorusGrid, load_field, save_field
from .transference import (PROFILES, dyadic_block_sweep, lemma22_sweep,
                           lemma23_sweep, pairing_identity_check)
from .witness import (eigen_relation_residuals, eigen_witness_pair,
                      lift_to_torus, multiplier_identity_residuals,
                      sign_distance, square_wave_poly, theorem_lower_bound,
                      walsh_witness_stacks)
from .torus import TorusField, mode


class InputError(Exception):
    """Bad user input; maps to exit code 3."""


class InvariantViolation(Exception):
    """A theoretical ceiling or internal check failed; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _parse_family(args, default_p: float = 2.0) -> DerivativeFamily:
    try:
        beta = parse_multiindex(args.beta)
        alphas = tuple(parse_multiindex(a) for a in args.alpha)
        return DerivativeFamily(beta, alphas, getattr(args, "p", default_p))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def parse_epsilons(text: str) -> List[float]:
    """Parse either 'start:stop' in powers-of-two form (2^-2:2^-7, halving)
    or a comma-separated list of floats; values must be strictly decreasing."""
    def one(tok: str) -> float:
        tok = tok.strip()
        if "^" in tok:
            base, exp = tok.split("^")
            return float(base) ** float(exp)
        return float(tok)

    if ":" in text:
        lo, hi = (one(t) for t in text.split(":"))
        if not 0 < hi < lo:
            raise InputError(f"epsilon range {text!r} must go from larger to smaller")
        out = []
        e = lo
        while e >= hi * (1 - 1e-12):
            out.append(e)
            e /= 2.0
        return out
    out = [one(t) for t in text.split(",")]
    if any(b >= a for a, b in zip(out, out[1:])) or any(e <= 0 for e in out):
        raise InputError("epsilons must be positive and strictly decreasing")
    return out


def _fraction_str(fr) -> str:
    return f"{fr.numerator}/{fr.denominator}"


# -- command handlers -----------------------------------------------------------


def cmd_check_family(args, out_dir: str) -> dict:
    try:
        beta = parse_multiindex(args.beta)
        alphas = tuple(parse_multiindex(a) for a in args.alpha)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if any(len(a) != len(beta) for a in alphas):
        raise InputError("beta and every alpha must have the same number of entries")
    orders_match = all(order(a) == order(beta) for a in alphas)
    F = find_parity_set(beta, alphas)
    normalized = None
    if orders_match and F is not None:
        fam = DerivativeFamily(beta, alphas, args.p, F)
        normalized = normalize_family(fam).to_dict()
    convex = convex_combination_check(beta, alphas)
    results = {
        "ordersMatch": orders_match,
        "order": order(beta),
        "paritySet": sorted(i + 1 for i in F) if F is not None else None,
        "normalized": normalized,
        "convex": {
            "feasible": convex.feasible,
            "weights": [_fraction_str(w) for w in convex.weights]
            if convex.weights is not None else None,
        },
    }
    if F is None:
        print("no valid parity set F")
    else:
        print(f"parity set F = {{{', '.join(str(i + 1) for i in sorted(F))}}}")
    print(f"convex combination: {'feasible' if convex.feasible else 'infeasible'}")
    return results


def _solver_options(args, warm) -> SolverOptions:
    return SolverOptions(
        starts=args.starts, max_iter=args.max_iter, tol=args.tol,
        seed=args.seed, oversample=args.oversample,
        scan_range=args.scan_range, warm_start=warm)


def cmd_estimate(args, out_dir: str) -> dict:
    fam = _parse_family(args)
    grid = TorusGrid(fam.n, args.grid)
    warm = load_field(args.warm) if args.warm else None
    report = maximize_ratio(fam, grid, _solver_options(args, warm))
    scan = single_frequency_scan(fam, min(args.scan_range, grid.nyquist))
    witness_path = os.path.join(out_dir, "estimate_witness.field")
    save_field(report.witness, witness_path)
    trace_path = args.csv or os.path.join(out_dir, "estimate_trace.csv")
    reporting.write_csv(trace_path, ["iteration", "ratio"], report.trace)
    reporting.write_svg_chart(
        os.path.join(out_dir, "estimate_convergence.svg"),
        [t[0] for t in report.trace], {"ratio": [t[1] for t in report.trace]},
        "iteration", "ratio", title="ratio ascent", hashsalt=str(args.seed))
    results = report.to_dict()
    results["witnessFile"] = os.path.basename(witness_path)
    results["scan"] = {"bestK": scan.value,
                       "bestKExact": _fraction_str(scan.ratio) if scan.ratio else None,
                       "bestFreq": list(scan.freq)}
    print(f"kLower = {report.k_lower:.9f}"
          + (f"  (paper ceiling {report.upper_bound_ref:.6f})"
             if report.upper_bound_ref else ""))
    if report.upper_bound_ref is not None and \
            report.k_lower > report.upper_bound_ref + 0.02:
        raise InvariantViolation(
            f"kLower {report.k_lower:.6f} exceeds the ceiling "
            f"{report.upper_bound_ref:.6f} + 0.02")
    return results


def cmd_witness(args, out_dir: str) -> dict:
    fam = _parse_family(args)
    try:
        fam_n = normalize_family(fam)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    degree = args.D
    M = args.grid if args.grid else 2 * (degree + 1)
    grid = TorusGrid(fam_n.n, M)
    if degree > grid.nyquist:
        raise InputError(f"degree {degree} exceeds the grid Nyquist {grid.nyquist}")
    wave = square_wave_poly(degree)
    delta = sign_distance(wave, fam_n.p)
    a_plus, a_minus = eigen_witness_pair(fam_n, wave, grid)
    residuals = eigen_relation_residuals(fam_n, a_plus, a_minus)
    ratio_minus = ratio_objective(fam_n, a_minus)
    plus_path = os.path.join(out_dir, "witness_aplus.field")
    minus_path = os.path.join(out_dir, "witness_aminus.field")
    save_field(a_plus, plus_path)
    save_field(a_minus, minus_path)
    results = {
        "family": fam_n.to_dict(),
        "degree": degree,
        "grid": {"n": grid.n, "M": grid.M, "offset": grid.offset},
        "bPlus": [1] * fam_n.n,
        "bMinus": list(fam_n.sign_vector()),
        "delta": delta,
        "eigenResiduals": residuals,
        "witnessRatio": ratio_minus,
        "files": [os.path.basename(plus_path), os.path.basename(minus_path)],
    }
    print(f"delta = {delta:.6f}; max eigen residual = {max(residuals.values()):.2e}")
    return results


def cmd_pipeline(args, out_dir: str) -> dict:
    fam = _parse_family(args)
    try:
        fam_n = normalize_family(fam)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    degree, r = args.D, args.r
    M = args.grid if args.grid else 2 * (degree + 1)
    grid = TorusGrid(fam_n.n, M)
    if degree > grid.nyquist:
        raise InputError(f"degree {degree} exceeds the grid Nyquist {grid.nyquist}")
    wave = square_wave_poly(degree)
    delta = sign_distance(wave, fam_n.p)
    if args.sigma:
        signs = tuple(1 if t.strip() in ("+", "1", "+1") else -1
                      for t in args.sigma.split(","))
        if len(signs) != r:
            raise InputError(f"--sigma must list {r} signs")
        # canonical tables: d_1 = 1, d_l = previous sign
        tables = [np.ones(1)]
        for l in range(1, r):
            idx = np.arange(2**l)
            tables.append(1.0 - 2.0 * ((idx >> (l - 1)) & 1))
        search_ratio = None
    else:
        search = umd_lower_search(r, fam_n.p, budget=args.budget, seed=args.seed)
        signs = search.signs
        tables = search.martingale.tables
        search_ratio = search.best_ratio
    plus, signed = walsh_witness_stacks(fam_n, wave, grid, signs, tables)
    assembly_residual = max(plus.verify_pointwise(), signed.verify_pointwise())
    identity = multiplier_identity_residuals(fam_n, plus, signed)
    bound = theorem_lower_bound(fam_n, plus, signed)
    from .torus import lp_norm
    results = {
        "family": fam_n.to_dict(),
        "degree": degree,
        "r": r,
        "grid": {"n": grid.n, "M": grid.M},
        "signs": list(signs),
        "delta": delta,
        "martingaleSearchRatio": search_ratio,
        "stackNormPlus": lp_norm(plus.assembled, fam_n.p),
        "stackNormSigned": lp_norm(signed.assembled, fam_n.p),
        "assemblyResidual": assembly_residual,
        "identityResiduals": identity,
        "kLowerBound": bound,
        "ceiling": reference_upper_bound(fam_n),
    }
    print(f"certified K >= {bound:.6f}  (delta = {delta:.6f})")
    ceiling = results["ceiling"]
    if assembly_residual > 1e-10:
        raise InvariantViolation(f"stack assembly residual {assembly_residual:.2e}")
    if max(identity.values()) > 1e-11:
        raise InvariantViolation("layerwise multiplier identity failed")
    if ceiling is not None and bound > ceiling + 0.02:
        raise InvariantViolation(f"bound {bound:.6f} exceeds ceiling {ceiling:.6f}")
    return results


def cmd_martingale(args, out_dir: str) -> dict:
    if not (1.0 < args.p < float("inf")):
        raise InputError("p must lie in (1, inf)")
    result = umd_lower_search(args.r, args.p, budget=args.budget, seed=args.seed,
                              starts=args.starts)
    ceiling = burkholder_ceiling(args.p)
    payload = result.to_dict()
    payload["ceiling"] = ceiling
    print(f"bestRatio = {result.best_ratio:.6f}  (ceiling {ceiling:.6f})")
    if result.best_ratio > ceiling + 1e-9:
        raise InvariantViolation(
            f"ratio {result.best_ratio} exceeds the ceiling {ceiling}")
    return payload


def _transfer_field(args) -> "TorusField":
    name = args.f
    M = args.grid
    grid = TorusGrid(1, M)
    if name == "cos":
        return mode(grid, (1,), 0.5) + mode(grid, (-1,), 0.5)
    if name.startswith("square:"):
        degree = int(name.split(":")[1])
        wave = square_wave_poly(degree)
        return lift_to_torus(wave, (1,), grid)
    raise InputError(f"unknown test function {name!r}; use 'cos' or 'square:D'")


def cmd_transfer(args, out_dir: str) -> dict:
    eps = parse_epsilons(args.epsilons)
    if args.lemma == "22":
        f = _transfer_field(args)
        target = args.target if args.target is not None else None
        sweep = lemma22_sweep(f, args.p, eps, target=target)
        results = sweep.to_dict()
    elif args.lemma == "23":
        if args.profile not in PROFILES:
            raise InputError(f"unknown profile {args.profile!r}; "
                             f"choose from {sorted(PROFILES)}")
        sweep = lemma23_sweep(PROFILES[args.profile](), args.p, eps)
        results = sweep.to_dict()
    elif args.lemma == "pairing":
        symbol = make_symbol(parse_multiindex(args.beta))
        k = tuple(int(x) for x in args.k.split(","))
        l = tuple(int(x) for x in args.l.split(","))
        sweep = pairing_identity_check(symbol, k, l, eps, p=args.p)
        results = sweep.to_dict()
    elif args.lemma == "dyadic":
        symbol = make_symbol(parse_multiindex(args.beta))
        k = tuple(int(x) for x in args.k.split(","))
        results = dyadic_block_sweep(symbol, k, args.block, eps)
        reporting.write_csv(
            os.path.join(out_dir, "transfer_sweep.csv"),
            ["epsilon", "scale", "pointwise", "derivative"],
            zip(results["epsilons"], results["scale"],
                results["pointwise"], results["derivative"]))
        reporting.write_svg_chart(
            os.path.join(out_dir, "transfer_convergence.svg"),
            results["scale"],
            {"pointwise": results["pointwise"], "derivative": results["derivative"]},
            "2^l epsilon", "bound", title="dyadic block scaling", loglog=True,
            hashsalt=str(args.seed))
        print(f"pointwise fit R^2 = {results['pointwise_fit']['r2']:.6f}, "
              f"derivative fit R^2 = {results['derivative_fit']['r2']:.6f}")
        return results
    else:
        raise InputError(f"unknown lemma {args.lemma!r}")
    reporting.write_csv(
        os.path.join(out_dir, "transfer_sweep.csv"),
        ["epsilon", "value", "target", "error"],
        zip(sweep.epsilons, sweep.values,
            [sweep.target] * len(sweep.epsilons), sweep.errors))
    positive = [max(e, 1e-18) for e in sweep.errors]
    reporting.write_svg_chart(
        os.path.join(out_dir, "transfer_convergence.svg"),
        sweep.epsilons, {"error": positive}, "epsilon", "|value - target|",
        title=sweep.label, loglog=True, hashsalt=str(args.seed))
    final_rel = sweep.rel_errors[-1] if sweep.target != 0 else sweep.errors[-1]
    print(f"final error {sweep.errors[-1]:.3e} (relative {final_rel:.3e}); "
          f"fitted order {sweep.fitted_order}")
    return results


def cmd_pde_check(args, out_dir: str) -> dict:
    try:
        report = pde_check(args.u, args.p, box=args.box, M=args.grid,
                           tolerance=args.tolerance,
                           require_decay=not args.allow_boundary)
    except KeyError as exc:
        raise InputError(str(exc)) from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    print(f"ratio = {report.ratio:.6f} (ceiling {report.ceiling:.6f}); "
          f"boundary decay {report.boundary_decay:.1e}")
    if not report.ok:
        raise InvariantViolation(
            f"ratio {report.ratio:.6f} exceeds ceiling {report.ceiling:.6f} "
            f"+ {report.tolerance:g}")
    return report.to_dict()


# -- parser ---------------------------------------------------------------------

def _family_flags(sp):
    sp.add_argument("--beta", required=True, help="comma-separated multi-index, e.g. 1,1")
    sp.add_argument("--alpha", action="append", required=True,
                    help="comma-separated multi-index; repeatable")
    sp.add_argument("--p", type=float, default=2.0)


def build_parser(config: Optional[dict] = None) -> _Parser:
    parser = _Parser(prog="umdlab",
                     description="Sharp-constant laboratory for mixed-derivative "
                                 "multiplier inequalities")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--config", default=None, help="JSON file with flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("check-family", parents=[common])
    _family_flags(sp)

    sp = sub.add_parser("estimate", parents=[common])
    _family_flags(sp)
    sp.add_argument("--grid", type=int, default=32)
    sp.add_argument("--starts", type=int, default=8)
    sp.add_argument("--max-iter", type=int, default=2000)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--oversample", type=int, default=4)
    sp.add_argument("--scan-range", type=int, default=8)
    sp.add_argument("--warm", default=None, help="witness field file to warm-start from")
    sp.add_argument("--csv", default=None, help="trace CSV path")

    sp = sub.add_parser("witness", parents=[common])
    _family_flags(sp)
    sp.add_argument("--D", type=int, default=31, help="square-wave cutoff degree")
    sp.add_argument("--grid", type=int, default=None)

    sp = sub.add_parser("pipeline", parents=[common])
    _family_flags(sp)
    sp.add_argument("--r", type=int, default=2, help="number of stack layers")
    sp.add_argument("--D", type=int, default=63)
    sp.add_argument("--grid", type=int, default=None)
    sp.add_argument("--budget", type=int, default=2000)
    sp.add_argument("--sigma", default=None,
                    help="comma-separated signs overriding the search, e.g. +,-")

    sp = sub.add_parser("martingale", parents=[common])
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--budget", type=int, default=10000)
    sp.add_argument("--starts", type=int, default=4)

    sp = sub.add_parser("transfer", parents=[common])
    sp.add_argument("--lemma", required=True, choices=["22", "23", "pairing", "dyadic"])
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--epsilons", default="2^-2:2^-7")
    sp.add_argument("--f", default="cos", help="lemma 22 test function: cos or square:D")
    sp.add_argument("--grid", type=int, default=16, help="lemma 22 field grid")
    sp.add_argument("--target", type=float, default=None)
    sp.add_argument("--profile", default="gauss", help="lemma 23 profile")
    sp.add_argument("--beta", default="1,1")
    sp.add_argument("--k", default="1,1")
    sp.add_argument("--l", default="1,1")
    sp.add_argument("--block", type=int, default=0)

    sp = sub.add_parser("pde-check", parents=[common])
    sp.add_argument("--u", required=True, help=f"one of {sorted(CATALOG)}")
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--box", type=float, default=8.0)
    sp.add_argument("--grid", type=int, default=256)
    sp.add_argument("--tolerance", type=float, default=1e-6)
    sp.add_argument("--allow-boundary", action="store_true",
                    help="skip the boundary-decay gate (torus-only diagnostics)")

    if config:
        for sub_parser in sub.choices.values():
            for action in sub_parser._actions:
                if action.dest in config:
                    action.default = config[action.dest]
                    action.required = False
    return parser


HANDLERS = {
    "check-family": cmd_check_family,
    "estimate": cmd_estimate,
    "witness": cmd_witness,
    "pipeline": cmd_pipeline,
    "martingale": cmd_martingale,
    "transfer": cmd_transfer,
    "pde-check": cmd_pde_check,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    config = None
    if "--config" in argv:
        try:
            cfg_path = argv[argv.index("--config") + 1]
            with open(cfg_path) as fh:
                config = json.load(fh)
        except (IndexError, OSError, json.JSONDecodeError) as exc:
            print(f"input error: cannot read config: {exc}", file=sys.stderr)
            return 3
    try:
        parser = build_parser(config)
        args = parser.parse_args(argv)
        out_dir = args.out
        os.makedirs(out_dir, exist_ok=True)
        results = HANDLERS[args.command](args, out_dir)
        # output locations are not part of the run's semantics
        run_config = {k: v for k, v in vars(args).items()
                      if k not in ("command", "config", "out", "csv")
                      and v is not None and not hasattr(v, "__call__")}
        payload = reporting.make_report(args.command, run_config, results)
        path = reporting.write_json(
            os.path.join(out_dir, f"{args.command}_report.json"), payload)
        print(f"report written to {path}")
        return 0
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
