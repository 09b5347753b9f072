"""Command line front end.

Subcommands: verify, construct, search, lipschitz, distance, nogo-m2,
pdelta.  Exit codes are a stable contract: 0 for success or a passing
verdict, 1 for a mathematically negative result, 2 for usage or parse
errors.  All matrix input and output uses the shared JSON exchange format,
so constructions pipe into verification and search outputs pipe into the
transport computations.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys

import numpy as np

from . import exchange
from .algebra import as_shape, diag_projector
from .axioms import (
    M2_DIAG_PROJECTOR,
    M2_NOGO_WITNESS,
    M2_TRIANGLE_DEFECT,
    MODES,
    REPRESENTATION,
    MetricCandidate,
    ToleranceConfig,
    m2_admissible,
    m2_defect_quadratic_form,
    triangle_defect,
    verify,
)
from .construct import conic_combine, direct_sum, from_finite_metric, tensor_product
from .lipschitz import State, lip_seminorm, mk_distance
from .search import SearchConfig, feasibility_search


def _parse_shape(text: str):
    try:
        return as_shape(tuple(int(p) for p in text.split(",")))
    except ValueError as exc:
        raise exchange.ExchangeError(f"bad shape {text!r}: {exc}") from exc


def _tolerance_config(args) -> ToleranceConfig:
    return ToleranceConfig(
        eq_tol=args.eq_tol,
        psd_tol=args.psd_tol,
        strict_floor=args.floor,
        sample_count=args.samples,
        seed=args.seed,
    )


def _say(args, text: str) -> None:
    if not getattr(args, "quiet", False) and not getattr(args, "json", False):
        print(text)


def _emit_json(args, payload: dict) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload))


def _report_table(report) -> str:
    lines = [f"{'axiom':<10}{'passed':<9}margin"]
    for rec in report.records:
        margin = "indeterminate" if rec.indeterminate else f"{rec.margin:+.6e}"
        lines.append(f"{rec.axiom:<10}{'yes' if rec.passed else 'no':<9}{margin}")
    lines.append(f"overall: {'pass' if report.passed else 'fail'} (mode {report.mode})")
    return "\n".join(lines)


def _matrix_table(arr: np.ndarray) -> str:
    rows = []
    for row in np.asarray(arr):
        rows.append("  ".join(f"{z.real:+.4f}{z.imag:+.4f}j" for z in row))
    return "\n".join(rows)


def cmd_pdelta(args) -> int:
    shape = _parse_shape(args.shape)
    p = diag_projector(shape)
    if args.out:
        exchange.save_element(p, args.out)
    _say(args, _matrix_table(p.data))
    _emit_json(args, exchange.element_to_dict(p))
    return 0


def cmd_verify(args) -> int:
    rho = exchange.load_element(args.path, expect_order=2)
    cfg = _tolerance_config(args)
    report = verify(rho, cfg, mode=args.mode)
    if args.report:
        exchange.save_report(report, args.report)
    _say(args, _report_table(report))
    _emit_json(args, report.to_dict())
    return 0 if report.passed else 1


def cmd_construct(args) -> int:
    cfg = _tolerance_config(args)
    needed = 1 if args.construction == "from-metric" else 2
    if len(args.inputs) != needed:
        raise exchange.ExchangeError(
            f"{args.construction} takes exactly {needed} input file(s)"
        )
    if args.construction == "from-metric":
        space = exchange.load_metric_space(args.inputs[0])
        candidate = from_finite_metric(space)
    elif args.construction == "conic":
        a = MetricCandidate(exchange.load_element(args.inputs[0], expect_order=2))
        b = MetricCandidate(exchange.load_element(args.inputs[1], expect_order=2))
        candidate = conic_combine(a, b, args.r)
    elif args.construction == "direct-sum":
        a = MetricCandidate(exchange.load_element(args.inputs[0], expect_order=2))
        b = MetricCandidate(exchange.load_element(args.inputs[1], expect_order=2))
        candidate = direct_sum(a, b, args.r)
    else:
        a = MetricCandidate(exchange.load_element(args.inputs[0], expect_order=2))
        b = MetricCandidate(exchange.load_element(args.inputs[1], expect_order=2))
        candidate = tensor_product(a, b, mode=args.mode)
    report = verify(candidate.rho, cfg, mode=args.mode)
    if args.out:
        exchange.save_element(candidate.rho, args.out)
    _say(args, _report_table(report))
    _emit_json(
        args,
        {"candidate": exchange.element_to_dict(candidate.rho), "report": report.to_dict()},
    )
    return 0 if report.passed else 1


def cmd_search(args) -> int:
    cfg = SearchConfig(
        shape=_parse_shape(args.shape),
        floor=args.eps,
        trace_target=args.trace_target,
        max_iter=args.max_iter,
        restarts=args.restarts,
        seed=args.seed,
        residual_tol=args.residual_tol,
        include_triangle=not args.drop_triangle,
    )
    outcome = feasibility_search(cfg, mode=args.mode)
    if args.out:
        exchange.save_outcome(outcome, args.out)
    _say(
        args,
        f"status: {outcome.status}\n"
        f"best residual: {outcome.best_residual:.3e} after "
        f"{outcome.iterations_run} iterations, {outcome.restarts_run} restart(s)",
    )
    if outcome.candidate is not None and not getattr(args, "json", False) and not args.quiet:
        print(_report_table(outcome.candidate.report))
    _emit_json(args, exchange.outcome_to_dict(outcome))
    return 0 if outcome.found else 1


def cmd_lipschitz(args) -> int:
    rho = exchange.load_element(args.rho, expect_order=2)
    elem = exchange.load_element(args.element, expect_order=1)
    value = lip_seminorm(elem, rho)
    _say(args, f"{value:.12g}")
    _emit_json(args, {"lip_seminorm": value})
    return 0


def _delta_state(n: int, idx: int) -> State:
    if not 0 <= idx < n:
        raise exchange.ExchangeError(f"point index {idx} out of range for {n} points")
    w = np.zeros(n)
    w[idx] = 1.0
    return State.classical(w)


def cmd_distance(args) -> int:
    if args.classical:
        space = exchange.load_metric_space(args.classical)
        rho = from_finite_metric(space).rho
        phi = _delta_state(space.n, int(args.phi))
        psi = _delta_state(space.n, int(args.psi))
    else:
        if not args.rho:
            raise exchange.ExchangeError("distance needs --classical or --rho")
        rho = exchange.load_element(args.rho, expect_order=2)
        phi = exchange.load_state(args.phi)
        psi = exchange.load_state(args.psi)
    result = mk_distance(phi, psi, rho, method=args.method, max_iter=args.max_iter)
    _say(
        args,
        f"lower: {result.lower:.12g}\nupper: {result.upper:.12g}\n"
        f"converged: {result.converged}\niterations: {result.iterations}",
    )
    _emit_json(args, result.to_dict())
    return 0


def cmd_nogo_m2(args) -> int:
    lambdas = [float(v) for v in args.lambdas.split(",")]
    if any(lam <= 0 for lam in lambdas):
        raise exchange.ExchangeError("all family parameters must be positive")
    p = diag_projector(as_shape((2,)))
    proj_ok = bool(np.array_equal(p.data.real, M2_DIAG_PROJECTOR) and np.all(p.data.imag == 0))
    ok = proj_ok
    results = []
    rng = np.random.Generator(np.random.Philox(key=args.seed))
    grid = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=8)))
    for lam in lambdas:
        rho = m2_admissible(lam)
        defect = triangle_defect(rho).data
        matched = bool(np.max(np.abs(defect - lam * M2_TRIANGLE_DEFECT)) <= 1e-12 * max(1.0, lam))
        xs = np.concatenate([grid, rng.standard_normal((args.samples, 8))])
        lhs = np.einsum("ni,ij,nj->n", xs, defect.real, xs)
        rhs = lam * np.array([m2_defect_quadratic_form(x) for x in xs])
        norms = np.einsum("ni,ni->n", xs, xs)
        identity_ok = bool(np.all(np.abs(lhs - rhs) <= 1e-10 * lam * np.maximum(norms, 1.0)))
        witness_value = float(M2_NOGO_WITNESS @ defect.real @ M2_NOGO_WITNESS)
        witness_ok = abs(witness_value + 2.0 * lam) <= 1e-12 * max(1.0, lam)
        report = verify(rho, ToleranceConfig(seed=args.seed))
        fails_at_v = report.failing == ("v",)
        results.append(
            {
                "lambda": lam,
                "defect_matches": matched,
                "identity_holds": identity_ok,
                "witness_value": witness_value,
                "witness_matches": witness_ok,
                "fails_exactly_at_v": fails_at_v,
                "triangle_margin": report.record("v").margin,
            }
        )
        ok = ok and matched and identity_ok and witness_ok and fails_at_v
    for r in results:
        _say(
            args,
            f"lambda={r['lambda']}: defect match {r['defect_matches']}, "
            f"identity {r['identity_holds']}, witness {r['witness_value']:+.3f} "
            f"(expected {-2 * r['lambda']:+.3f}), fails exactly at v: "
            f"{r['fails_exactly_at_v']}",
        )
    _say(args, "no-go reproduction: " + ("ok" if ok else "MISMATCH"))
    _emit_json(args, {"ok": ok, "projector_matches": proj_ok, "results": results})
    return 0 if ok else 1


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--quiet", action="store_true", help="suppress tables")
    parser.add_argument("--json", action="store_true", help="emit machine output only")
    parser.add_argument("--seed", type=int, default=0)


def _add_tolerances(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--eq-tol", type=float, default=1e-9, dest="eq_tol")
    parser.add_argument("--psd-tol", type=float, default=1e-9, dest="psd_tol")
    parser.add_argument("--floor", type=float, default=None)
    parser.add_argument("--samples", type=int, default=8)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmetric",
        description="verify, construct, and search for quantum metrics on multi-matrix algebras",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pdelta", help="emit the diagonal projector for a shape")
    p.add_argument("--shape", required=True, help="block sizes, e.g. 2 or 1,1,3")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_pdelta)

    p = sub.add_parser("verify", help="check a candidate against the axioms")
    p.add_argument("path")
    p.add_argument("--mode", choices=MODES, default=REPRESENTATION)
    p.add_argument("--report", help="write the JSON report here")
    _add_tolerances(p)
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("construct", help="build candidates from known constructions")
    p.add_argument(
        "construction", choices=["from-metric", "conic", "direct-sum", "tensor"]
    )
    p.add_argument("inputs", nargs="+")
    p.add_argument("--r", type=float, default=1.0, help="weight or cross-distance")
    p.add_argument("--mode", choices=MODES, default=REPRESENTATION)
    p.add_argument("--out")
    _add_tolerances(p)
    _add_common(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("search", help="feasibility search on a shape")
    p.add_argument("--shape", required=True)
    p.add_argument("--mode", choices=MODES, default=REPRESENTATION)
    p.add_argument("--eps", type=float, default=1e-3, help="nondegeneracy floor")
    p.add_argument("--trace-target", type=float, default=None, dest="trace_target")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--max-iter", type=int, default=5000, dest="max_iter")
    p.add_argument("--residual-tol", type=float, default=1e-8, dest="residual_tol")
    p.add_argument(
        "--drop-triangle",
        action="store_true",
        help="diagnostic: search without the triangle constraint",
    )
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("lipschitz", help="seminorm of an element under a candidate")
    p.add_argument("--rho", required=True)
    p.add_argument("--element", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_lipschitz)

    p = sub.add_parser("distance", help="transport distance between two states")
    p.add_argument("--classical", help="metric-space file; --phi/--psi are point indices")
    p.add_argument("--rho", help="candidate file; --phi/--psi are state files")
    p.add_argument("--phi", required=True)
    p.add_argument("--psi", required=True)
    p.add_argument("--method", choices=["auto", "lp", "ascent"], default="auto")
    p.add_argument("--max-iter", type=int, default=500, dest="max_iter")
    _add_common(p)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("nogo-m2", help="reproduce the two-level no-go computation")
    p.add_argument("--lambdas", default="0.1,1,10")
    p.add_argument("--samples", type=int, default=10000)
    _add_common(p)
    p.set_defaults(func=cmd_nogo_m2)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (exchange.ExchangeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
