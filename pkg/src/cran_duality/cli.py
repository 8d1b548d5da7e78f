"""Command-line entry point.

Exit status: 0 on success or a passing check, 2 when the rate targets are
infeasible, 1 on any error or failed check.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import __version__, kernels
from .duality import dl_to_ul, ul_to_dl
from .model import evaluate
from .optimizer import SolverOptions, fixed_point_solve, solve_downlink_min_power
from .report import emit_report, result_fields
from .scenario import GENERATOR_INFO, Scenario, ScenarioError, dumps_scenario, generate_scenario, parse_scenario
from .verify import (
    duality_ensemble,
    interference_function_properties,
    properties_ensemble,
    random_downlink_design,
    random_uplink_design,
    sample_rate_region,
    substreams,
    validate_duality,
)

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


def _header(command: str, seed=None) -> dict:
    h = {"tool": f"cran-duality {__version__}", "command": command, "generator": GENERATOR_INFO}
    if seed is not None:
        h["seed"] = seed
    return h


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _budget(text: str):
    return None if text == "unbounded" else float(text)


def _require(sc: Scenario, what: str):
    if what == "targets" and sc.targets is None:
        raise ScenarioError("scenario has no [targets] section")
    if what == "design" and sc.design is None:
        raise ScenarioError("scenario has no [design] section")


def _emit(args, result, seed=None, extra=None):
    text = emit_report(result, args.format, _header(args.command, seed))
    if extra:
        text += emit_report(extra, args.format)
    sys.stdout.write(text)


def cmd_gen(args) -> int:
    caps = _floats(args.caps)
    sc = generate_scenario(args.M, args.K, args.seed, args.noise_power,
                           caps if len(caps) > 1 else caps[0], _budget(args.budget),
                           None if args.targets is None else _floats(args.targets))
    if args.design:
        rng = substreams(args.seed, 2)[1]
        if args.design == "ul":
            d = random_uplink_design(sc.channel, sc.params.noise_power, sc.params.fronthaul_caps, rng)
        else:
            d = random_downlink_design(sc.channel, sc.params.fronthaul_caps, rng, noise_power=sc.params.noise_power)
        sc = Scenario(sc.channel, sc.params, sc.targets, d)
    text = dumps_scenario(sc, f"generated by cran-duality {__version__}: seed={args.seed}, {GENERATOR_INFO}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _solve(args, fn) -> int:
    sc = parse_scenario(args.scenario)
    _require(sc, "targets")
    opts = SolverOptions(tolerance=args.tol, max_iters=args.max_iters)
    res = fn(sc.channel, sc.targets, sc.params.fronthaul_caps, sc.params.noise_power, opts)
    extra = None
    if res.converged and sc.params.power_budget is not None:
        extra = {"within_budget": res.report.sum_power <= sc.params.power_budget}
    _emit(args, res, extra=extra)
    if res.infeasible:
        return EXIT_INFEASIBLE
    return EXIT_OK if res.converged else EXIT_ERROR


def cmd_solve_ul(args) -> int:
    return _solve(args, fixed_point_solve)


def cmd_solve_dl(args) -> int:
    return _solve(args, solve_downlink_min_power)


def cmd_transform(args) -> int:
    sc = parse_scenario(args.scenario)
    _require(sc, "design")
    want_from = "ul" if args.to == "dl" else "dl"
    if sc.design.direction != want_from:
        raise ScenarioError(f"--to {args.to} needs a {want_from} design, scenario has {sc.design.direction}")
    sigma2 = sc.params.noise_power
    dual = ul_to_dl(sc.channel, sigma2, sc.design) if args.to == "dl" else dl_to_ul(sc.channel, sigma2, sc.design)
    fields = result_fields(dual) + result_fields(evaluate(sc.channel, dual, sigma2))
    _emit(args, dict(fields))
    return EXIT_OK


def cmd_verify_duality(args) -> int:
    if args.scenario:
        sc = parse_scenario(args.scenario)
        _require(sc, "design")
        rep = validate_duality(sc.channel, sc.params.noise_power, sc.design, sc.design.direction, args.tol)
        _emit(args, rep)
        return EXIT_OK if rep.passed else EXIT_ERROR
    summary = duality_ensemble(args.n, args.seed, args.tol)
    _emit(args, {
        "pass": summary.all_passed,
        "instances": summary.instances,
        "passed": summary.passed,
        "tol": summary.tol,
        "max_rate_gap": summary.max_rate_gap,
        "max_fronthaul_gap": summary.max_fronthaul_gap,
        "power_gap": summary.max_power_gap,
        "max_roundtrip_gap": summary.max_roundtrip_gap,
    }, seed=args.seed)
    return EXIT_OK if summary.all_passed else EXIT_ERROR


def cmd_verify_properties(args) -> int:
    if args.scenario:
        sc = parse_scenario(args.scenario)
        _require(sc, "targets")
        v = interference_function_properties(sc.channel, sc.targets, sc.params.fronthaul_caps,
                                             sc.params.noise_power, args.samples, args.seed)
        _emit(args, v, seed=args.seed)
        return EXIT_OK if v.holds else EXIT_ERROR
    checked, bad = properties_ensemble(args.n, args.samples, args.seed)
    fields = {"holds": bad is None, "instances": checked, "samples_per_instance": args.samples}
    if bad is not None:
        fields["counterexample.axiom"] = bad.counterexample["axiom"]
    _emit(args, fields, seed=args.seed)
    return EXIT_OK if bad is None else EXIT_ERROR


def cmd_region(args) -> int:
    sc = parse_scenario(args.scenario)
    sample = sample_rate_region(sc.channel, sc.params, args.direction, args.n, args.seed)
    _emit(args, sample, seed=args.seed)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cran-duality",
        description="Uplink-downlink duality and sum-power minimization for compression-based C-RAN",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["table", "records"], default="table")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--seed", type=int, default=0)

    def scen(p, required=True):
        p.add_argument("--scenario", required=required, metavar="PATH")

    p = sub.add_parser("gen", help="write a random scenario file")
    p.add_argument("--M", type=int, required=True, help="number of RRHs")
    p.add_argument("--K", type=int, required=True, help="number of users")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-power", type=float, default=1.0)
    p.add_argument("--caps", default="2.0", help="fronthaul capacity in bits, one value or a comma list")
    p.add_argument("--budget", default="unbounded")
    p.add_argument("--targets", default=None, help="rate targets in bits, one value or a comma list")
    p.add_argument("--design", choices=["ul", "dl"], default=None, help="attach a random saturated design")
    p.add_argument("--out", default=None, metavar="PATH")
    p.set_defaults(func=cmd_gen)

    for name, fn, what in (("solve-ul", cmd_solve_ul, "uplink"), ("solve-dl", cmd_solve_dl, "downlink")):
        p = sub.add_parser(name, parents=[common], help=f"minimize {what} sum power for the scenario targets")
        scen(p)
        p.add_argument("--max-iters", type=int, default=10_000)
        p.set_defaults(func=fn, tol_default=1e-10)

    p = sub.add_parser("transform", parents=[common], help="map the scenario design to the other link direction")
    scen(p)
    p.add_argument("--to", choices=["dl", "ul"], required=True)
    p.set_defaults(func=cmd_transform, tol_default=1e-8)

    p = sub.add_parser("verify-duality", parents=[common],
                       help="check rate/fronthaul/power preservation for a design or a random ensemble")
    scen(p, required=False)
    p.add_argument("--n", type=int, default=1000)
    p.set_defaults(func=cmd_verify_duality, tol_default=1e-8)

    p = sub.add_parser("verify-properties", parents=[common],
                       help="sample the interference-function axioms")
    scen(p, required=False)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--samples", type=int, default=20)
    p.set_defaults(func=cmd_verify_properties, tol_default=0.0)

    p = sub.add_parser("region", parents=[common], help="sample achievable rate tuples")
    scen(p)
    p.add_argument("--direction", choices=["ul", "dl"], required=True)
    p.add_argument("--n", type=int, default=100)
    p.set_defaults(func=cmd_region, tol_default=0.0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "tol", "absent") is None:
        args.tol = args.tol_default
    logging.getLogger(__name__).debug("kernel backend: %s", kernels.BACKEND)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
