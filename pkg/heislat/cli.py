"""
Command-line interface: heislat <subcommand> [options]

Exit codes: 0 when every verdict passes, 1 when any verdict fails, 2 on
usage or configuration errors and on runs that cannot finish (enumeration
budget exceeded, internal invariant failure).
"""

import os
import sys
import json
import logging
import argparse
from typing import Dict, List, Optional

from . import __version__
from . import experiments as ex
from .correlation import cor_direct, cor_exact, cor_numeric
from .evaluation import calculate_suite_metrics, print_acceptance_report, run_acceptance_suite
from .lattice_space import HaarSampler
from .orbits import PrimPair, canonicalize, checked_census
from .regions import disk_of_area, punctured_tube, region_to_spec
from .utils import (
    ConfigError, EnumerationBudgetError, InvariantViolation, as_int_vector2,
    parse_float_list, parse_int_list,
)

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _load_json_arg(value: str) -> Dict:
    """A JSON document given inline or as a path to a file"""
    if os.path.exists(value):
        with open(value) as fh:
            return json.load(fh)
    try:
        return json.loads(value)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{value!r} is neither a file nor valid JSON: {e}") from e


def _common_parser(seed_required: bool = True) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    if seed_required:
        common.add_argument("--seed", type=int, required=True, help="master seed, 0 <= seed < 2**64")
    else:
        common.add_argument("--seed", type=int, default=ex.DEFAULT_SEED,
                            help=f"master seed (default {ex.DEFAULT_SEED})")
    common.add_argument("--trials", type=int, default=10_000, help="Monte Carlo trials")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=int, default=None, help="worker processes (default: all CPUs)")
    common.add_argument("-v", "--verbose", action="count", default=0)
    return common


def _add_region(p: argparse.ArgumentParser, plate: bool = True) -> None:
    p.add_argument("--region", default=None, help="region JSON (file or inline)")
    p.add_argument("--area", type=float, default=None, help="centered disk of this area")
    if plate:
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--z", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    # orbit arithmetic and closed-form correlations draw no lattices
    unseeded = _common_parser(seed_required=False)
    parser = argparse.ArgumentParser(
        prog="heislat",
        description="Heisenberg lattice counting experiments",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common], help="draw lattices or check the Haar sampler")
    p.add_argument("--count", type=int, default=5, help="lattices to print")
    p.add_argument("--space", choices=("euclidean", "heisenberg"), default="heisenberg")
    p.add_argument("--check", action="store_true", help="run the sampler diagnostics instead")

    p = sub.add_parser("mean", parents=[common], help="Siegel mean of a theta transform")
    p.add_argument("--space", choices=("euclidean", "heisenberg"), default="heisenberg")
    _add_region(p)

    p = sub.add_parser("var-identity", parents=[common], help="second-moment identity at z = 0")
    _add_region(p)

    p = sub.add_parser("var-bound", parents=[common], help="second-moment bound")
    p.add_argument("--space", choices=("euclidean", "heisenberg"), default="heisenberg")
    _add_region(p)

    p = sub.add_parser("tail", parents=[common], help="Chebyshev tails")
    p.add_argument("--space", choices=("euclidean", "heisenberg"), default="heisenberg")
    _add_region(p)
    p.add_argument("--r", default="2,4,8", help="comma-separated r values")

    p = sub.add_parser("cor", parents=[unseeded], help="correlation of two primitive vectors")
    p.add_argument("--m", required=True, help="primitive vector, e.g. 1,0")
    p.add_argument("--n", required=True, help="primitive vector, e.g. 0,1")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--z", type=float, default=0.0)
    p.add_argument("--numeric", action="store_true", help="also estimate by quasi-Monte Carlo")
    p.add_argument("--samples", type=int, default=10 ** 6)

    p = sub.add_parser("orbit", parents=[unseeded], help="canonical SL(2,Z) orbit of a pair")
    p.add_argument("--m", required=True)
    p.add_argument("--n", required=True)

    p = sub.add_parser("orbit-count", parents=[unseeded], help="brute-force orbit count")
    p.add_argument("--det", type=int, required=True)
    p.add_argument("--height", type=int, default=60)

    p = sub.add_parser("highdisc", parents=[common], help="dyadic high-discrepancy sets and tubes")
    p.add_argument("--k", default="4,8,16", help="comma-separated piece counts")
    p.add_argument("--thicken", type=float, default=0.05)
    p.add_argument("--R", type=float, default=5.0)

    p = sub.add_parser("stout", parents=[common], help="stout cylinder L2 deviation")
    _add_region(p)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--length", type=float, default=2.0, help="interval length |I|")

    p = sub.add_parser("missprob", parents=[common], help="Heisenberg vs Euclidean miss probability")
    _add_region(p)
    p.add_argument("--tube", default=None, help="punctured tube 'delta,N' instead of a plate")
    p.add_argument("--scaling", default=None,
                   help="comma-separated base areas: fit C in miss rate <= C / m over plates")

    p = sub.add_parser("suite", parents=[common], help="run the acceptance grid")
    p.add_argument("--samples", type=int, default=10 ** 6)
    p.add_argument("--only", default=None, help="comma-separated label prefixes")
    return parser


def _config(args, **overrides) -> ex.ExperimentConfig:
    """ExperimentConfig from the parsed flags; unset flags keep the defaults"""
    kwargs = {"trials": args.trials, "seed": args.seed, "threads": args.threads}
    region = getattr(args, "region", None)
    area = getattr(args, "area", None)
    if region is not None and area is not None:
        raise ConfigError("Give either --region or --area, not both")
    if region is not None:
        spec = _load_json_arg(region)
        for key in ("eps", "z"):
            if key in spec:
                kwargs[key] = spec[key]
        kwargs["region"] = {k: v for k, v in spec.items() if k not in ("eps", "z")}
    elif area is not None:
        kwargs["region"] = region_to_spec(disk_of_area(area))
    for key in ("eps", "z"):
        value = getattr(args, key, None)
        if value is not None:
            kwargs[key] = value
    kwargs.update(overrides)
    return ex.ExperimentConfig(**kwargs)


def _emit(args, payload: Dict, frame=None) -> None:
    if args.format == "csv" and frame is not None:
        text = frame.to_csv(index=False)
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        logger.info("Report written to %s", args.out)
    else:
        sys.stdout.write(text)


def _emit_report(args, report: ex.ExperimentReport) -> int:
    _emit(args, report.to_dict(), report.to_frame())
    return EXIT_PASS if report.passed else EXIT_FAIL


def _cmd_sample(args) -> int:
    if args.check:
        return _emit_report(args, ex.sampler_check(_config(args)))
    out = []
    for i in range(args.count):
        s = HaarSampler.for_trial(args.seed, i)
        if args.space == "euclidean":
            out.append({"trial": i, "basis": s.sample_euclidean().matrix.tolist()})
        else:
            L = s.sample_heisenberg()
            out.append({"trial": i, "basis": L.base.matrix.tolist(), "offset": list(L.offset),
                        "fiber": L.fiber_coordinates.tolist()})
    _emit(args, {"seed": args.seed, "space": args.space, "samples": out})
    return EXIT_PASS


def _cmd_mean(args) -> int:
    cfg = _config(args)
    experiment = ex.siegel_mean_euclidean if args.space == "euclidean" else ex.siegel_mean_heisenberg
    return _emit_report(args, experiment(cfg))


def _cmd_var_identity(args) -> int:
    return _emit_report(args, ex.variance_identity_check(_config(args)))


def _cmd_var_bound(args) -> int:
    cfg = _config(args)
    experiment = ex.euclidean_variance_check if args.space == "euclidean" else ex.variance_bound_check
    return _emit_report(args, experiment(cfg))


def _cmd_tail(args) -> int:
    cfg = _config(args, r_values=parse_float_list(args.r))
    return _emit_report(args, ex.chebyshev_tail(cfg, space=args.space))


def _cmd_cor(args) -> int:
    m, n = as_int_vector2(args.m), as_int_vector2(args.n)
    report = ex.ExperimentReport(name="cor", seed=args.seed, trials=0,
                                 params={"m": list(m), "n": list(n), "eps": args.eps, "z": args.z})
    exact = cor_exact(m, n, args.eps, args.z)
    direct = cor_direct(m, n, args.eps, args.z)
    report.add_estimate("exact", exact)
    report.add_estimate("direct", direct)
    if args.numeric:
        value, se = cor_numeric(m, n, args.eps, args.z, samples=args.samples, seed=args.seed)
        report.trials = args.samples
        report.add_estimate("numeric", value, se)
        tol = max(3.0 * se, 2e-3)
        report.check("numeric", abs(value - direct) <= tol, value, direct, tol)
        if abs(value - exact) > tol:
            report.note(f"numeric {value:.5f} differs from the closed form {exact:g}", logging.WARNING)
    return _emit_report(args, report)


def _cmd_orbit(args) -> int:
    c = canonicalize(PrimPair(as_int_vector2(args.m), as_int_vector2(args.n)))
    payload = {"D": c.D, "rep": [list(c.rep.m), list(c.rep.n)], "sign_tag": c.sign_tag, "label": c.label()}
    _emit(args, payload)
    return EXIT_PASS


def _cmd_orbit_count(args) -> int:
    census = checked_census(args.det, args.height)
    _emit(args, {"D": args.det, "height": args.height, "orbits": len(census["classes"]),
                 "residues": census["residues"], "pairs": census["pairs"]})
    return EXIT_PASS


def _cmd_highdisc(args) -> int:
    cfg = _config(args, k_values=parse_int_list(args.k), thicken=args.thicken, R=args.R)
    return _emit_report(args, ex.high_discrepancy_check(cfg))


def _cmd_stout(args) -> int:
    cfg = _config(args, delta=args.delta, interval_length=args.length)
    return _emit_report(args, ex.stout_cylinder_check(cfg))


def _cmd_missprob(args) -> int:
    cfg = _config(args)
    if args.scaling:
        if args.tube:
            raise ConfigError("Give either --tube or --scaling, not both")
        return _emit_report(args, ex.heisenberg_miss_scaling(cfg, parse_float_list(args.scaling)))
    S = None
    if args.tube:
        delta, N = parse_float_list(args.tube)
        S = punctured_tube(delta, N)
    return _emit_report(args, ex.miss_probability(cfg, S))


def _cmd_suite(args) -> int:
    include = [s.strip() for s in args.only.split(",")] if args.only else None
    summary, _ = run_acceptance_suite(trials=args.trials, seed=args.seed, threads=args.threads,
                                      samples=args.samples, include=include,
                                      out_csv=args.out if args.format == "csv" else None)
    metrics = calculate_suite_metrics(summary)
    if args.format == "json":
        _emit(args, {"metrics": metrics, "verdicts": summary.to_dict(orient="records")})
    else:
        print_acceptance_report(summary, metrics)
    return EXIT_PASS if metrics["all_passed"] else EXIT_FAIL


COMMANDS = {
    "sample": _cmd_sample,
    "mean": _cmd_mean,
    "var-identity": _cmd_var_identity,
    "var-bound": _cmd_var_bound,
    "tail": _cmd_tail,
    "cor": _cmd_cor,
    "orbit": _cmd_orbit,
    "orbit-count": _cmd_orbit_count,
    "highdisc": _cmd_highdisc,
    "stout": _cmd_stout,
    "missprob": _cmd_missprob,
    "suite": _cmd_suite,
}


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse argv, execute the subcommand and return the exit code

    Returns:
    --------
    int
        0 pass, 1 failed verdict, 2 usage or configuration error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_PASS

    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(format="%(asctime)s - %(levelname)s - %(message)s", level=level)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, TypeError) as e:
        # ConfigError, DomainError and PreconditionError are ValueErrors
        print(f"heislat {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except EnumerationBudgetError as e:
        print(f"heislat {args.command}: enumeration budget exceeded: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as e:
        logger.error("Internal invariant failed: %s", e)
        print(f"heislat {args.command}: invariant violation: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
