"""Command-line front end.

Exit status: 0 success, 1 runtime failure (or a failed check), 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import __version__
from .config import build_benchmark, build_model, build_study, load_config, reference_value
from .errors import CapabilityError, ConfigError
from .harness import (THREADS_ENV, Benchmark, compute_benchmark, convergence_study, default_threads,
                      sample_model, tie_census)
from .lowdisc import check_net_property, mc_points, scramble_linear, scramble_nested, sobol_net
from .rng import derive_seed

log = logging.getLogger("cvarsens")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="PATH", help="study config file or bundled name (case1.cfg, ...)")
    p.add_argument("--out", metavar="DIR", help="output directory for CSV files")
    p.add_argument("--set", dest="overrides", metavar="KEY=VALUE", action="append", default=[],
                   help="override a config entry, e.g. study.R=5 (repeatable)")
    p.add_argument("--seed", type=int, help="master seed (overrides study.seed)")
    p.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or cpu count, max 4)")
    p.add_argument("--quiet", action="store_true", help="print only essential results")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="cvarsens", description="CVaR sensitivity estimation with RQMC.",
                     formatter_class=argparse.RawDescriptionHelpFormatter,
                     epilog=_config_help())
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("run", parents=[common], help="run a convergence study and write CSVs")
    sub.add_parser("bench", parents=[common], help="compute the benchmark sensitivity")
    p = sub.add_parser("check-net", parents=[common], help="verify the (t,m,d)-net property over seeds")
    p.add_argument("--m", type=int, default=6)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--t", type=int, default=None, help="quality parameter (required for d > 2)")
    p.add_argument("--scheme", choices=("linear", "nested", "mc"), default="linear")
    p.add_argument("--seeds", type=int, default=20)
    p = sub.add_parser("tie-census", parents=[common], help="largest tie count in scrambled-Sobol' samples")
    p.add_argument("--m", type=int, default=12)
    p.add_argument("--method", default="rqmc-linear")
    p.add_argument("--seeds", type=int, default=10)
    sub.add_parser("selftest", parents=[common], help="quick internal consistency checks")
    return parser


def _config_help() -> str:
    from . import config

    return "config file format:\n" + "\n".join("  " + ln for ln in config.__doc__.strip().splitlines())


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


def _threads(args) -> int:
    return args.threads if args.threads is not None else default_threads()


def _need_config(args):
    if not args.config:
        raise ConfigError("--config is required for this command", source="command line")
    try:
        return load_config(args.config, args.overrides)
    except FileNotFoundError:
        raise ConfigError(f"no such config file: {args.config}", source="command line") from None


def cmd_run(args) -> int:
    raw = _need_config(args)
    study = build_study(raw, seed=args.seed, out_dir=args.out or raw.get("study", "out") or ".",
                        threads=_threads(args))
    report = convergence_study(study)
    stats_path, slopes_path = (os.path.join(study.out_dir, f"{study.name}_{k}.csv") for k in ("errors", "slopes"))
    _say(args, report.summary())
    print(f"wrote {stats_path}\nwrote {slopes_path}")
    return EXIT_OK


def cmd_bench(args) -> int:
    raw = _need_config(args)
    model = build_model(raw)
    spec = build_benchmark(raw, model)
    if isinstance(spec, Benchmark):
        raise ConfigError("bench needs benchmark.source = self", source=raw.source)
    study_seed = raw.get("study", "seed")
    seed = args.seed if args.seed is not None else int(study_seed) if study_seed else 2024
    alpha = float(raw.get("study", "alpha", 0.9))
    bench = compute_benchmark(model, alpha, spec, seed, threads=_threads(args))
    print(f"{model.name}: {bench.value!r} +/- {bench.se:.3g} ({bench.source})")
    ref = reference_value(raw)
    if ref is not None:
        z = (bench.value - ref) / bench.se if bench.se > 0 else (0.0 if bench.value == ref else math.inf)
        print(f"published {ref}: z = {z:.2f}")
    return EXIT_OK


def cmd_check_net(args) -> int:
    if args.t is None and args.d > 2:
        print(f"refusing: t is not known for Sobol' nets in d={args.d}; pass --t", file=sys.stderr)
        return EXIT_USAGE
    t = 0 if args.t is None else args.t
    base = args.seed if args.seed is not None else 0
    failures = 0
    net = sobol_net(args.m, args.d) if args.scheme != "mc" else None
    for s in range(args.seeds):
        seed = derive_seed(base, "check-net", s)
        if args.scheme == "mc":
            pts = mc_points(2**args.m, args.d, seed)
        elif args.scheme == "nested":
            pts = scramble_nested(net, seed)
        else:
            pts = scramble_linear(net, seed)
        ok = check_net_property(pts, t, args.m, args.d)
        failures += not ok
        if not args.quiet:
            print(f"seed {s}: {'pass' if ok else 'FAIL'}")
    print(f"{args.seeds - failures}/{args.seeds} point sets are ({t},{args.m},{args.d})-nets ({args.scheme})")
    return EXIT_OK if failures == 0 else EXIT_FAIL


def cmd_tie_census(args) -> int:
    raw = _need_config(args)
    model = build_model(raw)
    base = args.seed if args.seed is not None else 0
    worst = 0
    for s in range(args.seeds):
        sample = sample_model(model, args.method, args.m, derive_seed(base, "tie-census", s))
        worst = max(worst, tie_census(sample))
    print(f"{model.name}: max tie multiplicity {worst} over {args.seeds} samples of n=2^{args.m}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .models import SingleAssetConfig, bs_value, single_asset_var
    from .special import inv_normal_cdf, normal_cdf

    checks = {
        "net property, linear": all(check_net_property(scramble_linear(sobol_net(6, 2), s), 0, 6, 2)
                                    for s in range(5)),
        "net property, nested": all(check_net_property(scramble_nested(sobol_net(6, 2), s), 0, 6, 2)
                                    for s in range(5)),
        "quantile round trip": bool(np.max(np.abs(normal_cdf(inv_normal_cdf(np.linspace(1e-6, 1 - 1e-6, 1001)))
                                                  - np.linspace(1e-6, 1 - 1e-6, 1001))) < 1e-12),
        "put-call parity": abs(bs_value(100, 95, 0.03, 0.2, 0.25, "call") - bs_value(100, 95, 0.03, 0.2, 0.25, "put")
                               - (100 - 95 * math.exp(-0.03 * 0.25))) < 1e-12,
        "closed-form VaR 0.859": round(single_asset_var(SingleAssetConfig(), 0.9), 3) == 0.859,
    }
    for name, ok in checks.items():
        _say(args, f"{'pass' if ok else 'FAIL'}  {name}")
    return EXIT_OK if all(checks.values()) else EXIT_FAIL


COMMANDS = {"run": cmd_run, "bench": cmd_bench, "check-net": cmd_check_net,
            "tie-census": cmd_tie_census, "selftest": cmd_selftest}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, CapabilityError) as exc:
        print(f"cvarsens: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # runtime failure
        log.debug("failure", exc_info=True)
        print(f"cvarsens: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
