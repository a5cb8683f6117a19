"""Command-line entry point: ``fpf-bench simulate`` and ``fpf-bench gain-check``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import checks
from .bench import FILTER_IDS, rmse_csv, run_experiment, write_csv, write_traces
from .config import build, load_file
from .kernel import H_TERMS, TRACE_FORMS
from .sim import NOISE_CONVENTIONS


def _simulate_parser(sub):
    p = sub.add_parser("simulate", help="run the Monte Carlo filter comparison and write an RMSE CSV")
    p.add_argument("--config", help="YAML file with any of the options below (flags win)")
    p.add_argument("--scenario", choices=["a", "b"])
    p.add_argument("--filters", help=f"comma-separated subset of {','.join(FILTER_IDS)}")
    p.add_argument("--runs", type=int, help="Monte Carlo runs M (default 20)")
    p.add_argument("--particles", type=int, help="particles N (default 200)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--full", action="store_true", default=None, help="full-scale table values (M = 100)")
    p.add_argument("--deterministic", action="store_true", default=None, help="omit the timestamp header line")
    p.add_argument("--nf-fpfg", dest="nf_fpfg", type=int, help="sub-intervals for FPF-G on early steps")
    p.add_argument("--nf-other", dest="nf_other", type=int, help="sub-intervals for the other filters")
    p.add_argument("--nf-steps", dest="nf_steps", type=int, help="number of early steps that are subdivided")
    p.add_argument("--eps", type=float, help="kernel bandwidth (default 1)")
    p.add_argument("--kernel-iterations", dest="kernel_iterations", type=int, help="fixed-point sweeps (default 10)")
    p.add_argument("--kernel-h-term", dest="kernel_h_term", choices=sorted(H_TERMS))
    p.add_argument("--kernel-trace-form", dest="kernel_trace_form", choices=TRACE_FORMS)
    p.add_argument("--noise-convention", dest="noise_convention", choices=NOISE_CONVENTIONS)
    p.add_argument("--horizon", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--trace-dir", dest="trace_dir", help="directory for per-run angle-error traces")
    return p


def _gain_check_parser(sub):
    p = sub.add_parser("gain-check", help="run the gain-solver self-checks")
    p.add_argument("--solver", choices=["galerkin", "kernel"], required=True)
    p.add_argument("--particles", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    return p


def simulate(args):
    options = load_file(args.config) if args.config else {}
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "func", "verbose")}
    options.update({k: v for k, v in flags.items() if v is not None})
    config, output = build(options)
    result = run_experiment(config)
    text = rmse_csv(result, deterministic=output.deterministic, meta=f"scenario={config.scenario.name} seed={config.seed}")
    if output.out is not None:
        path = write_csv(output.out, text)
        print(f"wrote {path}")
    else:
        sys.stdout.write(text)
    if output.trace_dir is not None:
        write_traces(output.trace_dir, result)
    print(result.summary(), file=sys.stderr if output.out is None else sys.stdout)
    return 0


def gain_check(args):
    if args.solver == "galerkin":
        results = checks.galerkin_checks(args.particles, args.seed)
    else:
        results = checks.kernel_checks(args.particles, args.seed)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def main(argv=None):
    parser = argparse.ArgumentParser(prog="fpf-bench", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _simulate_parser(sub).set_defaults(func=simulate)
    _gain_check_parser(sub).set_defaults(func=gain_check)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        parser.exit(2, f"fpf-bench: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
