"""Command-line entry point: ``agrs <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import experiments as ex

log = logging.getLogger("agrs")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}")


def _sigmas(args) -> list[float]:
    if args.sigma_grid:
        return args.sigma_grid
    if args.info_grid:
        return [ex.sigma_for_info(b, args.rho) for b in args.info_grid]
    if args.sigma is not None:
        return [args.sigma]
    return [ex.sigma_for_info(b, args.rho) for b in range(1, 12)]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="agrs", description="Greedy rejection sampling experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, mode_default="agrs", trials_default=400):
        sp.add_argument("--mode", choices=ex.MODES, default=mode_default)
        sp.add_argument("--sigma", type=float, default=None)
        sp.add_argument("--sigma-grid", type=_floats, default=None, help="comma separated sigmas")
        sp.add_argument("--info-grid", type=_floats, default=None,
                        help="comma separated I[X; mu] values in bits, converted to sigmas")
        sp.add_argument("--rho", type=float, default=1.0)
        sp.add_argument("--dim", type=int, default=None)
        sp.add_argument("--trials", type=int, default=trials_default)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out", default="-", help="output path ('-' for stdout)")

    sp = sub.add_parser("overdispersion", help="runtime and coding cost against the proposal scale")
    common(sp, "grs", 0)
    sp.add_argument("--s-grid", type=_floats, default=None, help="comma separated proposal scales s")

    sp = sub.add_parser("runtime", help="iterations per target against KL")
    common(sp)
    sp.add_argument("--targets", type=int, default=20)

    sp = sub.add_parser("coding-cost", help="bound and index coding cost per sigma")
    common(sp, trials_default=10_000)

    sp = sub.add_parser("verify", help="run the theorem checks and write a JSON report")
    common(sp, "grs", 10_000)
    return p


def _emit(text: str, path: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.trials < 0 or (args.command != "overdispersion" and args.trials < 1):
        print("error: --trials must be positive", file=sys.stderr)
        return 2

    if args.command == "overdispersion":
        sigma = 3.0 if args.sigma is None else args.sigma
        dim = 4 if args.dim is None else args.dim
        table = ex.overdispersion_sweep(dim, args.rho, sigma, args.s_grid, args.trials,
                                        args.seed, args.workers)
        _emit(table.to_csv(), args.out)
        return 0

    if args.command in ("runtime", "coding-cost"):
        if args.dim not in (None, 1):
            print("error: the runtime and coding-cost sweeps are one dimensional", file=sys.stderr)
            return 2
        sigmas = _sigmas(args)
        log.info("sigma grid: %s", sigmas)
        if args.command == "runtime":
            table = ex.runtime_sweep(args.mode, sigmas, args.rho, args.targets, args.trials,
                                     args.seed, args.workers)
        else:
            table = ex.coding_cost_sweep(args.mode, sigmas, args.rho, args.trials, args.seed, args.workers)
        _emit(table.to_csv(), args.out)
        return 0

    checks = ex.verify_suite(args.trials, args.seed)
    report = [c.as_dict() for c in checks]
    _emit(json.dumps(report, indent=2) + "\n", "verify_report.json" if args.out == "-" else args.out)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.check_name}: observed={c.observed:.6g} "
              f"expected={c.expected:.6g} tol={c.tolerance:.3g}")
    return 0 if all(c.passed for c in checks) else 1


if __name__ == "__main__":
    sys.exit(main())
