"""Command-line interface.

    epnls solve    --scheme ep1 --ic fig1 --T 100 --h 0.01 --out solve.csv
    epnls converge --scheme ep1,ep2,ep3 --eps 1,0.1,0.01 --out conv.csv
    epnls conserve --scheme ep1,ep2,ep3,etd2 --T 10000 --out cons.csv
    epnls epcheck  --scheme ep1,ep2,ep3,etd2 --out ep.csv

Flags mirror the JSON config file (--config); explicit flags win.  Exit
codes: 0 success, 1 configuration error, 2 solver non-convergence.
"""

from __future__ import annotations

import argparse
import sys

from ..stepper import StepConvergenceError
from .config import ConfigError, config_from_dict, load_config_file, with_mode_defaults
from .runs import run_conserve, run_converge, run_epcheck, run_solve

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on bad usage; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: config error: {message}\n")
        raise SystemExit(1)

    def exit(self, status=0, message=None):
        if message:
            sys.stderr.write(message)
        raise SystemExit(1 if status else 0)


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--scheme", help="ep1|ep2|ep3|etd2, comma list for sweeps")
    p.add_argument("--ep2-m", dest="ep2_m", type=float, help="EP2 parameter m (not 0 or 1)")
    p.add_argument("--M", type=int, help="half mode count (2M collocation points)")
    p.add_argument("--L", type=float, help="domain length (default: preset's length)")
    p.add_argument("--eps", help="regime parameter; comma list for converge")
    p.add_argument("--lambda", dest="lam", type=float, help="nonlinearity coefficient")
    p.add_argument("--h", help="time step, or comma list for converge")
    p.add_argument("--T", type=float, help="final time")
    p.add_argument("--quad", help="quadrature: mp or gl2..gl10 (default gl3)")
    p.add_argument("--fp-tol", dest="fp_tol", type=float, help="fixed-point tolerance")
    p.add_argument("--fp-max", dest="fp_max", type=int, help="fixed-point iteration cap")
    p.add_argument("--ic", help="fig1|converge|smalldata|fourier:<file>")
    p.add_argument("--mu", type=float, help="fig1 wave number (default 2*pi/L)")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--stride", type=int, help="observable sampling stride (steps)")
    p.add_argument("--snapshot", help="final-state snapshot path (solve)")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    p.add_argument("--engine", choices=["auto", "numpy", "numba"], help="stepper engine")
    p.add_argument("--workers", type=int, help="worker processes for sweeps (0 = cpu count)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="epnls", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode, desc in [
        ("solve", "evolve one trajectory and record conserved-quantity errors"),
        ("converge", "convergence-order sweep against a fine reference"),
        ("conserve", "long-time density/momentum/action near-conservation series"),
        ("epcheck", "energy-preservation condition residuals and quadrature defects"),
    ]:
        p = sub.add_parser(mode, help=desc)
        _common_flags(p)
        if mode == "epcheck":
            p.add_argument("--theta-max", dest="theta_max", type=float)
            p.add_argument("--theta-samples", dest="theta_samples", type=int)
            p.add_argument("--tau-samples", dest="tau_samples", type=int)
            p.add_argument("--sigma-samples", dest="sigma_samples", type=int)
            p.add_argument("--seed", type=int)
    return parser


_LIST_EPS_MODES = {"converge"}


def _merge(args: argparse.Namespace) -> tuple[dict, set]:
    """Config file values overridden by explicit flags; returns (dict, given keys)."""
    merged: dict = {}
    if args.config:
        merged.update(load_config_file(args.config))
    flag_map = {
        "scheme": args.scheme, "ep2_m": args.ep2_m, "M": args.M, "L": args.L,
        "lambda": args.lam, "h": args.h, "T": args.T, "quad": args.quad,
        "fp_tol": args.fp_tol, "fp_max": args.fp_max, "ic": args.ic, "mu": args.mu,
        "out": args.out, "stride": args.stride, "snapshot": args.snapshot,
        "engine": args.engine, "workers": args.workers,
    }
    for key in ("theta_max", "theta_samples", "tau_samples", "sigma_samples", "seed"):
        flag_map[key] = getattr(args, key, None)
    if args.eps is not None:
        vals = [float(x) for x in str(args.eps).split(",") if x.strip()]
        if len(vals) > 1:
            if args.mode not in _LIST_EPS_MODES:
                raise ConfigError(f"--eps list only applies to converge, got {args.eps!r}")
            flag_map["eps_list"] = vals
        else:
            flag_map["eps"] = vals[0]
            if args.mode in _LIST_EPS_MODES:
                flag_map["eps_list"] = vals
    for key, val in flag_map.items():
        if val is not None:
            merged[key] = val
    if args.no_plot:
        merged["plot"] = False
    merged["mode"] = args.mode
    return merged, set(merged)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        merged, given = _merge(args)
        cfg = with_mode_defaults(config_from_dict(merged), given)
        runner = {"solve": run_solve, "converge": run_converge,
                  "conserve": run_conserve, "epcheck": run_epcheck}[cfg.mode]
        result = runner(cfg)
    except ConfigError as exc:
        print(f"epnls: config error: {exc}", file=sys.stderr)
        return 1
    except StepConvergenceError as exc:
        print(f"epnls: {exc}", file=sys.stderr)
        return 2
    if cfg.mode == "converge":
        dead = [key for key, sl in result.slopes.items() if sl["n_points"] == 0]
        if dead:
            print(f"epnls: no converged points for {dead}", file=sys.stderr)
            return 2
    print(f"epnls {cfg.mode}: wrote {result.csv_path}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
