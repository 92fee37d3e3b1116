"""Command-line front end for critical-length tables, spectra and two-qubit sweeps."""

from __future__ import annotations

import argparse
import sys
import warnings

from .harness import load_config, run_sweep

_MODE_OF = {
    ("table", "hpst"): "hpst_table",
    ("table", "mixed"): "mixed_table",
    ("spectrum", None): "spectrum",
    ("profile", None): "spectrum",
    ("two-qubit", "vertex"): "two_qubit_vertex",
    ("two-qubit", "lattice"): "two_qubit_lattice",
    ("two-qubit", "accuracy"): "accuracy_curve",
}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value file; flags override its entries")
    p.add_argument("--out", help="output directory (default: results)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--k-fail", dest="k_fail", type=int)
    p.add_argument("--n-start", dest="n_start", type=int)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--window-factor", dest="window_factor", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--extended", action="store_true", default=None, help="allow long chains and uncapped scans")
    p.add_argument("--resume", action="store_true", help="reuse matching records already in the store")
    p.add_argument("--nearest-neighbor", dest="nearest_neighbor", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinline", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table", help="critical-length table over sender/receiver sizes")
    p.add_argument("--mode", choices=("hpst", "mixed"), default="hpst")
    p.add_argument("--ns", default=None, help="sender sizes, e.g. 1-3 or 1,2,5")
    p.add_argument("--nr", default=None, help="extended-receiver sizes")
    _common(p)

    for name, what in (("spectrum", "eigenmode amplitudes and phases"), ("profile", "node profile |f_n(t0)|")):
        p = sub.add_parser(name, help=f"{what} of the optimized transfer")
        p.add_argument("--n", required=True, help="chain lengths")
        p.add_argument("--ns", required=True)
        p.add_argument("--nr", required=True)
        p.add_argument("--p-min-fraction", dest="p_min_fraction", type=float)
        _common(p)

    p = sub.add_parser("two-qubit", help="two-qubit receiver state creation")
    p.add_argument("task", choices=("vertex", "lattice", "accuracy"))
    p.add_argument("--targets", help="vertex names, e.g. L3,L4")
    p.add_argument("--n", help="chain lengths for the accuracy curve")
    p.add_argument("--resolution", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--eps-threshold", dest="eps_threshold", type=float)
    _common(p)
    return parser


def _overrides(args) -> dict:
    skip = {"command", "mode", "task", "config", "resume"}
    return {k: v for k, v in vars(args).items() if k not in skip and v is not None}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    key = (args.command, getattr(args, "mode", None) or getattr(args, "task", None))
    try:
        config = load_config(args.config, mode=_MODE_OF[key], **_overrides(args))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            run_sweep(config, resume=args.resume)
    except KeyboardInterrupt:
        print("interrupted; completed records are kept in the store", file=sys.stderr)
        return 130
    except Exception as exc:  # every failure becomes a message and a nonzero code
        print(f"spinline: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
