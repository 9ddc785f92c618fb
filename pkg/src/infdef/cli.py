"""Command-line interface.

Subcommands: generate, sweep, bounds, baseline-fom, oracle-deflate,
reachability.  Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import (
    ConfigError,
    DivergenceError,
    FormulaDomainError,
    NumericalError,
    ParamError,
    SingularityError,
    UnknownDensityError,
    UnknownManifoldError,
)
from . import runner

_NUMERICAL = (NumericalError, DivergenceError, SingularityError, FormulaDomainError)
_CONFIG = (ConfigError, ParamError, UnknownDensityError, UnknownManifoldError)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", required=True, help="path to the experiment config JSON")
    p.add_argument("--out", default=None, help="output directory (overrides config out_dir)")
    p.add_argument("--seed", type=int, default=None, help="run a single seed instead of the config's list")
    p.add_argument("--workers", type=int, default=1, help="worker processes for sweep cells")
    p.add_argument("--preset", choices=("desk", "paper"), default=None,
                   help="flow/grid preset (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="infdef",
                                 description="Inflation-deflation density estimation experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("generate", "write latent, on-manifold, and inflated sample CSVs"),
        ("sweep", "train over the sigma^2 grid x seeds and tabulate KS results"),
        ("bounds", "estimate the sigma^2 lower/upper bounds"),
        ("baseline-fom", "train the flow-on-latent baseline and report its KS"),
        ("oracle-deflate", "flow-free deflation identity check (analytic inflated density)"),
        ("reachability", "estimate the fraction of multi-generator inflated points"),
    ]:
        _add_common(sub.add_parser(name, help=help_text))
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"out": args.out, "seed": args.seed, "preset": args.preset}
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "generate":
            out = runner.cmd_generate(cfg)
        elif args.command == "sweep":
            out = runner.cmd_sweep(cfg, workers=args.workers)
        elif args.command == "bounds":
            out = runner.cmd_bounds(cfg)
        elif args.command == "baseline-fom":
            out = runner.cmd_baseline_fom(cfg)
        elif args.command == "oracle-deflate":
            out = runner.cmd_oracle_deflate(cfg)
        elif args.command == "reachability":
            out = runner.cmd_reachability(cfg)
        else:  # pragma: no cover
            raise ConfigError(f"unknown command {args.command}")
    except _CONFIG as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
