"""Command-line interface: converge, swarm and energy-trace reports.

Each subcommand writes the requested delimited output (CSV or JSON, by
extension or --format) and a companion figure next to it.  Exit codes:
0 on completion, 1 on configuration errors, 2 on I/O errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .errors import ConfigError, SbimError
from .harness import (
    ExperimentConfig,
    export,
    run_convergence,
    run_energy_trace,
    run_swarm_batch,
)
from .objectives import OBJECTIVE_NAMES


def _parse_h_sweep(text: str) -> list[float]:
    """Parse '1:1/128' (halving sweep) or a comma list like '1,0.5,0.25'."""

    def one(tok: str) -> float:
        tok = tok.strip()
        if "/" in tok:
            num, den = tok.split("/")
            return float(num) / float(den)
        return float(tok)

    if ":" in text:
        start, end = (one(t) for t in text.split(":"))
        if start <= 0 or end <= 0 or end > start:
            raise ConfigError("h-sweep range must satisfy 0 < end <= start")
        out = [start]
        while out[-1] / 2.0 >= end * (1.0 - 1e-12):
            out.append(out[-1] / 2.0)
        return out
    return [one(t) for t in text.split(",")]


def _parse_x0(text: str):
    if text == "uniform-box":
        return "uniform-box"
    return [float(t) for t in text.split(",")]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--fn", dest="function", choices=OBJECTIVE_NAMES)
    parser.add_argument("--dim", type=int)
    parser.add_argument("--shift-b", dest="shift_b", type=float)
    parser.add_argument("--offset-c", dest="offset_c", type=float)
    parser.add_argument(
        "--scheme",
        choices=["fd", "imexrb", "semi", "fb", "ipahd", "nesterov", "gd"],
    )
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--step-h", dest="step", type=float)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--beta-scale", dest="beta_scale", type=float)
    parser.add_argument("--imex-eps", dest="imex_eps", type=float)
    parser.add_argument("--imex-max-inner", dest="imex_max_inner", type=int)
    parser.add_argument("--gd-step", dest="gd_step", type=float)
    parser.add_argument("--x0", type=_parse_x0)
    parser.add_argument("--max-iterations", dest="max_iterations", type=int)
    parser.add_argument("--config", type=Path, help="JSON file with config fields")
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--format", choices=["csv", "json"])
    parser.add_argument("--no-plot", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbim",
        description="Swarm-based inertial minimization experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    converge = sub.add_parser("converge", help="single-agent rate sweep")
    _add_common(converge)
    converge.add_argument("--h-sweep", dest="h_sweep", type=_parse_h_sweep)

    swarm = sub.add_parser("swarm", help="seeded swarm success-rate batch")
    _add_common(swarm)
    swarm.add_argument("--agents", dest="agents", type=int)
    swarm.add_argument("--p-exponent", dest="p_exponent", type=float)
    swarm.add_argument("--tol-mass", dest="tol_mass", type=float)
    swarm.add_argument("--tol-merge", dest="tol_merge", type=float)
    swarm.add_argument("--trials", type=int)
    swarm.add_argument("--seed", dest="master_seed", type=int)
    swarm.add_argument("--workers", type=int, default=1)

    trace = sub.add_parser("energy-trace", help="per-step diagnostics of one run")
    _add_common(trace)
    trace.add_argument("--h", dest="step", type=float)

    return parser


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def _build_config(args: argparse.Namespace, mode: str) -> ExperimentConfig:
    values: dict = {}
    if args.config is not None:
        with open(args.config) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - _CONFIG_FIELDS
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        values.update(loaded)
    for key, value in vars(args).items():
        if key in _CONFIG_FIELDS and value is not None:
            values[key] = value
    values["mode"] = mode
    return ExperimentConfig(**values)


def _output_format(args) -> str:
    if args.format:
        return args.format
    return "json" if args.out.suffix.lower() == ".json" else "csv"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "converge":
            config = _build_config(args, "converge")
            rows = run_convergence(config)
            payload = rows
        elif args.command == "swarm":
            config = _build_config(args, "swarm")
            row, records = run_swarm_batch(config, workers=args.workers)
            payload = [row]
        else:
            config = _build_config(args, "energy-trace")
            rows = run_energy_trace(config)
            payload = rows
    except (ConfigError, SbimError, ValueError) as exc:
        print(f"sbim: config error: {exc}", file=sys.stderr)
        return 1

    try:
        export(payload, args.out, _output_format(args))
        if not args.no_plot:
            from . import plots

            figure_path = args.out.with_suffix(".png")
            if args.command == "converge":
                plots.convergence_figure(payload, figure_path)
            elif args.command == "swarm":
                plots.swarm_figure(payload[0], records, figure_path)
            else:
                plots.trace_figure(payload, figure_path)
    except OSError as exc:
        print(f"sbim: i/o error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
