"""Command line interface.

Subcommands: pattern, field, sweep, avg-sweep, dump-channel, selfcheck.
Each resolves its configuration from a built-in profile, an optional
config file and a handful of flag overrides, in that order.  Angles on
the command line are degrees.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from typing import List, Optional

import numpy as np

from .config import RunConfig, load_config, profile_by_name
from .experiments import (
    run_avg_sweep,
    run_channel_dump,
    run_field,
    run_pattern,
    run_selfcheck,
    run_sweep,
)

_DEFAULT_CSV = {
    "pattern": "pattern.csv",
    "field": "field.csv",
    "sweep": "sweep.csv",
    "avg-sweep": "avg_sweep.csv",
}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--profile", default="desk", help="base profile: desk or full")
    sub.add_argument("--config", default=None, help="INI config file overriding the profile")
    sub.add_argument("--out", default=None, help="output CSV (or channel file) path")
    sub.add_argument("--svg", default=None, help="SVG plot path (default: next to the CSV)")
    sub.add_argument("--no-svg", action="store_true", help="skip the SVG plot")
    sub.add_argument("--workers", type=int, default=None, help="parallel worker count")
    sub.add_argument("--seed", type=int, default=None, help="ensemble seed")
    sub.add_argument("--dx", type=float, default=None, help="lateral offset d_x [m]")
    sub.add_argument("--dz", type=float, default=None, help="vertical offset d_z [m]")
    sub.add_argument("--theta", type=float, default=None, help="tilt theta_s [deg]")
    sub.add_argument("--phi", type=float, default=None, help="azimuth phi_s [deg]")
    sub.add_argument("--n-modes", type=int, default=None, help="mode count N")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wdmlink",
        description="Line-of-sight wavenumber-division multiplexing link simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pattern", help="radiation pattern cuts of selected modes")
    _add_common(p)
    p.add_argument("--mode-offsets", default=None,
                   help="comma list of offsets from the center mode")
    p.add_argument("--step", type=float, default=None, help="angular step [deg]")

    p = sub.add_parser("field", help="received field profiles of selected modes")
    _add_common(p)
    p.add_argument("--mode-offsets", default=None,
                   help="comma list of offsets from the center mode")
    p.add_argument("--grid-points", type=int, default=None, help="heights per profile")

    p = sub.add_parser("sweep", help="spectral efficiency over a parameter grid")
    _add_common(p)
    p.add_argument("--parameter", default=None, choices=("d_z", "theta_s", "d_x"))
    p.add_argument("--start", type=float, default=None)
    p.add_argument("--stop", type=float, default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--cache-dir", default=None, help="channel cache directory")

    p = sub.add_parser("avg-sweep", help="orientation-averaged SE versus d_x")
    _add_common(p)
    p.add_argument("--start", type=float, default=None)
    p.add_argument("--stop", type=float, default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--draws", type=int, default=None, help="tilt draws per azimuth")
    p.add_argument("--cache-dir", default=None, help="channel cache directory")

    p = sub.add_parser("dump-channel", help="assemble and save the channel matrices")
    _add_common(p)

    p = sub.add_parser("selfcheck", help="run numerical health checks")
    _add_common(p)
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = profile_by_name(args.profile)
    if args.config:
        cfg = load_config(args.config, base=cfg)

    geom = cfg.geometry
    geom_kwargs = {}
    if args.dx is not None:
        geom_kwargs["d_x"] = args.dx
    if args.dz is not None:
        geom_kwargs["d_z"] = args.dz
    if args.theta is not None:
        geom_kwargs["theta_s"] = math.radians(args.theta)
    if args.phi is not None:
        geom_kwargs["phi_s"] = math.radians(args.phi)
    if geom_kwargs:
        geom = replace(geom, **geom_kwargs)

    wdm = cfg.wdm
    if args.n_modes is not None:
        wdm = replace(wdm, n_modes=args.n_modes)

    sweep = cfg.sweep
    sweep_kwargs = {}
    for name, key in (
        ("parameter", "parameter"),
        ("start", "start"),
        ("stop", "stop"),
        ("count", "count"),
        ("seed", "seed"),
        ("draws", "draws_per_phi"),
    ):
        value = getattr(args, name, None)
        if value is not None:
            sweep_kwargs[key] = value
    if getattr(args, "command", "") == "avg-sweep":
        sweep_kwargs.setdefault("parameter", "d_x")
        if "start" not in sweep_kwargs and cfg.sweep.parameter != "d_x":
            # profile sweeps move d_z by default; fall back to the
            # 5..15 m lateral range the averaged curves are read over
            sweep_kwargs.setdefault("start", 5.0)
            sweep_kwargs.setdefault("stop", 15.0)
    if sweep_kwargs:
        sweep = replace(sweep, **sweep_kwargs)

    field = cfg.field
    if getattr(args, "grid_points", None) is not None:
        field = replace(field, grid_points=args.grid_points)
    pattern = cfg.pattern
    if getattr(args, "step", None) is not None:
        pattern = replace(pattern, step_deg=args.step)
    offsets = getattr(args, "mode_offsets", None)
    if offsets is not None:
        parsed = tuple(int(v.strip()) for v in offsets.split(",") if v.strip())
        if not parsed:
            raise ValueError("--mode-offsets must list at least one offset")
        if args.command == "pattern":
            pattern = replace(pattern, mode_offsets=parsed)
        else:
            field = replace(field, mode_offsets=parsed)

    output = cfg.output
    out_kwargs = {}
    if args.workers is not None:
        out_kwargs["workers"] = args.workers
    if getattr(args, "cache_dir", None) is not None:
        out_kwargs["cache_dir"] = args.cache_dir
    if args.out is not None:
        out_kwargs["csv_path"] = args.out
    if args.svg is not None:
        out_kwargs["svg_path"] = args.svg
    if out_kwargs:
        output = replace(output, **out_kwargs)

    return RunConfig(
        geometry=geom,
        wdm=wdm,
        sweep=sweep,
        field=field,
        pattern=pattern,
        output=output,
        mmse_form=cfg.mmse_form,
    )


def _csv_and_svg(cfg: RunConfig, command: str, no_svg: bool):
    csv_path = cfg.output.csv_path or _DEFAULT_CSV[command]
    if no_svg:
        return csv_path, None
    if cfg.output.svg_path:
        return csv_path, cfg.output.svg_path
    stem = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return csv_path, stem + ".svg"


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        no_svg = getattr(args, "no_svg", False)
        if args.command == "pattern":
            csv_path, svg_path = _csv_and_svg(cfg, args.command, no_svg)
            run_pattern(cfg, csv_path, svg_path)
            print(f"wrote {csv_path}" + (f" and {svg_path}" if svg_path else ""))
        elif args.command == "field":
            csv_path, svg_path = _csv_and_svg(cfg, args.command, no_svg)
            run_field(cfg, csv_path, svg_path)
            print(f"wrote {csv_path}" + (f" and {svg_path}" if svg_path else ""))
        elif args.command == "sweep":
            csv_path, svg_path = _csv_and_svg(cfg, args.command, no_svg)
            records = run_sweep(cfg, csv_path, svg_path)
            flagged = sum(1 for r in records if r.error)
            print(
                f"wrote {csv_path}: {len(records)} points"
                + (f", {flagged} flagged" if flagged else "")
            )
        elif args.command == "avg-sweep":
            csv_path, svg_path = _csv_and_svg(cfg, args.command, no_svg)
            records = run_avg_sweep(cfg, csv_path, svg_path)
            flagged = sum(1 for r in records if r.error)
            print(
                f"wrote {csv_path}: {len(records)} points"
                + (f", {flagged} flagged" if flagged else "")
            )
        elif args.command == "dump-channel":
            out = cfg.output.csv_path or "channel.wdmch"
            run_channel_dump(cfg, out)
            print(f"wrote {out}")
        elif args.command == "selfcheck":
            if not run_selfcheck(cfg):
                return 2
        return 0
    # LinAlgError subclasses ValueError, so the numerical arm goes first
    except (np.linalg.LinAlgError, RuntimeError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
