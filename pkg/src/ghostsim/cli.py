"""Command-line entry points: run, sweep, mask, stats."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import figures
from .config import ExperimentConfig, load_config, with_overrides
from .errors import GhostsimError, StageError
from .fileio import write_csv
from .runner import make_three_hole_mask, run_experiment, sweep
from .source import field_value_series, fix_component_directions, thermal_statistics_report
from .source import draw_shot_amplitudes, seed_field_on_grid


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="key=value config file")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--seed", metavar="U64", type=int, help="source RNG seed")
    parser.add_argument("--shots", metavar="M", type=int, help="number of shots")
    parser.add_argument("--mode", choices=("coherent", "incoherent"), help="image-plane summation mode")
    parser.add_argument(
        "--plane-wave-reference",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="emit the deterministic single-wave reference image",
    )


def _build_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return with_overrides(
        cfg,
        rng_seed=getattr(args, "seed", None),
        shots=getattr(args, "shots", None),
        mode=getattr(args, "mode", None),
        plane_wave_reference=getattr(args, "plane_wave_reference", None),
        out_dir=getattr(args, "out", None),
    )


def _parse_centers(text: str):
    points = []
    for part in text.split(";"):
        if not part.strip():
            continue
        x, y = part.split(",")
        points.append((float(x), float(y)))
    return tuple(points)


def _cmd_run(args) -> int:
    cfg = _build_config(args)
    manifest = run_experiment(cfg)
    print(f"wrote {Path(manifest.out_dir) / 'manifest.txt'}")
    for art in manifest.artifacts:
        if art.name == "metrics":
            for line in (Path(manifest.out_dir) / art.path).read_text().splitlines()[1:]:
                print(f"  {line.replace(',', '=', 1)}")
    for stage_name, reason in manifest.skipped.items():
        print(f"  skipped {stage_name}: {reason}")
    print(f"  {manifest.shots_per_second:.0f} shots/s, {manifest.wall_seconds:.2f} s total")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _build_config(args)
    out = Path(args.out) if args.out else Path(cfg.out_dir)
    values = [v for v in args.values.split(",") if v.strip()] if args.values else []
    rows = sweep(cfg, args.parameter, values, out_dir=out)
    print(f"wrote {out / f'sweep_{args.parameter}.csv'} ({len(rows)} rows)")
    for row in rows:
        print(f"  {args.parameter}={row[1]}: ncc={row[3]:.3f} contrast={row[4]:.3f}")
    return 0


def _cmd_mask(args) -> int:
    cfg = _build_config(args)
    if args.hole_diameter is not None:
        cfg = with_overrides(cfg, hole_diameter=args.hole_diameter)
    if args.centers is not None:
        cfg = with_overrides(cfg, hole_centers=_parse_centers(args.centers))
    out = Path(args.out) if args.out else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "object_mask.pgm"
    mask = make_three_hole_mask(cfg.grid(), cfg.hole_diameter, cfg.hole_centers, path=path)
    print(f"wrote {path} ({int(mask.sum())} open pixels)")
    return 0


def _cmd_stats(args) -> int:
    cfg = _build_config(args)
    out = Path(args.out) if args.out else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    src = cfg.source()
    grid = cfg.grid()
    directions = fix_component_directions(src)

    series = field_value_series(directions, src, cfg.shots, (0.0, 0.0), cfg.wavelength_seed)
    temporal = thermal_statistics_report(np.abs(series) ** 2)
    seed0 = draw_shot_amplitudes(directions, src, 0, cfg.wavelength_seed)
    fld = seed_field_on_grid(seed0, grid)
    spatial = thermal_statistics_report(np.abs(fld.amplitudes.ravel()) ** 2)

    for tag, report in (("temporal", temporal), ("spatial", spatial)):
        (out / f"thermal_{tag}.txt").write_text(report.to_key_value(), encoding="ascii")
        write_csv(
            out / f"thermal_{tag}_hist.csv",
            ["bin_center", "count", "expected_count"],
            report.hist_rows(),
        )
        figures.render_thermal(out / f"thermal_{tag}.png", report, f"{tag} intensity statistics")
        print(f"{tag}: n={report.n_samples} ks={report.ks_distance:.4f} "
              f"variance/mean^2={report.variance / report.mean**2:.4f}")
    print(f"wrote reports to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghostsim",
        description="Seeded frequency-conversion imaging simulator: chaotic plane-wave "
        "seed, pump-carried object, intensity-correlation image recovery.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="full experiment with artifacts and manifest")
    _add_common(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="metrics across one parameter")
    _add_common(p_sweep)
    p_sweep.add_argument("--parameter", required=True, help="one of: shots, N, g_eff_L, max_angle")
    p_sweep.add_argument("--values", required=True, help="comma-separated values (may be empty)")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_mask = sub.add_parser("mask", help="write the multi-hole object mask PGM")
    _add_common(p_mask)
    p_mask.add_argument("--hole-diameter", type=float, help="hole diameter in meters")
    p_mask.add_argument("--centers", help="hole centers, e.g. '-152e-6,-120e-6;152e-6,-120e-6'")
    p_mask.set_defaults(fn=_cmd_mask)

    p_stats = sub.add_parser("stats", help="seed thermal-statistics reports only")
    _add_common(p_stats)
    p_stats.set_defaults(fn=_cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except GhostsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
