"""Command-line interface.

Subcommands: run (adaptive scan), baseline (uniform-random anchors at a
readout budget), sweep (alpha or ell), raster (dense reference), metrics
(compare two images). Exit codes: 0 success, 1 I/O failure, 2 bad
configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import io, pipeline
from .errors import ConfigError, NumericalError
from .grid import ImageGrid
from .metrics import psnr, ssim

__all__ = ["main", "build_parser"]

# flat config keys settable from the command line, flag name -> config key
_FLAG_KEYS = {
    "seed": "seed",
    "n_anchors": "n_anchors",
    "iterations": "n_iterations",
    "initial_anchors": "n_initial_anchors",
    "budget_cap": "budget_cap",
    "alpha": "alpha",
    "ell": "ell",
    "sigma": "sigma",
    "neighbors": "m_neighbors",
    "beta": "beta",
    "steps": "s_steps",
    "speed": "speed",
    "exposure_time": "exposure_time",
    "dead_time": "dead_time",
    "beam_radius": "beam_radius",
    "k_idw": "k_idw",
}

_INT_KEYS = {
    "seed", "n_anchors", "n_iterations", "n_initial_anchors", "m_neighbors",
    "s_steps", "n_substeps", "n_footprint", "k_idw", "candidate_subset_size",
}


def _add_common_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("image", help="input image (.pgm or .csv)")
    p.add_argument("--out", required=True, help="output directory for run artifacts")
    p.add_argument("--config", help="JSON config file of flat keys")
    p.add_argument("--force", action="store_true",
                   help="allow overwriting an existing metrics.csv")
    p.add_argument("-v", "--verbose", action="store_true",
                   help="also write per-iteration optimizer traces")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-anchors", type=int, dest="n_anchors")
    p.add_argument("--iterations", type=int)
    p.add_argument("--initial-anchors", type=int, dest="initial_anchors")
    p.add_argument("--budget-cap", type=float, dest="budget_cap",
                   help="readout budget as a fraction of the raster scan; "
                        "0 or below disables the cap")
    p.add_argument("--alpha", type=float)
    p.add_argument("--ell", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--neighbors", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--speed", type=float)
    p.add_argument("--exposure-time", type=float, dest="exposure_time")
    p.add_argument("--dead-time", type=float, dest="dead_time")
    p.add_argument("--beam-radius", type=float, dest="beam_radius")
    p.add_argument("--k-idw", type=int, dest="k_idw")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flyscan",
        description="Adaptive continuous-scan simulation and image completion",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the adaptive scan pipeline")
    _add_common_run_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_base = sub.add_parser("baseline", help="uniform-random-anchor baseline")
    _add_common_run_flags(p_base)
    p_base.add_argument("--fraction", type=float, required=True,
                        help="target sampling fraction of the raster reference")
    p_base.set_defaults(func=cmd_baseline)

    p_sweep = sub.add_parser("sweep", help="sweep alpha or ell over a value list")
    _add_common_run_flags(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=("alpha", "ell"))
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values, e.g. 0.1,2,5,10")
    p_sweep.set_defaults(func=cmd_sweep)

    p_raster = sub.add_parser("raster", help="dense raster reference scan")
    _add_common_run_flags(p_raster)
    p_raster.set_defaults(func=cmd_raster)

    p_met = sub.add_parser("metrics", help="PSNR/SSIM between two images")
    p_met.add_argument("image_a")
    p_met.add_argument("image_b")
    p_met.set_defaults(func=cmd_metrics)

    return parser


def _load_config(args: argparse.Namespace) -> pipeline.RunConfig:
    """Resolve defaults, then config-file values, then command-line flags."""
    flat = pipeline.config_to_flat(pipeline.RunConfig())
    if getattr(args, "config", None):
        path = Path(args.config)
        text = path.read_text(encoding="utf-8")
        try:
            file_flat = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(file_flat, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        for key, value in file_flat.items():
            if key not in flat:
                raise ConfigError(f"unknown config key {key!r} in {path}")
            flat[key] = value
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            flat[key] = value
    for key in _INT_KEYS:
        value = flat.get(key)
        if value is not None and not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                flat[key] = int(value)
            else:
                raise ConfigError(f"config key {key!r} must be an integer, got {value!r}")
    cap = flat.get("budget_cap")
    if cap is not None and cap <= 0:  # 0 or negative disables the cap
        flat["budget_cap"] = None
    config = pipeline.config_from_flat(flat)
    if getattr(args, "verbose", False):
        config = replace(config, emit_traces=True)
    return config


def _load_truth(path_str: str) -> ImageGrid:
    path = Path(path_str)
    if not path.exists():
        raise FileNotFoundError(f"input image not found: {path}")
    return io.read_image(path)


def _prepare_out(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    guard = out / "metrics.csv"
    if guard.exists() and not args.force:
        raise FileExistsError(
            f"refusing to overwrite {guard}; pass --force to allow it"
        )
    return out


def _fmt_summary(row: pipeline.MetricRow) -> str:
    return (
        f"{100.0 * row.sampling_fraction:.2f}% "
        f"{row.psnr_db:.4f} {row.ssim:.4f}"
    )


def cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    truth = _load_truth(args.image)
    out = _prepare_out(args)
    state = pipeline.run_full(truth, config, out_dir=out)
    print(_fmt_summary(state.history[-1]))
    return 0


def cmd_baseline(args: argparse.Namespace) -> int:
    config = _load_config(args)
    truth = _load_truth(args.image)
    out = _prepare_out(args)
    if not 0 < args.fraction <= 1:
        raise ConfigError(f"--fraction must lie in (0, 1], got {args.fraction}")
    _, state = pipeline.run_random_baseline(truth, config, args.fraction)
    pipeline.write_run_artifacts(out, config, state)
    print(_fmt_summary(state.history[-1]))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _load_config(args)
    truth = _load_truth(args.image)
    out = _prepare_out(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--values must be comma-separated numbers: {exc}") from exc
    if not values:
        raise ConfigError("--values must name at least one value")
    rows = pipeline.sweep(truth, config, args.param, values)
    lines = ["param,value,sampling_frac,psnr_db,ssim"]
    for r in rows:
        lines.append(
            f"{r.param},{r.value:.9g},{r.sampling_fraction:.8f},"
            f"{r.psnr_db:.6f},{r.ssim:.6f}"
        )
    (out / "sweep.csv").write_text("\n".join(lines) + "\n", encoding="ascii")
    psnrs = [r.psnr_db for r in rows]
    print(
        f"{args.param} sweep over {len(rows)} values: "
        f"PSNR {min(psnrs):.2f}..{max(psnrs):.2f} dB "
        f"(spread {max(psnrs) - min(psnrs):.2f} dB)"
    )
    return 0


def cmd_raster(args: argparse.Namespace) -> int:
    config = _load_config(args)
    truth = _load_truth(args.image)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reference, count, log = pipeline.raster_reference(truth, config)
    io.write_pgm(out / "raster_reference.pgm", reference)
    io.write_readouts_csv(out / "raster_readouts.csv", log)
    print(f"raster readouts: {count}")
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    a = _load_truth(args.image_a)
    b = _load_truth(args.image_b)
    p = psnr(a, b)
    s = ssim(a, b)
    p_txt = "inf" if math.isinf(p) else f"{p:.4f}"
    print(f"{p_txt} {s:.4f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
