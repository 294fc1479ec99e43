"""Command-line interface.

Subcommands: restore, batch, simulate, analyze, metrics. Pipeline tunables
come from an optional ``key = value`` config file with CLI flags taking
precedence. Exit status: 0 on success, 1 when any sequence fails in batch
mode (or a restore fails), 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from turbrestore.deartifact import DeartifactConfig
from turbrestore.flow import FlowParams
from turbrestore.frames import Frame, _load_image, psnr, save_frame, ssim
from turbrestore.fusion import FusionConfig
from turbrestore.pipeline import (PipelineConfig, StageError, analyze,
                                  load_sequence_dir, restore, run_batch,
                                  write_reports_csv)
from turbrestore.simulate import TurbulenceParams, degrade, text_card, write_sequence_dir

_CONFIG_KEYS = {
    "select_fraction": float,
    "flow_alpha": float,
    "flow_iterations": int,
    "flow_pyramid_levels": int,
    "flow_scale": float,
    "flow_warps": int,
    "register_passes": int,
    "fusion_mode": str,
    "fusion_levels": int,
    "region_threshold_k": float,
    "deartifact_mode": str,
    "quality_factor": int,
    "deartifact_cmd": str,
}

_DEARTIFACT_ALIASES = {"builtin": "builtin_shrinkage", "builtin_shrinkage": "builtin_shrinkage",
                       "external": "external", "none": "none"}


class ConfigError(Exception):
    pass


def parse_config_file(path) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment."""
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        caster = _CONFIG_KEYS[key]
        try:
            values[key] = caster(value.strip().strip('"').strip("'")) if caster is not str \
                else value.strip().strip('"').strip("'")
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}")
    return values


def build_pipeline_config(values: dict) -> PipelineConfig:
    mode = values.get("deartifact_mode", "builtin_shrinkage")
    if mode not in _DEARTIFACT_ALIASES:
        raise ConfigError(f"unknown deartifact mode {mode!r}")
    try:
        return PipelineConfig(
            select_fraction=values.get("select_fraction", 0.5),
            flow=FlowParams(
                alpha=values.get("flow_alpha", 0.1),
                iterations=values.get("flow_iterations", 150),
                pyramid_levels=values.get("flow_pyramid_levels"),
                scale=values.get("flow_scale", 0.5),
                warps_per_level=values.get("flow_warps", 2),
            ),
            register_passes=values.get("register_passes", 1),
            fusion=FusionConfig(
                mode=values.get("fusion_mode", "region"),
                levels=values.get("fusion_levels", 4),
                activity_threshold_k=values.get("region_threshold_k", 1.0),
            ),
            deartifact=DeartifactConfig(
                quality_factor=values.get("quality_factor", 20),
                mode=_DEARTIFACT_ALIASES[mode],
                external_cmd=values.get("deartifact_cmd", ""),
            ),
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--select-fraction", type=float, dest="select_fraction")
    p.add_argument("--flow-alpha", type=float, dest="flow_alpha")
    p.add_argument("--flow-iters", type=int, dest="flow_iterations")
    p.add_argument("--register-passes", type=int, dest="register_passes")
    p.add_argument("--fusion-mode", choices=["pixel_max", "region"], dest="fusion_mode")
    p.add_argument("--fusion-levels", type=int, dest="fusion_levels")
    p.add_argument("--region-threshold-k", type=float, dest="region_threshold_k")
    p.add_argument("--deartifact", choices=["builtin", "external", "none"], dest="deartifact_mode")
    p.add_argument("--qf", type=int, dest="quality_factor")
    p.add_argument("--deartifact-cmd", dest="deartifact_cmd")


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    values: dict = {}
    if args.config:
        values.update(parse_config_file(args.config))
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return build_pipeline_config(values)


def _cmd_restore(args) -> int:
    config = _config_from_args(args)
    seq, clean = load_sequence_dir(args.seq_dir, args.pattern)
    try:
        result, report = restore(seq, config, clean=clean,
                                 debug_dir=args.debug_dir)
    except StageError as exc:
        print(f"restore failed: {exc}", file=sys.stderr)
        return 1
    out = Path(args.output) if args.output else Path(f"{Path(args.seq_dir).name}.png")
    save_frame(result, out)
    report.sequence = Path(args.seq_dir).name
    times = ", ".join(f"{k} {v:.2f}s" for k, v in report.stage_seconds.items())
    print(f"{report.sequence}: {report.frames_in} frames in, "
          f"{report.frames_selected} selected ({times}) -> {out}")
    if report.psnr is not None:
        print(f"  vs ground truth: PSNR {report.psnr:.2f} dB, SSIM {report.ssim:.4f}")
    if args.report_csv:
        write_reports_csv([report], args.report_csv)
    return 0


def _cmd_batch(args) -> int:
    config = _config_from_args(args)
    reports = run_batch(args.root, config, args.output, pattern=args.pattern)
    failed = [r for r in reports if r.status != "ok"]
    for r in reports:
        mark = "ok" if r.status == "ok" else f"FAILED at {r.stage_failed}: {r.error}"
        print(f"{r.sequence}: {mark}")
    print(f"{len(reports) - len(failed)}/{len(reports)} sequences restored; "
          f"reports in {Path(args.output) / 'reports.csv'}")
    return 1 if failed else 0


def _cmd_simulate(args) -> int:
    params = TurbulenceParams(
        warp_amplitude=args.warp_amplitude,
        warp_smoothness=args.warp_smoothness,
        blur_sigma_range=(args.blur_min, args.blur_max),
        noise_sigma=args.noise_sigma,
        frames=args.frames,
        seed=args.seed,
    )
    clean = text_card(args.width, args.height, args.text)
    seq, flows = degrade(clean, params)
    write_sequence_dir(args.output, clean, seq, flows, params, dump_flows=args.dump_flows)
    print(f"wrote {len(seq)} frames to {Path(args.output) / 'frames'}")
    return 0


def _cmd_analyze(args) -> int:
    analyze(args.seq_dir, args.out_csv, pattern=args.pattern)
    print(f"wrote {args.out_csv}")
    return 0


def _cmd_metrics(args) -> int:
    a = Frame(_load_image(Path(args.image_a)))
    b = Frame(_load_image(Path(args.image_b)))
    print(f"psnr {psnr(a, b)!r}")
    print(f"ssim {ssim(a, b)!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="turbrestore",
        description="Restore a single sharp image from a turbulence-distorted frame sequence.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("restore", help="restore one sequence directory")
    p.add_argument("seq_dir")
    p.add_argument("-o", "--output", help="output PNG path")
    p.add_argument("--pattern", default="*.png")
    p.add_argument("--report-csv")
    p.add_argument("--debug-dir", help="dump per-frame flow fields here")
    _add_pipeline_flags(p)
    p.set_defaults(fn=_cmd_restore)

    p = sub.add_parser("batch", help="restore every sequence under a root directory")
    p.add_argument("root")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--pattern", default="*.png")
    _add_pipeline_flags(p)
    p.set_defaults(fn=_cmd_batch)

    p = sub.add_parser("simulate", help="generate a synthetic turbulence sequence")
    p.add_argument("-o", "--output", required=True, help="output sequence directory")
    p.add_argument("--text", default="LUCKY IMAGING 123")
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--warp-amplitude", type=float, default=2.0)
    p.add_argument("--warp-smoothness", type=float, default=8.0)
    p.add_argument("--blur-min", type=float, default=0.5)
    p.add_argument("--blur-max", type=float, default=2.5)
    p.add_argument("--noise-sigma", type=float, default=0.01)
    p.add_argument("--dump-flows", action="store_true")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("analyze", help="per-frame sharpness series to CSV")
    p.add_argument("seq_dir")
    p.add_argument("out_csv")
    p.add_argument("--pattern", default="*.png")
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("metrics", help="PSNR/SSIM between two images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.set_defaults(fn=_cmd_metrics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
