"""Command-line interface.

Subcommands: run (process frames through the pipeline), simulate (write a
synthetic sequence and its ground truth), evaluate (score a run against
ground truth and a baseline run), report (extract plot-ready CSVs).  Exit
codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
import time
from pathlib import Path
from typing import Optional

from .benchmark import (
    CARTWHEEL,
    GROUND_TRUTH_FILENAME,
    HANDSTAND_HOLD,
    UPRIGHT_WALK,
    cartwheel,
    evaluate,
    generate_sequence,
    handstand_hold,
    read_ground_truth,
    upright_walk,
    write_ground_truth,
    write_report,
)
from .errors import ConfigError, RotposeError
from .estimator import (
    DEFAULT_ADAPTER_TIMEOUT,
    ExternalBackend,
    SyntheticBackend,
    SyntheticEstimatorModel,
)
from .frames import frames_from_dir
from .pipeline import (
    CONFIDENCE_FILENAME,
    PipelineConfig,
    THETA_FILENAME,
    load_run,
    run_sequence,
    write_artifacts,
)
from .selector import SelectorConfig
from .skeleton import BODY_25, SkeletonSchema
from .validation import (
    check_floor,
    check_parallelism,
    check_step,
    check_threshold,
    check_top_k,
    check_weight,
    check_window,
)

log = logging.getLogger(__name__)

SCRIPT_FACTORIES = {
    CARTWHEEL: cartwheel,
    HANDSTAND_HOLD: handstand_hold,
    UPRIGHT_WALK: upright_walk,
}

RUN_DEFAULTS = {
    "backend": None,
    "frames": None,
    "adapter_cmd": None,
    "adapter_timeout": DEFAULT_ADAPTER_TIMEOUT,
    "schema": None,
    "script": None,
    "frames_count": 90,
    "canvas": "640x480",
    "seed": 0,
    "step": 10.0,
    "window": None,
    "weight": 0.8,
    "threshold": 500.0,
    "top_k": 5,
    "floor": 0.05,
    "include_head": False,
    "no_coasting": False,
    "parallelism": 1,
    "keep_going": False,
    "keep_intermediates": False,
    "c_max": 0.9,
    "c_min": 0.2,
    "sigma0": 2.0,
    "sigma1": 12.0,
    "dropout_slope": 0.5,
    "confidence_noise": 0.02,
}


class UsageError(Exception):
    """Bad flags or flag combinations; maps to exit code 2."""


def _parse_canvas(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return (int(w), int(h))
    except ValueError:
        raise ConfigError(f"canvas must look like 640x480, got {text!r}")


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge precedence: flags > config file > defaults."""
    resolved = dict(defaults)
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}")
        if not isinstance(doc, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        unknown = set(doc) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        resolved.update(doc)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            resolved[key] = value
    return resolved


def _build_pipeline_config(opts: dict) -> PipelineConfig:
    step = check_step(opts["step"])
    selector = SelectorConfig(
        top_k=check_top_k(opts["top_k"]),
        distance_threshold=check_threshold(opts["threshold"]),
        exclude_head=not opts["include_head"],
        confidence_floor=check_floor(opts["floor"]),
    )
    return PipelineConfig(
        step=step,
        w=check_weight(opts["weight"]),
        coasting=not opts["no_coasting"],
        angle_window=check_window(opts["window"], step),
        selector=selector,
        parallelism=check_parallelism(opts["parallelism"]),
        keep_going=bool(opts["keep_going"]),
        keep_intermediates=bool(opts["keep_intermediates"]),
    )


def _synthetic_model(opts: dict) -> SyntheticEstimatorModel:
    return SyntheticEstimatorModel(
        c_max=float(opts["c_max"]),
        c_min=float(opts["c_min"]),
        sigma0=float(opts["sigma0"]),
        sigma1=float(opts["sigma1"]),
        dropout_slope=float(opts["dropout_slope"]),
        confidence_noise=float(opts["confidence_noise"]),
        rng_seed=int(opts["seed"]),
    )


def _load_schema(opts: dict) -> SkeletonSchema:
    if opts.get("schema"):
        path = Path(opts["schema"])
        if not path.is_file():
            raise ConfigError(f"schema file {path} does not exist")
        return SkeletonSchema.from_json(path)
    return BODY_25


def cmd_run(args: argparse.Namespace) -> int:
    try:
        opts = _resolve(args, RUN_DEFAULTS)
        cfg = _build_pipeline_config(opts)
        schema = _load_schema(opts)
        backend_kind = opts["backend"]
        if backend_kind is None:
            if opts["script"]:
                backend_kind = "synthetic"
            elif opts["frames"]:
                backend_kind = "external"
            else:
                raise ConfigError("give --frames DIR or --script NAME")
        if backend_kind not in ("external", "synthetic"):
            raise ConfigError(f"unknown backend {backend_kind!r}")

        if backend_kind == "synthetic":
            if not opts["script"]:
                raise ConfigError("synthetic backend needs --script")
            if opts["script"] not in SCRIPT_FACTORIES:
                raise ConfigError(
                    f"unknown script {opts['script']!r}; "
                    f"choose from {sorted(SCRIPT_FACTORIES)}"
                )
            canvas = _parse_canvas(opts["canvas"])
            script = SCRIPT_FACTORIES[opts["script"]](
                frames=int(opts["frames_count"]), canvas=canvas
            )
            frames = generate_sequence(
                script, canvas=canvas, seed=int(opts["seed"]), schema=schema
            )
            backend = SyntheticBackend(_synthetic_model(opts), schema)
        else:
            if not opts["frames"]:
                raise ConfigError("external backend needs --frames DIR")
            if not opts["adapter_cmd"]:
                raise ConfigError("external backend needs --adapter-cmd TEMPLATE")
            frames = frames_from_dir(opts["frames"])
            backend = ExternalBackend(
                opts["adapter_cmd"], schema,
                timeout=float(opts["adapter_timeout"]),
                max_processes=cfg.parallelism,
            )
    except ConfigError as exc:
        raise UsageError(str(exc))

    out_dir = Path(args.out)
    started = time.monotonic()
    results = run_sequence(frames, backend, cfg)
    write_artifacts(
        results, out_dir, cfg, backend,
        elapsed=time.monotonic() - started,
        extra={"cli": {k: opts[k] for k in sorted(opts)}, "frames_source":
               opts["frames"] or f"synthetic:{opts['script']}"},
    )
    if backend_kind == "synthetic":
        write_ground_truth(frames, out_dir / GROUND_TRUTH_FILENAME)
    print(f"processed {len(results)} frames -> {out_dir}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        canvas = _parse_canvas(args.canvas)
        if args.frames_count < 1:
            raise ConfigError("--frames-count must be >= 1")
        script = SCRIPT_FACTORIES[args.script](frames=args.frames_count, canvas=canvas)
    except ConfigError as exc:
        raise UsageError(str(exc))
    frames = generate_sequence(script, canvas=canvas, seed=args.seed,
                               rasterize=args.rasterize)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.rasterize:
        import cv2

        for f in frames:
            path = out_dir / f"frame_{f.index:06d}.png"
            if not cv2.imwrite(str(path), f.image):
                raise RotposeError(f"could not write {path}")
    write_ground_truth(frames, out_dir / GROUND_TRUTH_FILENAME)
    print(f"wrote {len(frames)} frames of {args.script} -> {out_dir}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        run_results, run_manifest = load_run(Path(args.run), BODY_25)
        base_results, base_manifest = load_run(Path(args.baseline), BODY_25)
        ground_truth, _ = read_ground_truth(args.ground_truth)
        report = evaluate(
            run_results, ground_truth, base_results,
            calls_augmented=(run_manifest or {}).get("estimator_calls_total"),
            calls_raw=(base_manifest or {}).get("estimator_calls_total"),
        )
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_report(report, Path(args.out))
    print(
        f"mpjpe augmented {report.mpjpe_augmented:.3f} px vs raw "
        f"{report.mpjpe_raw:.3f} px -> {args.out}"
    )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    run_dir = Path(args.run)
    source = {
        "confidence": run_dir / CONFIDENCE_FILENAME,
        "theta": run_dir / THETA_FILENAME,
    }[args.kind]
    if not source.is_file():
        print(f"error: {source} does not exist", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(source, out)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotpose",
        description="Rotation test-time augmentation for 2D pose estimation.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="process a frame sequence")
    run.add_argument("--config", help="JSON config file; flags override it")
    run.add_argument("--frames", help="directory of ordered frame images")
    run.add_argument("--backend", choices=["external", "synthetic"])
    run.add_argument("--adapter-cmd",
                     help="command template with {input} and {output}")
    run.add_argument("--adapter-timeout", type=float,
                     help=f"seconds per adapter call (default {DEFAULT_ADAPTER_TIMEOUT:g})")
    run.add_argument("--schema", help="skeleton schema JSON file (default body-25)")
    run.add_argument("--script", help="synthetic motion script name")
    run.add_argument("--frames-count", type=int,
                     help="synthetic sequence length (default 90)")
    run.add_argument("--canvas", help="synthetic canvas WxH (default 640x480)")
    run.add_argument("--seed", type=int, help="synthetic RNG seed (default 0)")
    run.add_argument("--step", type=float, help="rotation grid step, degrees (default 10)")
    run.add_argument("--window", type=float,
                     help="angle window half-width, degrees (default off)")
    run.add_argument("--weight", type=float, help="current-frame blend weight (default 0.8)")
    run.add_argument("--threshold", type=float,
                     help="consistency distance threshold, px (default 500)")
    run.add_argument("--top-k", type=int, help="consistency shortlist size (default 5)")
    run.add_argument("--floor", type=float,
                     help="confidence floor for considered joints (default 0.05)")
    run.add_argument("--include-head", action="store_true",
                     help="include head joints in the objectives")
    run.add_argument("--no-coasting", action="store_true",
                     help="strict blend: joints absent now go undetected")
    run.add_argument("--parallelism", type=int,
                     help="max concurrent estimator calls (default 1)")
    run.add_argument("--keep-going", action="store_true",
                     help="carry on after frames whose every rotation failed")
    run.add_argument("--keep-intermediates", action="store_true",
                     help="keep rotated rasters under OUT/intermediates")
    for flag in ("--c-max", "--c-min", "--sigma0", "--sigma1",
                 "--dropout-slope", "--confidence-noise"):
        run.add_argument(flag, type=float, help="synthetic model coefficient")
    run.add_argument("--out", required=True, help="artifact output directory")
    run.set_defaults(func=cmd_run)

    sim = sub.add_parser("simulate", help="write a synthetic sequence + ground truth")
    sim.add_argument("--script", required=True, choices=sorted(SCRIPT_FACTORIES))
    sim.add_argument("--frames-count", type=int, default=90)
    sim.add_argument("--canvas", default="640x480")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--rasterize", action="store_true",
                     help="also write rendered frame PNGs")
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    ev = sub.add_parser("evaluate", help="score a run against ground truth")
    ev.add_argument("--run", required=True, help="augmented run directory")
    ev.add_argument("--baseline", required=True, help="raw (single-angle) run directory")
    ev.add_argument("--ground-truth", required=True, help="ground_truth.jsonl path")
    ev.add_argument("--out", required=True, help="report output directory")
    ev.set_defaults(func=cmd_evaluate)

    rep = sub.add_parser("report", help="extract plot-ready CSVs from a run")
    rep.add_argument("--run", required=True)
    rep.add_argument("--kind", required=True, choices=["confidence", "theta"])
    rep.add_argument("--out", required=True, help="destination CSV file")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except RotposeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
