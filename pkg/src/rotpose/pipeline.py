"""Frame-by-frame orchestration of the rotation-augmented estimator.

For every frame the pipeline evaluates the estimator over a set of rotation
angles (the full grid, or a window around the previous frame's angle), maps
each prediction back to original coordinates, selects the most temporally
consistent candidate, and blends it into the smoothed output trajectory.
Frames are processed strictly in order; the rotations within a frame may run
concurrently.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from tempfile import TemporaryDirectory
from typing import Optional, Sequence

import cv2
import numpy as np

from .errors import BackendError, ConfigError, FrameProcessingError, ProtocolError
from .estimator import EstimatorBackend, select_primary_person
from .frames import Frame
from .geometry import AngleGrid, RotationSpec, circular_distance, rotate_raster, unrotate_pose
from .reconstructor import DEFAULT_WEIGHT, ReconstructionState, reconstruct
from .selector import (
    CandidateDiagnostic,
    RotationCandidate,
    SelectionDiagnostics,
    SelectorConfig,
    select_first_frame,
    select_frame,
)
from .skeleton import Pose, mean_confidence

log = logging.getLogger(__name__)

POSES_FILENAME = "poses.jsonl"
CONFIDENCE_FILENAME = "confidence.csv"
THETA_FILENAME = "theta.csv"
MANIFEST_FILENAME = "run_manifest.json"


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved settings for one run.

    ``angle_window`` is a half-width in degrees; None evaluates the full
    grid on every frame.  ``parallelism`` caps concurrent estimator calls
    within a frame; frames themselves always run sequentially.
    """

    step: float = 10.0
    w: float = DEFAULT_WEIGHT
    coasting: bool = True
    angle_window: Optional[float] = None
    selector: SelectorConfig = SelectorConfig()
    parallelism: int = 1
    keep_going: bool = False
    keep_intermediates: bool = False

    def __post_init__(self):
        AngleGrid(self.step)  # validates 360 % step == 0
        if not 0.0 < self.w <= 1.0:
            raise ConfigError(f"w must be in (0, 1], got {self.w}")
        if self.angle_window is not None:
            if not self.step <= self.angle_window <= 180.0:
                raise ConfigError(
                    f"angle_window must lie in [step, 180], got {self.angle_window}"
                )
        if self.parallelism < 1:
            raise ConfigError(f"parallelism must be >= 1, got {self.parallelism}")

    @property
    def grid(self) -> AngleGrid:
        return AngleGrid(self.step)

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "w": self.w,
            "coasting": self.coasting,
            "angle_window": self.angle_window,
            "selector": self.selector.to_dict(),
            "parallelism": self.parallelism,
            "keep_going": self.keep_going,
            "keep_intermediates": self.keep_intermediates,
        }


@dataclass
class FrameResult:
    frame_index: int
    selected_theta: float
    selected_pose: Pose
    reconstructed_pose: Pose
    mean_conf_selected: float
    mean_conf_theta0: Optional[float]
    fallback_fired: bool
    rule: str
    estimator_calls: int
    candidates: list[CandidateDiagnostic] = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {
            "frame": self.frame_index,
            "theta": float(self.selected_theta),
            "fallback": self.fallback_fired,
            "selected": {"pose_keypoints_2d": self.selected_pose.flat()},
            "reconstructed": {"pose_keypoints_2d": self.reconstructed_pose.flat()},
            "candidates": [c.to_dict() for c in self.candidates],
        }


@dataclass
class PipelineState:
    recon: ReconstructionState
    prev_theta: Optional[float] = None
    t: int = 0


def angle_set_for_frame(t: int, prev_theta: Optional[float],
                        cfg: PipelineConfig) -> list[float]:
    """Rotation angles to evaluate for frame ``t`` (0-based).

    Full grid unless windowing is on and a previous angle exists; then every
    grid angle within circular distance ``angle_window`` of that angle,
    enumerated in wrap order (lowest offset first).
    """
    grid = cfg.grid
    if cfg.angle_window is None or t == 0 or prev_theta is None:
        return list(grid.angles)
    steps = math.floor(cfg.angle_window / cfg.step + 1e-9)
    base = round(prev_theta / cfg.step) * cfg.step % 360.0
    out: dict[float, None] = {}
    for k in range(-steps, steps + 1):
        out.setdefault((base + k * cfg.step) % 360.0, None)
    return list(out)


def _evaluate_rotation(frame: Frame, theta: float, backend: EstimatorBackend,
                       cfg: PipelineConfig,
                       workdir: Optional[Path]) -> Optional[RotationCandidate]:
    spec = RotationSpec.for_rotation(theta, frame.size)
    raster_path = None
    if backend.needs_raster:
        if workdir is None:
            raise ConfigError("backend needs rasters but no working directory given")
        rotated = rotate_raster(frame.load_image(), spec)
        raster_path = workdir / f"frame{frame.index:06d}_theta{theta:07.2f}.png"
        if not cv2.imwrite(str(raster_path), rotated):
            raise FrameProcessingError(f"could not write {raster_path}")
    try:
        people = backend.estimate(frame, spec, rotated_image_path=raster_path)
    finally:
        if raster_path is not None and not cfg.keep_intermediates:
            raster_path.unlink(missing_ok=True)
    person = select_primary_person(
        people,
        floor=cfg.selector.confidence_floor,
        exclude_head=cfg.selector.exclude_head,
    )
    if person is None:
        return None
    pose = unrotate_pose(person, spec)
    conf = mean_confidence(
        pose, floor=cfg.selector.confidence_floor, exclude_head=cfg.selector.exclude_head
    )
    return RotationCandidate(theta=theta, pose=pose, mean_conf=conf)


def _carry_forward_result(frame: Frame, angles: list[float], schema,
                          state: PipelineState, rule: str) -> FrameResult:
    empty = Pose.undetected(schema)
    recon = state.recon.previous if state.recon.previous is not None else empty
    if state.prev_theta is not None and any(
        circular_distance(a, state.prev_theta) < 1e-9 for a in angles
    ):
        theta = state.prev_theta
    else:
        theta = angles[0]
    conf0 = 0.0 if any(a == 0.0 for a in angles) else None
    return FrameResult(
        frame_index=frame.index,
        selected_theta=theta,
        selected_pose=empty,
        reconstructed_pose=recon,
        mean_conf_selected=0.0,
        mean_conf_theta0=conf0,
        fallback_fired=False,
        rule=rule,
        estimator_calls=len(angles),
        candidates=[],
    )


def process_frame(frame: Frame, backend: EstimatorBackend, state: PipelineState,
                  cfg: PipelineConfig,
                  workdir: Optional[Path] = None) -> FrameResult:
    """Evaluate one frame over its angle set and advance the pipeline state."""
    angles = angle_set_for_frame(state.t, state.prev_theta, cfg)

    def run(theta: float):
        try:
            return _evaluate_rotation(frame, theta, backend, cfg, workdir)
        except (BackendError, ProtocolError) as exc:
            log.warning("frame %d theta %g: %s", frame.index, theta, exc)
            return exc

    if cfg.parallelism > 1 and len(angles) > 1:
        with ThreadPoolExecutor(max_workers=min(cfg.parallelism, len(angles))) as pool:
            outcomes = list(pool.map(run, angles))
    else:
        outcomes = [run(theta) for theta in angles]

    errors = [o for o in outcomes if isinstance(o, Exception)]
    if errors and len(errors) == len(angles):
        state.t += 1
        raise FrameProcessingError(
            f"estimator failed at every rotation of frame {frame.index}: {errors[0]}"
        )
    candidates = sorted(
        (o for o in outcomes if isinstance(o, RotationCandidate)),
        key=lambda c: c.theta,
    )

    if not candidates:
        result = _carry_forward_result(
            frame, angles, backend.schema, state, rule="no_person"
        )
        state.t += 1
        return result

    if state.recon.previous is None:
        winner = select_first_frame(candidates)
        diag = SelectionDiagnostics(
            rule="first_frame",
            candidates=[
                CandidateDiagnostic(c.theta, None, c.mean_conf) for c in candidates
            ],
        )
    else:
        winner, diag = select_frame(
            candidates, state.recon.previous, cfg.selector, backend.schema
        )

    recon_pose = reconstruct(winner.pose, state.recon)
    state.prev_theta = winner.theta
    state.t += 1

    conf0: Optional[float] = None
    if any(a == 0.0 for a in angles):
        at_zero = [c for c in candidates if c.theta == 0.0]
        conf0 = at_zero[0].mean_conf if at_zero else 0.0

    return FrameResult(
        frame_index=frame.index,
        selected_theta=winner.theta,
        selected_pose=winner.pose,
        reconstructed_pose=recon_pose,
        mean_conf_selected=winner.mean_conf,
        mean_conf_theta0=conf0,
        fallback_fired=diag.fallback,
        rule=diag.rule,
        estimator_calls=len(angles),
        candidates=diag.candidates,
    )


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------

def write_poses_jsonl(results: Sequence[FrameResult], path: Path):
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_json_obj(), separators=(",", ":")) + "\n")


def write_confidence_csv(results: Sequence[FrameResult], path: Path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("frame,mean_conf_augmented,mean_conf_raw\n")
        for r in results:
            raw = "" if r.mean_conf_theta0 is None else repr(float(r.mean_conf_theta0))
            fh.write(f"{r.frame_index},{float(r.mean_conf_selected)!r},{raw}\n")


def write_theta_csv(results: Sequence[FrameResult], path: Path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("frame,theta_deg\n")
        for r in results:
            fh.write(f"{r.frame_index},{float(r.selected_theta)!r}\n")


def _versions() -> dict:
    from . import __version__

    return {
        "rotpose": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "opencv": cv2.__version__,
    }


def write_manifest(path: Path, cfg: PipelineConfig, backend: EstimatorBackend,
                   results: Sequence[FrameResult], elapsed: float,
                   extra: Optional[dict] = None):
    doc = {
        "config": cfg.to_dict(),
        "backend": backend.describe(),
        "schema": backend.schema.to_dict(),
        "frames": len(results),
        "estimator_calls_total": sum(r.estimator_calls for r in results),
        "cache_hits": 0,
        "fallback_frames": sum(1 for r in results if r.fallback_fired),
        "elapsed_seconds": elapsed,
        "versions": _versions(),
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")


def write_artifacts(results: Sequence[FrameResult], output_dir: Path,
                    cfg: PipelineConfig, backend: EstimatorBackend,
                    elapsed: float, extra: Optional[dict] = None):
    output_dir = Path(output_dir)
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        write_poses_jsonl(results, output_dir / POSES_FILENAME)
        write_confidence_csv(results, output_dir / CONFIDENCE_FILENAME)
        write_theta_csv(results, output_dir / THETA_FILENAME)
        write_manifest(
            output_dir / MANIFEST_FILENAME, cfg, backend, results, elapsed, extra
        )
    except OSError as exc:
        raise FrameProcessingError(f"could not write artifacts under {output_dir}: {exc}")


def read_poses_jsonl(path: Path, schema) -> list[FrameResult]:
    """Rebuild per-frame results from a poses.jsonl artifact."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"poses file {path} does not exist")
    results: list[FrameResult] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            selected = Pose.original(
                schema,
                np.asarray(doc["selected"]["pose_keypoints_2d"],
                           dtype=float).reshape(-1, 3),
            )
            recon = Pose.original(
                schema,
                np.asarray(doc["reconstructed"]["pose_keypoints_2d"],
                           dtype=float).reshape(-1, 3),
            )
            cands = [
                CandidateDiagnostic(c["theta"], c["distance"], c["mean_conf"])
                for c in doc["candidates"]
            ]
            theta = float(doc["theta"])
            conf = next(
                (c.mean_conf for c in cands if c.theta == theta),
                mean_confidence(selected),
            )
            conf0 = next((c.mean_conf for c in cands if c.theta == 0.0), None)
            results.append(FrameResult(
                frame_index=int(doc["frame"]),
                selected_theta=theta,
                selected_pose=selected,
                reconstructed_pose=recon,
                mean_conf_selected=conf,
                mean_conf_theta0=conf0,
                fallback_fired=bool(doc["fallback"]),
                rule="loaded",
                estimator_calls=len(cands),
                candidates=cands,
            ))
    if not results:
        raise ConfigError(f"poses file {path} is empty")
    return results


def load_run(run_dir: Path, schema) -> tuple[list[FrameResult], Optional[dict]]:
    """Load a run directory's artifacts back into FrameResults.

    Confidence values are taken from confidence.csv when present (the poses
    artifact does not record the no-person-at-0 case); the manifest, if any,
    is returned verbatim.
    """
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise ConfigError(f"run directory {run_dir} does not exist")
    results = read_poses_jsonl(run_dir / POSES_FILENAME, schema)
    conf_path = run_dir / CONFIDENCE_FILENAME
    if conf_path.is_file():
        with open(conf_path, "r", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        if len(rows) == len(results):
            for r, row in zip(results, rows):
                r.mean_conf_selected = float(row["mean_conf_augmented"])
                raw = row["mean_conf_raw"]
                r.mean_conf_theta0 = float(raw) if raw else None
    manifest = None
    manifest_path = run_dir / MANIFEST_FILENAME
    if manifest_path.is_file():
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    return results, manifest


def run_sequence(frames: Sequence[Frame], backend: EstimatorBackend,
                 cfg: PipelineConfig,
                 output_dir: Optional[Path] = None) -> list[FrameResult]:
    """Process an ordered frame sequence; optionally write run artifacts."""
    frames = list(frames)
    if not frames:
        raise ConfigError("run_sequence needs at least one frame")
    state = PipelineState(recon=ReconstructionState(w=cfg.w, coasting=cfg.coasting))
    results: list[FrameResult] = []
    started = time.monotonic()

    tmp: Optional[TemporaryDirectory] = None
    workdir: Optional[Path] = None
    if backend.needs_raster:
        if cfg.keep_intermediates and output_dir is not None:
            workdir = Path(output_dir) / "intermediates"
            workdir.mkdir(parents=True, exist_ok=True)
        else:
            tmp = TemporaryDirectory(prefix="rotpose_")
            workdir = Path(tmp.name)
    try:
        for frame in frames:
            try:
                results.append(process_frame(frame, backend, state, cfg, workdir))
            except FrameProcessingError:
                if not cfg.keep_going:
                    raise
                log.warning("frame %d failed; carrying previous result forward",
                            frame.index)
                angles = angle_set_for_frame(
                    max(state.t - 1, 0), state.prev_theta, cfg
                )
                results.append(
                    _carry_forward_result(
                        frame, angles, backend.schema, state, rule="frame_error"
                    )
                )
    finally:
        if tmp is not None:
            tmp.cleanup()

    if output_dir is not None:
        write_artifacts(results, Path(output_dir), cfg, backend,
                        elapsed=time.monotonic() - started)
    return results
