"""Pose estimator backends and the keypoint wire format.

Backends return zero or more people for a frame presented at some rotation.
Two implementations ship: an external-command adapter speaking the file-based
wire protocol (real estimators), and a synthetic orientation-sensitive oracle
used by tests and benchmarks.
"""

from __future__ import annotations

import json
import os
import subprocess
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from numbers import Number
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    BackendError,
    BackendTimeoutError,
    ConfigError,
    ProtocolError,
    SchemaError,
    WireFormatError,
)
from .frames import Frame
from .geometry import RotationSpec, rotate_pose, wrap_degrees
from .skeleton import (
    DEFAULT_CONFIDENCE_FLOOR,
    FRAME_ORIGINAL,
    Pose,
    SkeletonSchema,
    mean_confidence,
)

DEFAULT_ADAPTER_TIMEOUT = 120.0


# ---------------------------------------------------------------------------
# Wire format: {"people": [{"pose_keypoints_2d": [x0, y0, c0, x1, ...]}]}
# ---------------------------------------------------------------------------

def parse_wire_poses(document: Union[bytes, str], schema: SkeletonSchema,
                     frame: str = FRAME_ORIGINAL,
                     theta: Optional[float] = None) -> list[Pose]:
    """Parse a wire document into poses tagged with the given frame."""
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        doc = json.loads(document)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise WireFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("people"), list):
        raise WireFormatError('document must be an object with a "people" array')
    expected = 3 * schema.joint_count
    poses = []
    for i, person in enumerate(doc["people"]):
        if not isinstance(person, dict) or "pose_keypoints_2d" not in person:
            raise WireFormatError(f'person {i} has no "pose_keypoints_2d"')
        flat = person["pose_keypoints_2d"]
        if not isinstance(flat, list) or not all(isinstance(v, Number) for v in flat):
            raise WireFormatError(f"person {i}: keypoints must be a number array")
        if len(flat) != expected:
            raise WireFormatError(
                f"person {i}: expected {expected} values "
                f"({schema.joint_count} joints), got {len(flat)}"
            )
        arr = np.asarray(flat, dtype=np.float64).reshape(-1, 3)
        poses.append(Pose(schema=schema, keypoints=arr, frame=frame, theta=theta))
    return poses


def serialize_wire_poses(poses: Sequence[Pose]) -> str:
    """Serialize poses to the wire layout (inverse of :func:`parse_wire_poses`)."""
    return json.dumps(
        {"people": [{"pose_keypoints_2d": p.flat()} for p in poses]},
        separators=(",", ":"),
    )


def select_primary_person(poses: Sequence[Pose],
                          floor: float = DEFAULT_CONFIDENCE_FLOOR,
                          exclude_head: bool = True) -> Optional[Pose]:
    """Reduce a multi-person result to the highest-mean-confidence person."""
    if not poses:
        return None
    best, best_conf = None, -1.0
    for pose in poses:
        conf = mean_confidence(pose, floor=floor, exclude_head=exclude_head)
        if conf > best_conf:
            best, best_conf = pose, conf
    return best


# ---------------------------------------------------------------------------
# Backend interface
# ---------------------------------------------------------------------------

class EstimatorBackend(ABC):
    """A pose estimator invoked once per (frame, rotation)."""

    schema: SkeletonSchema
    #: whether the pipeline must materialize a rotated raster for each call
    needs_raster: bool = False

    @abstractmethod
    def estimate(self, frame: Frame, spec: RotationSpec,
                 rotated_image_path: Optional[Path] = None) -> list[Pose]:
        """Return people detected in the rotated canvas, in its coordinates."""

    def describe(self) -> dict:
        return {"kind": type(self).__name__}


# ---------------------------------------------------------------------------
# External command adapter
# ---------------------------------------------------------------------------

def _render_command(template: str, input_path: Path, output_path: Path) -> list[str]:
    import shlex

    if "{input}" not in template or "{output}" not in template:
        raise ConfigError(
            "adapter command must contain the {input} and {output} placeholders"
        )
    return [
        tok.replace("{input}", str(input_path)).replace("{output}", str(output_path))
        for tok in shlex.split(template)
    ]


def external_estimate(frame_image_path: Union[str, Path], adapter_cmd: str,
                      schema: SkeletonSchema,
                      output_path: Optional[Path] = None,
                      timeout: float = DEFAULT_ADAPTER_TIMEOUT,
                      theta: Optional[float] = None) -> list[Pose]:
    """Run an external estimator on one image and parse its wire output."""
    frame_image_path = Path(frame_image_path)
    own_output = output_path is None
    if own_output:
        output_path = frame_image_path.with_suffix(".keypoints.json")
    argv = _render_command(adapter_cmd, frame_image_path, output_path)
    try:
        proc = subprocess.run(argv, capture_output=True, timeout=timeout)
    except subprocess.TimeoutExpired as exc:
        raise BackendTimeoutError(
            f"adapter exceeded {timeout}s on {frame_image_path.name}"
        ) from exc
    except OSError as exc:
        raise BackendError(f"could not launch adapter {argv[0]!r}: {exc}") from exc
    if proc.returncode != 0:
        stderr = proc.stderr.decode("utf-8", errors="replace").strip()
        raise BackendError(
            f"adapter exited {proc.returncode} on {frame_image_path.name}: {stderr}"
        )
    try:
        document = output_path.read_bytes()
    except OSError as exc:
        raise ProtocolError(f"adapter wrote no output file {output_path}") from exc
    finally:
        if own_output and output_path.exists():
            output_path.unlink()
    try:
        return parse_wire_poses(document, schema, frame="rotated", theta=theta)
    except WireFormatError as exc:
        raise ProtocolError(f"adapter output {output_path.name} is invalid: {exc}") from exc


class ExternalBackend(EstimatorBackend):
    """File-protocol adapter around a real estimator command.

    The command template is rendered per call with {input} (rotated frame
    image) and {output} (where the wire JSON must be written).  Concurrent
    subprocess count is capped by ``max_processes``.
    """

    needs_raster = True

    def __init__(self, adapter_cmd: str, schema: SkeletonSchema,
                 timeout: float = DEFAULT_ADAPTER_TIMEOUT,
                 max_processes: Optional[int] = None):
        _render_command(adapter_cmd, Path("probe"), Path("probe"))  # validate early
        self.adapter_cmd = adapter_cmd
        self.schema = schema
        self.timeout = timeout
        self.max_processes = max_processes or os.cpu_count() or 1
        self._gate = threading.Semaphore(self.max_processes)

    def estimate(self, frame: Frame, spec: RotationSpec,
                 rotated_image_path: Optional[Path] = None) -> list[Pose]:
        if rotated_image_path is None:
            raise ConfigError("external backend needs a rotated raster path")
        with self._gate:
            return external_estimate(
                rotated_image_path,
                self.adapter_cmd,
                self.schema,
                timeout=self.timeout,
                theta=spec.theta,
            )

    def describe(self) -> dict:
        return {
            "kind": "external",
            "adapter_cmd": self.adapter_cmd,
            "timeout": self.timeout,
            "max_processes": self.max_processes,
        }


# ---------------------------------------------------------------------------
# Synthetic orientation-sensitive oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticEstimatorModel:
    """Noise model for the synthetic backend.

    Accuracy degrades linearly with the body's apparent tilt away from
    image-up: keypoint noise grows from ``sigma0`` to ``sigma0 + sigma1``,
    confidence falls from ``c_max`` to ``c_min``, and each joint drops out
    with probability ``dropout_slope`` at full inversion.
    """

    c_max: float = 0.9
    c_min: float = 0.2
    sigma0: float = 2.0
    sigma1: float = 12.0
    dropout_slope: float = 0.5
    confidence_noise: float = 0.02
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.c_min <= self.c_max <= 1.0:
            raise ConfigError(
                f"need 0 <= c_min <= c_max <= 1, got {self.c_min}, {self.c_max}"
            )
        if self.sigma0 < 0 or self.sigma1 < 0 or self.confidence_noise < 0:
            raise ConfigError("noise coefficients must be non-negative")
        if not 0.0 <= self.dropout_slope <= 1.0:
            raise ConfigError(f"dropout_slope must be in [0, 1], got {self.dropout_slope}")


def _rng_for_call(model: SyntheticEstimatorModel, frame_index: int, theta: float):
    # keyed by (seed, frame, theta) so results are independent of call order
    key = (int(model.rng_seed), int(frame_index), int(round(theta * 1000.0)))
    return np.random.default_rng(np.random.SeedSequence(key))


def synthetic_estimate(gt_pose: Pose, body_deviation: float,
                       model: SyntheticEstimatorModel,
                       frame_index: int = 0,
                       theta: Optional[float] = None) -> list[Pose]:
    """Simulate one estimator call on a frame whose body is tilted by
    ``body_deviation`` degrees from image-up.

    Deterministic given (model.rng_seed, frame_index, theta).
    """
    if theta is None:
        theta = gt_pose.theta if gt_pose.theta is not None else 0.0
    severity = abs(wrap_degrees(body_deviation)) / 180.0
    rng = _rng_for_call(model, frame_index, theta)
    k = gt_pose.schema.joint_count

    # fixed draw order keeps outputs reproducible
    drop = rng.random(k) < model.dropout_slope * severity
    noise = rng.normal(0.0, 1.0, size=(k, 2)) * (model.sigma0 + model.sigma1 * severity)
    conf_jitter = rng.normal(0.0, 1.0, size=k) * model.confidence_noise

    out = np.zeros((k, 3))
    conf = np.clip(
        model.c_max - (model.c_max - model.c_min) * severity + conf_jitter, 0.0, 1.0
    )
    keep = gt_pose.detected_mask & ~drop
    out[keep, :2] = gt_pose.xy[keep] + noise[keep]
    out[keep, 2] = conf[keep]
    return [Pose(schema=gt_pose.schema, keypoints=out,
                 frame=gt_pose.frame, theta=gt_pose.theta)]


class SyntheticBackend(EstimatorBackend):
    """Backend that fabricates predictions from ground-truth frame metadata."""

    needs_raster = False

    def __init__(self, model: SyntheticEstimatorModel, schema: SkeletonSchema):
        self.model = model
        self.schema = schema

    def estimate(self, frame: Frame, spec: RotationSpec,
                 rotated_image_path: Optional[Path] = None) -> list[Pose]:
        if frame.truth is None or frame.body_angle is None:
            raise ConfigError(
                f"frame {frame.index} lacks ground truth; the synthetic backend "
                "only works on simulated sequences"
            )
        if frame.truth.schema.joint_names != self.schema.joint_names:
            raise SchemaError("frame ground truth does not match the backend schema")
        gt_rotated = rotate_pose(frame.truth, spec)
        deviation = wrap_degrees(frame.body_angle + spec.theta)
        return synthetic_estimate(
            gt_rotated, deviation, self.model,
            frame_index=frame.index, theta=spec.theta,
        )

    def describe(self) -> dict:
        return {
            "kind": "synthetic",
            "c_max": self.model.c_max,
            "c_min": self.model.c_min,
            "sigma0": self.model.sigma0,
            "sigma1": self.model.sigma1,
            "dropout_slope": self.model.dropout_slope,
            "confidence_noise": self.model.confidence_noise,
            "rng_seed": self.model.rng_seed,
        }
