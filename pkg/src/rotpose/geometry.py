"""Exact coordinate mapping between the original image frame and rotated
canvases, plus the raster rotation that matches it.

Convention: points are (x, y) in pixels with y growing downward (image axes).
A rotation by theta degrees applies R = [[cos, -sin], [sin, cos]] about the
image center, and the destination canvas is expanded so nothing is cropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import cv2
import numpy as np

from .errors import ConfigError, SchemaError
from .skeleton import FRAME_ORIGINAL, FRAME_ROTATED, Pose


def wrap_degrees(angle: float) -> float:
    """Wrap an angle to (-180, 180]."""
    r = math.fmod(angle + 180.0, 360.0)
    if r <= 0.0:
        r += 360.0
    return r - 180.0


def circular_distance(a: float, b: float) -> float:
    """Absolute angular distance between two angles, in [0, 180]."""
    return abs(wrap_degrees(a - b))


def _canvas_size(theta: float, width: int, height: int) -> tuple[int, int]:
    # ceil after rounding so axis-aligned angles keep the exact source extent
    # (cos(90 deg) in floats is ~6e-17, which would otherwise bump the ceil).
    rad = math.radians(theta)
    ac, as_ = abs(math.cos(rad)), abs(math.sin(rad))
    cw = math.ceil(round(width * ac + height * as_, 6))
    ch = math.ceil(round(width * as_ + height * ac, 6))
    return cw, ch


@dataclass(frozen=True)
class RotationSpec:
    """A rotation angle bound to concrete source and destination canvases."""

    theta: float
    source_size: tuple[int, int]
    canvas_size: tuple[int, int]
    center_src: tuple[float, float]
    center_dst: tuple[float, float]

    def __post_init__(self):
        w, h = self.source_size
        if w <= 0 or h <= 0:
            raise SchemaError(f"source size must be positive, got {self.source_size}")
        if not 0.0 <= self.theta < 360.0:
            raise ConfigError(f"theta must lie in [0, 360), got {self.theta}")
        if self.canvas_size != _canvas_size(self.theta, w, h):
            raise SchemaError(
                f"canvas {self.canvas_size} does not match the expansion rule "
                f"for theta={self.theta}, source={self.source_size}"
            )
        cw, ch = self.canvas_size
        if self.center_src != ((w - 1) / 2.0, (h - 1) / 2.0):
            raise SchemaError("center_src must be the source pixel center")
        if self.center_dst != ((cw - 1) / 2.0, (ch - 1) / 2.0):
            raise SchemaError("center_dst must be the canvas pixel center")

    @classmethod
    def for_rotation(cls, theta: float, source_size: tuple[int, int]) -> "RotationSpec":
        w, h = int(source_size[0]), int(source_size[1])
        cw, ch = _canvas_size(theta, w, h)
        return cls(
            theta=float(theta),
            source_size=(w, h),
            canvas_size=(cw, ch),
            center_src=((w - 1) / 2.0, (h - 1) / 2.0),
            center_dst=((cw - 1) / 2.0, (ch - 1) / 2.0),
        )


@dataclass(frozen=True)
class AngleGrid:
    """The evaluated rotation angles: 0, d, 2d, ... up to (but excluding) 360."""

    step: float
    angles: tuple[float, ...] = ()

    def __post_init__(self):
        if self.step <= 0:
            raise ConfigError(f"angle step must be positive, got {self.step}")
        n = 360.0 / self.step
        if abs(n - round(n)) > 1e-9:
            raise ConfigError(f"360 is not a multiple of the angle step {self.step}")
        computed = tuple(i * self.step for i in range(int(round(n))))
        if self.angles and tuple(self.angles) != computed:
            raise ConfigError("angles do not match the step")
        object.__setattr__(self, "angles", computed)

    def __len__(self) -> int:
        return len(self.angles)


def _rotation_matrix(theta: float) -> np.ndarray:
    rad = math.radians(theta)
    c, s = math.cos(rad), math.sin(rad)
    return np.array([[c, -s], [s, c]], dtype=np.float64)


def forward_map(points, spec: RotationSpec) -> np.ndarray:
    """Map original-frame points into the rotated canvas.

    Accepts a single (x, y) pair or an (N, 2) array; returns the same shape.
    """
    p = np.asarray(points, dtype=np.float64)
    rot = _rotation_matrix(spec.theta)
    return (p - spec.center_src) @ rot.T + spec.center_dst


def inverse_map(points, spec: RotationSpec) -> np.ndarray:
    """Map rotated-canvas points back into the original frame."""
    p = np.asarray(points, dtype=np.float64)
    rot = _rotation_matrix(-spec.theta)
    return (p - spec.center_dst) @ rot.T + spec.center_src


def rotate_pose(pose: Pose, spec: RotationSpec) -> Pose:
    """Map an original-frame pose into the rotated canvas (detected joints only)."""
    if pose.frame != FRAME_ORIGINAL:
        raise SchemaError(f"expected an original-frame pose, got {pose.frame!r}")
    out = np.array(pose.keypoints)
    det = pose.detected_mask
    if det.any():
        out[det, :2] = forward_map(out[det, :2], spec)
    return pose.with_keypoints(out, frame=FRAME_ROTATED, theta=spec.theta)


def unrotate_pose(pose: Pose, spec: RotationSpec) -> Pose:
    """Map a rotated-canvas pose back to original coordinates.

    Confidences are untouched and undetected joints stay undetected.
    """
    if pose.frame != FRAME_ROTATED:
        raise SchemaError(f"expected a rotated-frame pose, got {pose.frame!r}")
    if pose.theta != spec.theta:
        raise SchemaError(
            f"pose was predicted at theta={pose.theta}, spec is theta={spec.theta}"
        )
    out = np.array(pose.keypoints)
    det = pose.detected_mask
    if det.any():
        out[det, :2] = inverse_map(out[det, :2], spec)
    return pose.with_keypoints(out, frame=FRAME_ORIGINAL)


def rotate_raster(image: np.ndarray, spec: RotationSpec) -> np.ndarray:
    """Rotate an image onto the expanded canvas with bilinear resampling.

    Out-of-source pixels are filled with black.  A source pixel at p lands at
    forward_map(p) up to resampling tolerance.
    """
    img = np.asarray(image)
    if img.ndim not in (2, 3) or img.shape[0] == 0 or img.shape[1] == 0:
        raise SchemaError(f"cannot rotate an empty raster of shape {img.shape}")
    h, w = img.shape[:2]
    if (w, h) != spec.source_size:
        raise SchemaError(
            f"raster is {w}x{h} but the spec was built for "
            f"{spec.source_size[0]}x{spec.source_size[1]}"
        )
    rot = _rotation_matrix(spec.theta)
    shift = np.asarray(spec.center_dst) - rot @ np.asarray(spec.center_src)
    affine = np.hstack([rot, shift.reshape(2, 1)])
    return cv2.warpAffine(
        img,
        affine,
        spec.canvas_size,
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=0,
    )
