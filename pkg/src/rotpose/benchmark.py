"""Synthetic motion benchmark and quantitative evaluation.

Generates an articulated stick figure following a motion script (cartwheel,
handstand hold, upright walk, or custom keyframes), with exact ground-truth
keypoints, and scores pipeline runs against that ground truth with standard
pose metrics (MPJPE, PCK) plus confidence and angle-trajectory summaries.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import cv2
import numpy as np

from .errors import ConfigError, GenerationError
from .frames import Frame
from .pipeline import FrameResult
from .skeleton import BODY_25, Pose, SkeletonSchema

CARTWHEEL = "cartwheel"
HANDSTAND_HOLD = "handstand_hold"
UPRIGHT_WALK = "upright_walk"
CUSTOM_KEYFRAMES = "custom_keyframes"

DEFAULT_CANVAS = (640, 480)
PCK_ALPHAS = (0.1, 0.2)

GROUND_TRUTH_FILENAME = "ground_truth.jsonl"
REPORT_JSON_FILENAME = "report.json"
REPORT_CSV_FILENAME = "report.csv"


@dataclass(frozen=True)
class MotionScript:
    """Frame-indexed description of a synthetic performance.

    ``body_angle_fn`` gives the rigid body tilt in degrees (0 = upright,
    increasing per the image-axes rotation convention), ``root_path_fn`` the
    mid-hip position in pixels; both take the 0-based frame index.
    """

    kind: str
    frames: int
    body_angle_fn: Callable[[int], float]
    root_path_fn: Callable[[int], tuple[float, float]]
    limb_amplitude: float = 10.0
    limb_period: float = 30.0

    def __post_init__(self):
        if self.kind not in (CARTWHEEL, HANDSTAND_HOLD, UPRIGHT_WALK, CUSTOM_KEYFRAMES):
            raise ConfigError(f"unknown motion script kind {self.kind!r}")
        if self.frames < 1:
            raise ConfigError(f"frames must be >= 1, got {self.frames}")
        if self.limb_period <= 0:
            raise ConfigError(f"limb_period must be positive, got {self.limb_period}")


def cartwheel(frames: int = 90, canvas: tuple[int, int] = DEFAULT_CANVAS,
              limb_amplitude: float = 10.0) -> MotionScript:
    """One full rotation, starting and ending upright, drifting sideways."""
    if frames < 2:
        raise ConfigError("cartwheel needs at least 2 frames")
    w, h = canvas
    last = frames - 1

    def angle(t: int) -> float:
        return 360.0 * t / last

    def root(t: int) -> tuple[float, float]:
        s = t / last
        return (0.35 * w + 0.30 * w * s, 0.55 * h - 40.0 * math.sin(math.pi * s))

    return MotionScript(CARTWHEEL, frames, angle, root, limb_amplitude=limb_amplitude)


def handstand_hold(frames: int = 60, canvas: tuple[int, int] = DEFAULT_CANVAS,
                   limb_amplitude: float = 6.0) -> MotionScript:
    """Kick up to inverted over the first third, then hold at 180 degrees."""
    w, h = canvas
    ramp = max(1, frames // 3)

    def angle(t: int) -> float:
        return 180.0 * min(t, ramp) / ramp

    def root(t: int) -> tuple[float, float]:
        return (0.5 * w, 0.52 * h)

    return MotionScript(HANDSTAND_HOLD, frames, angle, root,
                        limb_amplitude=limb_amplitude)


def upright_walk(frames: int = 90, canvas: tuple[int, int] = DEFAULT_CANVAS,
                 limb_amplitude: float = 10.0) -> MotionScript:
    """Constant upright orientation, straight horizontal path."""
    w, h = canvas
    last = max(1, frames - 1)

    def angle(t: int) -> float:
        return 0.0

    def root(t: int) -> tuple[float, float]:
        return (0.30 * w + 0.40 * w * t / last, 0.55 * h)

    return MotionScript(UPRIGHT_WALK, frames, angle, root,
                        limb_amplitude=limb_amplitude)


def custom_keyframes(frames: int,
                     angle_keys: Sequence[tuple[int, float]],
                     root_keys: Sequence[tuple[int, tuple[float, float]]],
                     limb_amplitude: float = 10.0) -> MotionScript:
    """Linear interpolation between (frame, value) keyframes."""
    if not angle_keys or not root_keys:
        raise ConfigError("custom_keyframes needs at least one keyframe per track")
    at = np.array([k[0] for k in angle_keys], dtype=float)
    av = np.array([k[1] for k in angle_keys], dtype=float)
    rt = np.array([k[0] for k in root_keys], dtype=float)
    rx = np.array([k[1][0] for k in root_keys], dtype=float)
    ry = np.array([k[1][1] for k in root_keys], dtype=float)

    def angle(t: int) -> float:
        return float(np.interp(t, at, av))

    def root(t: int) -> tuple[float, float]:
        return (float(np.interp(t, rt, rx)), float(np.interp(t, rt, ry)))

    return MotionScript(CUSTOM_KEYFRAMES, frames, angle, root,
                        limb_amplitude=limb_amplitude)


# ---------------------------------------------------------------------------
# Stick figure
# ---------------------------------------------------------------------------

# bone lengths in px; the figure spans roughly 215 px head to toe
_TORSO = 80.0
_HEAD = 25.0
_UPPER_ARM = 35.0
_FOREARM = 30.0
_THIGH = 45.0
_SHIN = 42.0

# animated limb groups: (joint chain lengths, phase slot, amplitude scale)
_LIMB_GROUPS = ("arm_r", "arm_l", "leg_r", "leg_l")

BODY_25_EDGES = (
    (1, 0), (0, 15), (0, 16), (15, 17), (16, 18),
    (1, 2), (2, 3), (3, 4), (1, 5), (5, 6), (6, 7),
    (1, 8), (8, 9), (9, 10), (10, 11), (8, 12), (12, 13), (13, 14),
    (11, 24), (11, 22), (22, 23), (14, 21), (14, 19), (19, 20),
)


def _limb_dir(angle_deg: float) -> np.ndarray:
    # 0 deg hangs straight down (+y in image axes); positive swings toward +x
    rad = math.radians(angle_deg)
    return np.array([math.sin(rad), math.cos(rad)])


def _figure_points(limbs: dict[str, float]) -> np.ndarray:
    """Body-local joint positions (25, 2), mid-hip at the origin, upright."""
    p = np.zeros((25, 2))
    p[8] = (0.0, 0.0)                    # MidHip
    p[1] = (0.0, -_TORSO)                # Neck
    p[0] = (0.0, -_TORSO - _HEAD)        # Nose
    p[15] = p[0] + (-5.0, -5.0)          # REye
    p[16] = p[0] + (5.0, -5.0)           # LEye
    p[17] = p[0] + (-9.0, -2.0)          # REar
    p[18] = p[0] + (9.0, -2.0)           # LEar
    p[2] = p[1] + (-18.0, 2.0)           # RShoulder
    p[5] = p[1] + (18.0, 2.0)            # LShoulder
    p[3] = p[2] + _UPPER_ARM * _limb_dir(limbs["arm_r"])
    p[4] = p[3] + _FOREARM * _limb_dir(limbs["arm_r"] + limbs["arm_r_lower"])
    p[6] = p[5] + _UPPER_ARM * _limb_dir(limbs["arm_l"])
    p[7] = p[6] + _FOREARM * _limb_dir(limbs["arm_l"] + limbs["arm_l_lower"])
    p[9] = p[8] + (-12.0, 2.0)           # RHip
    p[12] = p[8] + (12.0, 2.0)           # LHip
    p[10] = p[9] + _THIGH * _limb_dir(limbs["leg_r"])
    p[11] = p[10] + _SHIN * _limb_dir(limbs["leg_r"] + limbs["leg_r_lower"])
    p[13] = p[12] + _THIGH * _limb_dir(limbs["leg_l"])
    p[14] = p[13] + _SHIN * _limb_dir(limbs["leg_l"] + limbs["leg_l_lower"])
    for ankle, big, small, heel in ((11, 22, 23, 24), (14, 19, 20, 21)):
        p[big] = p[ankle] + (12.0, 8.0)
        p[small] = p[ankle] + (15.0, 5.0)
        p[heel] = p[ankle] + (-5.0, 8.0)
    return p


def render_pose(pose: Pose, canvas: tuple[int, int]) -> np.ndarray:
    """Draw a stick figure as a white skeleton on black, for smoke tests."""
    w, h = canvas
    img = np.zeros((h, w, 3), dtype=np.uint8)
    pts = pose.xy
    detected = pose.detected_mask
    for a, b in BODY_25_EDGES:
        if detected[a] and detected[b]:
            pa = (int(round(pts[a, 0])), int(round(pts[a, 1])))
            pb = (int(round(pts[b, 0])), int(round(pts[b, 1])))
            cv2.line(img, pa, pb, (255, 255, 255), 3, cv2.LINE_AA)
    for k in np.flatnonzero(detected):
        center = (int(round(pts[k, 0])), int(round(pts[k, 1])))
        cv2.circle(img, center, 3, (255, 255, 255), -1, cv2.LINE_AA)
    return img


def generate_sequence(script: MotionScript,
                      canvas: tuple[int, int] = DEFAULT_CANVAS,
                      seed: int = 0,
                      schema: SkeletonSchema = BODY_25,
                      rasterize: bool = False) -> list[Frame]:
    """Frames with exact ground-truth poses following the motion script.

    The figure is posed in a body-local frame (fixed bone lengths, limbs
    swinging sinusoidally with seeded phases), rigidly rotated by the body
    angle about the mid-hip, then translated along the root path.  Raises
    GenerationError if any joint leaves the canvas.
    """
    if schema.joint_count != 25:
        raise ConfigError("the stick figure is defined for the 25-joint layout")
    w, h = canvas
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 915)))
    phases = {g: rng.uniform(0.0, 2.0 * math.pi) for g in _LIMB_GROUPS}
    frames = []
    for t in range(script.frames):
        cycle = 2.0 * math.pi * t / script.limb_period
        limbs = {}
        for i, g in enumerate(_LIMB_GROUPS):
            swing = math.sin(cycle + phases[g] + (math.pi if i % 2 else 0.0))
            limbs[g] = script.limb_amplitude * swing
            limbs[g + "_lower"] = 0.5 * script.limb_amplitude * abs(swing)
        body = _figure_points(limbs)
        beta = float(script.body_angle_fn(t))
        rad = math.radians(beta)
        rot = np.array([[math.cos(rad), -math.sin(rad)],
                        [math.sin(rad), math.cos(rad)]])
        pts = body @ rot.T + np.asarray(script.root_path_fn(t), dtype=float)
        if (pts[:, 0].min() < 0 or pts[:, 0].max() > w - 1
                or pts[:, 1].min() < 0 or pts[:, 1].max() > h - 1):
            raise GenerationError(
                f"frame {t}: skeleton leaves the {w}x{h} canvas "
                f"(x {pts[:, 0].min():.1f}..{pts[:, 0].max():.1f}, "
                f"y {pts[:, 1].min():.1f}..{pts[:, 1].max():.1f})"
            )
        kp = np.concatenate([pts, np.ones((25, 1))], axis=1)
        truth = Pose.original(schema, kp)
        image = render_pose(truth, canvas) if rasterize else None
        frames.append(Frame(index=t, size=canvas, image=image,
                            truth=truth, body_angle=beta))
    return frames


def compensating_angles(frames: Sequence[Frame]) -> list[float]:
    """The rotation that would bring each frame's body upright."""
    out = []
    for f in frames:
        if f.body_angle is None:
            raise ConfigError(f"frame {f.index} has no body angle")
        out.append((360.0 - f.body_angle) % 360.0)
    return out


# ---------------------------------------------------------------------------
# Ground-truth artifact
# ---------------------------------------------------------------------------

def write_ground_truth(frames: Sequence[Frame], path: Union[str, Path]):
    with open(path, "w", encoding="utf-8") as fh:
        for f in frames:
            if f.truth is None:
                raise ConfigError(f"frame {f.index} has no ground-truth pose")
            doc = {
                "frame": f.index,
                "body_angle": f.body_angle,
                "person": {"pose_keypoints_2d": f.truth.flat()},
            }
            fh.write(json.dumps(doc, separators=(",", ":")) + "\n")


def read_ground_truth(path: Union[str, Path],
                      schema: SkeletonSchema = BODY_25
                      ) -> tuple[list[Pose], list[Optional[float]]]:
    poses, angles = [], []
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"ground-truth file {path} does not exist")
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            flat = np.asarray(doc["person"]["pose_keypoints_2d"], dtype=float)
            poses.append(Pose.original(schema, flat.reshape(-1, 3)))
            angles.append(doc.get("body_angle"))
    if not poses:
        raise ConfigError(f"ground-truth file {path} is empty")
    return poses, angles


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def circular_correlation(a_deg: Sequence[float], b_deg: Sequence[float]) -> float:
    """Circular correlation coefficient between two angle series."""
    a = np.radians(np.asarray(a_deg, dtype=float))
    b = np.radians(np.asarray(b_deg, dtype=float))
    if a.shape != b.shape or a.size < 2:
        raise ConfigError("circular_correlation needs two equal-length series")
    abar = math.atan2(np.sin(a).sum(), np.cos(a).sum())
    bbar = math.atan2(np.sin(b).sum(), np.cos(b).sum())
    sa, sb = np.sin(a - abar), np.sin(b - bbar)
    denom = math.sqrt(float(np.sum(sa**2)) * float(np.sum(sb**2)))
    if denom == 0.0:
        return 0.0
    return float(np.sum(sa * sb) / denom)


def _torso_size(gt: Pose) -> float:
    schema = gt.schema
    try:
        neck, hip = schema.index("Neck"), schema.index("MidHip")
        size = float(np.linalg.norm(gt.xy[neck] - gt.xy[hip]))
        if size > 0:
            return size
    except (KeyError, ValueError):
        pass
    xy = gt.xy[gt.detected_mask]
    if xy.size == 0:
        return 1.0
    span = xy.max(axis=0) - xy.min(axis=0)
    return max(float(np.hypot(span[0], span[1])), 1.0)


def _pose_errors(pred: Pose, gt: Pose) -> tuple[np.ndarray, np.ndarray]:
    """Per-joint L2 errors and the mask of joints counted (detected in pred)."""
    mask = pred.detected_mask & gt.detected_mask
    err = np.linalg.norm(pred.xy - gt.xy, axis=1)
    return err, mask


@dataclass
class EvalReport:
    mpjpe_augmented: float
    mpjpe_raw: float
    pck_augmented: dict[str, float]
    pck_raw: dict[str, float]
    mean_conf_augmented: float
    mean_conf_raw: float
    conf_curve_augmented: list[float] = field(repr=False, default_factory=list)
    conf_curve_raw: list[float] = field(repr=False, default_factory=list)
    error_curve_augmented: list[float] = field(repr=False, default_factory=list)
    error_curve_raw: list[float] = field(repr=False, default_factory=list)
    estimator_calls_augmented: int = 0
    estimator_calls_raw: int = 0
    frames: int = 0

    def to_dict(self) -> dict:
        def clean(values):
            return [None if math.isnan(v) else v for v in values]

        return {
            "frames": self.frames,
            "mpjpe_augmented": (
                self.mpjpe_augmented if math.isfinite(self.mpjpe_augmented) else None
            ),
            "mpjpe_raw": self.mpjpe_raw if math.isfinite(self.mpjpe_raw) else None,
            "pck_augmented": self.pck_augmented,
            "pck_raw": self.pck_raw,
            "mean_conf_augmented": self.mean_conf_augmented,
            "mean_conf_raw": self.mean_conf_raw,
            "estimator_calls_augmented": self.estimator_calls_augmented,
            "estimator_calls_raw": self.estimator_calls_raw,
            "conf_curve_augmented": self.conf_curve_augmented,
            "conf_curve_raw": self.conf_curve_raw,
            "error_curve_augmented": clean(self.error_curve_augmented),
            "error_curve_raw": clean(self.error_curve_raw),
        }


def _accumulate(poses: Sequence[Pose], ground_truth: Sequence[Pose]):
    total, count = 0.0, 0
    hits = {alpha: 0 for alpha in PCK_ALPHAS}
    joints_total = 0
    curve = []
    for pred, gt in zip(poses, ground_truth):
        err, mask = _pose_errors(pred, gt)
        n = int(mask.sum())
        frame_err = float(err[mask].mean()) if n else float("nan")
        curve.append(frame_err)
        total += float(err[mask].sum())
        count += n
        norm = _torso_size(gt)
        gt_mask = gt.detected_mask
        joints_total += int(gt_mask.sum())
        for alpha in PCK_ALPHAS:
            within = mask & gt_mask & (err <= alpha * norm)
            hits[alpha] += int(within.sum())
    mpjpe = total / count if count else float("inf")
    pck = {
        str(alpha): (hits[alpha] / joints_total if joints_total else 0.0)
        for alpha in PCK_ALPHAS
    }
    return mpjpe, pck, curve


def evaluate(results: Sequence[FrameResult], ground_truth: Sequence[Pose],
             baseline: Sequence[FrameResult],
             calls_augmented: Optional[int] = None,
             calls_raw: Optional[int] = None) -> EvalReport:
    """Score an augmented run against ground truth, side by side with a raw run.

    The augmented run is judged on its reconstructed poses, the baseline on
    its selected poses (the baseline is expected to come from a single-angle
    grid, so its selected pose is the raw estimator output at 0 degrees).
    """
    if not (len(results) == len(ground_truth) == len(baseline)):
        raise ConfigError(
            "length mismatch: "
            f"{len(results)} results vs {len(ground_truth)} ground-truth frames "
            f"vs {len(baseline)} baseline results"
        )
    mpjpe_aug, pck_aug, curve_aug = _accumulate(
        [r.reconstructed_pose for r in results], ground_truth
    )
    mpjpe_raw, pck_raw, curve_raw = _accumulate(
        [r.selected_pose for r in baseline], ground_truth
    )
    conf_aug = [float(r.mean_conf_selected) for r in results]
    conf_raw = [float(r.mean_conf_selected) for r in baseline]
    return EvalReport(
        mpjpe_augmented=mpjpe_aug,
        mpjpe_raw=mpjpe_raw,
        pck_augmented=pck_aug,
        pck_raw=pck_raw,
        mean_conf_augmented=float(np.mean(conf_aug)),
        mean_conf_raw=float(np.mean(conf_raw)),
        conf_curve_augmented=conf_aug,
        conf_curve_raw=conf_raw,
        error_curve_augmented=curve_aug,
        error_curve_raw=curve_raw,
        estimator_calls_augmented=(
            sum(r.estimator_calls for r in results)
            if calls_augmented is None else calls_augmented
        ),
        estimator_calls_raw=(
            sum(r.estimator_calls for r in baseline)
            if calls_raw is None else calls_raw
        ),
        frames=len(results),
    )


def write_report(report: EvalReport, out_dir: Union[str, Path]):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / REPORT_JSON_FILENAME, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    with open(out_dir / REPORT_CSV_FILENAME, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["frame", "err_augmented", "err_raw", "conf_augmented", "conf_raw"]
        )
        for i in range(report.frames):
            writer.writerow([
                i,
                report.error_curve_augmented[i],
                report.error_curve_raw[i],
                report.conf_curve_augmented[i],
                report.conf_curve_raw[i],
            ])
