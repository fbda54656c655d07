"""Joint schema, pose container, and confidence statistics.

A pose is a fixed-length array of (x, y, confidence) triplets.  Confidence 0
means "not detected"; the coordinates of an undetected joint carry no meaning.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .errors import SchemaError

DEFAULT_CONFIDENCE_FLOOR = 0.05

FRAME_ORIGINAL = "original"
FRAME_ROTATED = "rotated"


@dataclass(frozen=True)
class SkeletonSchema:
    """Named joint layout plus the set of head joints excluded from selection."""

    name: str
    joint_names: tuple[str, ...]
    head_joints: frozenset[int] = frozenset()

    def __post_init__(self):
        names = self.joint_names
        if len(set(names)) != len(names):
            raise SchemaError(f"schema {self.name!r} has duplicate joint names")
        bad = [k for k in self.head_joints if not 0 <= k < len(names)]
        if bad:
            raise SchemaError(f"head joint indices out of range: {bad}")
        if len(self.head_joints) >= len(names):
            raise SchemaError("head_joints must leave at least one body joint")

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)

    def index(self, joint_name: str) -> int:
        return self.joint_names.index(joint_name)

    def head_mask(self) -> np.ndarray:
        mask = np.zeros(self.joint_count, dtype=bool)
        mask[list(self.head_joints)] = True
        return mask

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "joints": list(self.joint_names),
            "head_joints": sorted(self.head_joints),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SkeletonSchema":
        try:
            return cls(
                name=str(doc["name"]),
                joint_names=tuple(str(j) for j in doc["joints"]),
                head_joints=frozenset(int(k) for k in doc.get("head_joints", ())),
            )
        except KeyError as exc:
            raise SchemaError(f"schema document missing key: {exc}") from None

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "SkeletonSchema":
        with open(path, "r", encoding="utf-8") as fp:
            return cls.from_dict(json.load(fp))


# The common 25-joint body layout.  Head joints: nose, both eyes, both ears.
BODY_25 = SkeletonSchema(
    name="body25",
    joint_names=(
        "Nose", "Neck", "RShoulder", "RElbow", "RWrist",
        "LShoulder", "LElbow", "LWrist", "MidHip", "RHip",
        "RKnee", "RAnkle", "LHip", "LKnee", "LAnkle",
        "REye", "LEye", "REar", "LEar", "LBigToe",
        "LSmallToe", "LHeel", "RBigToe", "RSmallToe", "RHeel",
    ),
    head_joints=frozenset({0, 15, 16, 17, 18}),
)


@dataclass(frozen=True)
class Keypoint:
    """One joint: position in pixels plus detector confidence in [0, 1]."""

    x: float
    y: float
    confidence: float

    @property
    def detected(self) -> bool:
        return self.confidence > 0


@dataclass(frozen=True, eq=False)
class Pose:
    """All keypoints of one person at one frame, in a tagged coordinate frame.

    ``keypoints`` is a read-only (K, 3) float array of x, y, confidence rows.
    ``frame`` is ``"original"`` or ``"rotated"``; rotated poses carry the
    rotation angle in ``theta``.
    """

    schema: SkeletonSchema
    keypoints: np.ndarray
    frame: str = FRAME_ORIGINAL
    theta: Optional[float] = None

    def __post_init__(self):
        arr = np.asarray(self.keypoints, dtype=np.float64)
        if arr.shape != (self.schema.joint_count, 3):
            raise SchemaError(
                f"expected keypoint array of shape ({self.schema.joint_count}, 3), "
                f"got {arr.shape}"
            )
        if self.frame not in (FRAME_ORIGINAL, FRAME_ROTATED):
            raise SchemaError(f"unknown frame tag {self.frame!r}")
        if self.frame == FRAME_ROTATED and self.theta is None:
            raise SchemaError("rotated poses must carry a theta")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "keypoints", arr)

    @classmethod
    def original(cls, schema: SkeletonSchema, keypoints) -> "Pose":
        return cls(schema=schema, keypoints=keypoints, frame=FRAME_ORIGINAL)

    @classmethod
    def rotated(cls, schema: SkeletonSchema, keypoints, theta: float) -> "Pose":
        return cls(schema=schema, keypoints=keypoints, frame=FRAME_ROTATED, theta=theta)

    @classmethod
    def undetected(cls, schema: SkeletonSchema) -> "Pose":
        return cls.original(schema, np.zeros((schema.joint_count, 3)))

    @property
    def xy(self) -> np.ndarray:
        return self.keypoints[:, :2]

    @property
    def confidences(self) -> np.ndarray:
        return self.keypoints[:, 2]

    @property
    def detected_mask(self) -> np.ndarray:
        return self.keypoints[:, 2] > 0

    def keypoint(self, k: int) -> Keypoint:
        x, y, c = self.keypoints[k]
        return Keypoint(float(x), float(y), float(c))

    def with_keypoints(self, keypoints, frame: str = FRAME_ORIGINAL,
                       theta: Optional[float] = None) -> "Pose":
        return Pose(schema=self.schema, keypoints=keypoints, frame=frame, theta=theta)

    def flat(self) -> list[float]:
        """Keypoints as the flat [x0, y0, c0, x1, ...] wire layout."""
        return [float(v) for v in self.keypoints.ravel()]


def check_same_schema(pose: Pose, schema: SkeletonSchema) -> None:
    if pose.schema.joint_count != schema.joint_count or \
            pose.schema.joint_names != schema.joint_names:
        raise SchemaError(
            f"pose schema {pose.schema.name!r} does not match {schema.name!r}"
        )


def valid_joint_mask(pose: Pose, floor: float = 0.0) -> set[int]:
    """Indices of joints whose confidence strictly exceeds ``floor``."""
    return set(int(k) for k in np.flatnonzero(pose.confidences > floor))


def considered_mask(pose: Pose, floor: float, exclude_head: bool) -> np.ndarray:
    """Boolean mask of joints that enter the selection objectives."""
    mask = pose.confidences > floor
    if exclude_head:
        mask = mask & ~pose.schema.head_mask()
    return mask


def mean_confidence(pose: Pose, floor: float = DEFAULT_CONFIDENCE_FLOOR,
                    exclude_head: bool = True,
                    schema: Optional[SkeletonSchema] = None) -> float:
    """Mean confidence over considered joints; 0 when none are considered."""
    if schema is not None:
        check_same_schema(pose, schema)
    mask = considered_mask(pose, floor, exclude_head)
    if not mask.any():
        return 0.0
    return float(pose.confidences[mask].mean())
