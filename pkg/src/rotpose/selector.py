"""Per-frame candidate selection.

The first frame takes the candidate with the best mean confidence.  Later
frames rank candidates by consistency with the previous reconstructed pose
(summed joint distance), keep the closest few under a distance threshold, and
pick the most confident among them; if every candidate exceeds the threshold,
selection falls back to confidence alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import NoCandidateError, SchemaError
from .geometry import circular_distance
from .skeleton import (
    DEFAULT_CONFIDENCE_FLOOR,
    FRAME_ORIGINAL,
    Pose,
    SkeletonSchema,
    check_same_schema,
    considered_mask,
)

RAW_SUM = "raw_sum"
SCALED_TO_FULL = "scaled_to_full"


@dataclass(frozen=True)
class SelectorConfig:
    top_k: int = 5
    distance_threshold: float = 500.0
    exclude_head: bool = True
    confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR
    distance_normalization: str = SCALED_TO_FULL

    def __post_init__(self):
        from .errors import ConfigError

        if self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1, got {self.top_k}")
        if self.distance_threshold <= 0:
            raise ConfigError(
                f"distance_threshold must be positive, got {self.distance_threshold}"
            )
        if not 0.0 <= self.confidence_floor < 1.0:
            raise ConfigError(
                f"confidence_floor must be in [0, 1), got {self.confidence_floor}"
            )
        if self.distance_normalization not in (RAW_SUM, SCALED_TO_FULL):
            raise ConfigError(
                f"unknown distance normalization {self.distance_normalization!r}"
            )

    def to_dict(self) -> dict:
        return {
            "top_k": self.top_k,
            "distance_threshold": self.distance_threshold,
            "exclude_head": self.exclude_head,
            "confidence_floor": self.confidence_floor,
            "distance_normalization": self.distance_normalization,
        }


@dataclass(frozen=True)
class RotationCandidate:
    """A pose predicted at rotation theta, mapped back to original coordinates."""

    theta: float
    pose: Pose
    mean_conf: float
    distance_to_prev: Optional[float] = None

    def __post_init__(self):
        if self.pose.frame != FRAME_ORIGINAL:
            raise SchemaError("candidates must be in the original frame")


@dataclass
class CandidateDiagnostic:
    theta: float
    distance: Optional[float]
    mean_conf: float

    def to_dict(self) -> dict:
        return {
            "theta": float(self.theta),
            "distance": None if self.distance is None else float(self.distance),
            "mean_conf": float(self.mean_conf),
        }


@dataclass
class SelectionDiagnostics:
    """Which rule fired and how every candidate scored."""

    rule: str  # "first_frame" | "consistency" | "fallback" | "no_person"
    candidates: list[CandidateDiagnostic] = field(default_factory=list)

    @property
    def fallback(self) -> bool:
        return self.rule == "fallback"


def pose_distance(current: Pose, previous: Pose, cfg: SelectorConfig,
                  schema: SkeletonSchema) -> Optional[float]:
    """Summed L2 distance over joints detected in both poses.

    Returns None when no considered joint is shared.  Under scaled_to_full the
    raw sum is rescaled by (considered joint count / shared count) so sparse
    detections do not trivially win the minimization.
    """
    check_same_schema(current, schema)
    check_same_schema(previous, schema)
    if current.frame != FRAME_ORIGINAL or previous.frame != FRAME_ORIGINAL:
        raise SchemaError("pose_distance expects original-frame poses")
    shared = (
        considered_mask(current, cfg.confidence_floor, cfg.exclude_head)
        & considered_mask(previous, cfg.confidence_floor, cfg.exclude_head)
    )
    n_shared = int(shared.sum())
    if n_shared == 0:
        return None
    raw = float(np.linalg.norm(current.xy[shared] - previous.xy[shared], axis=1).sum())
    if cfg.distance_normalization == RAW_SUM:
        return raw
    total = schema.joint_count
    if cfg.exclude_head:
        total -= len(schema.head_joints)
    return raw * (total / n_shared)


def _confidence_order(c: RotationCandidate) -> tuple:
    # max mean_conf, then theta closest to 0, then smaller theta
    return (-c.mean_conf, circular_distance(c.theta, 0.0), c.theta)


def select_first_frame(candidates: Sequence[RotationCandidate]) -> RotationCandidate:
    """The candidate with the best mean confidence (deterministic tie-breaks)."""
    if not candidates:
        raise NoCandidateError("no candidates to select from")
    return min(candidates, key=_confidence_order)


def select_frame(candidates: Sequence[RotationCandidate], previous: Pose,
                 cfg: SelectorConfig, schema: SkeletonSchema
                 ) -> tuple[RotationCandidate, SelectionDiagnostics]:
    """Select the pose most consistent with the previous reconstruction.

    Candidates whose distance to ``previous`` exceeds the threshold are
    dropped; among the ``top_k`` closest survivors the most confident wins.
    If nothing survives, the confidence rule decides instead (fallback).
    """
    if not candidates:
        raise NoCandidateError("no candidates to select from")
    scored = [
        replace(c, distance_to_prev=pose_distance(c.pose, previous, cfg, schema))
        for c in candidates
    ]
    diag = SelectionDiagnostics(
        rule="consistency",
        candidates=[
            CandidateDiagnostic(c.theta, c.distance_to_prev, c.mean_conf)
            for c in scored
        ],
    )

    def effective(c: RotationCandidate) -> float:
        return np.inf if c.distance_to_prev is None else c.distance_to_prev

    eligible = [c for c in scored if effective(c) <= cfg.distance_threshold]
    if not eligible:
        diag.rule = "fallback"
        return select_first_frame(scored), diag
    eligible.sort(key=lambda c: (effective(c),) + _confidence_order(c))
    shortlist = eligible[: cfg.top_k]
    return min(shortlist, key=_confidence_order), diag
