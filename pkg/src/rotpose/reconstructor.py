"""Temporal smoothing of selected poses into the output trajectory.

Each frame's output is an exponential blend of the newly selected pose and
the previous output: J_t = w * selected_t + (1 - w) * J_{t-1}, applied per
joint with care around missing detections.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, SchemaError
from .skeleton import FRAME_ORIGINAL, Pose

DEFAULT_WEIGHT = 0.8


@dataclass
class ReconstructionState:
    """Carries the previous output pose between frames.

    One instance per video stream; reconstruction is inherently sequential,
    so the state must not be shared across threads.  ``coasting`` keeps
    joints that vanished from the current detection alive for a while, with
    confidence decayed by (1 - w) each frame; switching it off makes the
    blend strict (a joint undetected now is undetected in the output).
    """

    w: float = DEFAULT_WEIGHT
    coasting: bool = True
    previous: Optional[Pose] = field(default=None, repr=False)

    def __post_init__(self):
        if not 0.0 < self.w <= 1.0:
            raise ConfigError(f"w must be in (0, 1], got {self.w}")

    def reset(self):
        self.previous = None


def reconstruct(selected: Pose, state: ReconstructionState) -> Pose:
    """Blend ``selected`` with the previous output and advance the state."""
    if selected.frame != FRAME_ORIGINAL:
        raise SchemaError("reconstruct expects an original-frame pose")
    prev = state.previous
    if prev is None:
        result = selected.with_keypoints(selected.keypoints, theta=None)
        state.previous = result
        return result
    if prev.schema != selected.schema:
        raise SchemaError(
            f"schema mismatch: state holds {prev.schema.name!r}, "
            f"selected is {selected.schema.name!r}"
        )

    w = state.w
    cur_kp = selected.keypoints
    prev_kp = prev.keypoints
    out = np.zeros_like(cur_kp)

    in_cur = selected.detected_mask
    in_prev = prev.detected_mask
    both = in_cur & in_prev
    only_cur = in_cur & ~in_prev
    only_prev = ~in_cur & in_prev

    out[both, :2] = w * cur_kp[both, :2] + (1.0 - w) * prev_kp[both, :2]
    out[both, 2] = cur_kp[both, 2]
    out[only_cur] = cur_kp[only_cur]
    if state.coasting:
        out[only_prev, :2] = prev_kp[only_prev, :2]
        out[only_prev, 2] = (1.0 - w) * prev_kp[only_prev, 2]

    result = Pose.original(selected.schema, out)
    state.previous = result
    return result
