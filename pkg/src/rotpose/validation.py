"""Parameter and input validation helpers.

Thin checks shared by the estimator facade and the CLI so both reject bad
settings with the same messages.  Each check returns the (possibly coerced)
value on success and raises ConfigError otherwise.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence, Union

from .errors import ConfigError
from .frames import Frame, frames_from_dir
from .geometry import AngleGrid


def check_step(step) -> float:
    step = float(step)
    AngleGrid(step)  # raises ConfigError unless 360 is a multiple of step
    return step


def check_weight(w) -> float:
    w = float(w)
    if not 0.0 < w <= 1.0:
        raise ConfigError(f"w must be in (0, 1], got {w}")
    return w


def check_window(window, step: float) -> Optional[float]:
    if window is None:
        return None
    window = float(window)
    if not step <= window <= 180.0:
        raise ConfigError(f"angle_window must lie in [step, 180], got {window}")
    return window


def check_top_k(top_k) -> int:
    top_k = int(top_k)
    if top_k < 1:
        raise ConfigError(f"top_k must be >= 1, got {top_k}")
    return top_k


def check_threshold(threshold) -> float:
    threshold = float(threshold)
    if threshold <= 0:
        raise ConfigError(f"distance_threshold must be positive, got {threshold}")
    return threshold


def check_floor(floor) -> float:
    floor = float(floor)
    if not 0.0 <= floor < 1.0:
        raise ConfigError(f"confidence_floor must be in [0, 1), got {floor}")
    return floor


def check_parallelism(parallelism) -> int:
    parallelism = int(parallelism)
    if parallelism < 1:
        raise ConfigError(f"parallelism must be >= 1, got {parallelism}")
    return parallelism


def coerce_frames(X: Union[str, Path, Sequence]) -> list[Frame]:
    """Accept a frame directory, a list of image paths, or Frame objects."""
    if isinstance(X, (str, Path)):
        return frames_from_dir(X)
    try:
        items = list(X)
    except TypeError:
        raise ConfigError(
            f"cannot use {type(X).__name__} as a frame sequence; "
            "expected a directory path or an iterable of frames"
        )
    frames: list[Frame] = []
    for i, item in enumerate(items):
        if isinstance(item, Frame):
            frames.append(item)
        elif isinstance(item, (str, Path)):
            frames.append(Frame.from_path(i, item))
        else:
            raise ConfigError(
                f"frame {i} has unsupported type {type(item).__name__}; "
                "expected Frame or an image path"
            )
    if not frames:
        raise ConfigError("no frames given")
    return frames
