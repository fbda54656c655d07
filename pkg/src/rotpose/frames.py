"""Frame references fed to the pipeline.

A frame is either backed by a raster (file path or in-memory array) for real
estimator backends, or by ground-truth metadata (pose + body tilt) for the
synthetic backend.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import cv2
import numpy as np

from .errors import ConfigError
from .skeleton import Pose

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp"}


@dataclass(frozen=True)
class Frame:
    """One input frame: index, size, and whichever payloads are available."""

    index: int
    size: tuple[int, int]
    image_path: Optional[Path] = None
    image: Optional[np.ndarray] = None
    truth: Optional[Pose] = None
    body_angle: Optional[float] = None

    def load_image(self) -> np.ndarray:
        if self.image is not None:
            return self.image
        if self.image_path is None:
            raise ConfigError(f"frame {self.index} has no raster payload")
        img = cv2.imread(str(self.image_path), cv2.IMREAD_UNCHANGED)
        if img is None:
            raise ConfigError(f"could not read image {self.image_path}")
        return img

    @classmethod
    def from_path(cls, index: int, path: Union[str, Path]) -> "Frame":
        path = Path(path)
        img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        if img is None:
            raise ConfigError(f"could not read image {path}")
        h, w = img.shape[:2]
        return cls(index=index, size=(w, h), image_path=path, image=img)

    @classmethod
    def from_array(cls, index: int, image: np.ndarray) -> "Frame":
        h, w = image.shape[:2]
        return cls(index=index, size=(w, h), image=image)


def frames_from_dir(directory: Union[str, Path]) -> list[Frame]:
    """All image files in a directory, sorted by name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"frame directory {directory} does not exist")
    paths = sorted(
        p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
    )
    if not paths:
        raise ConfigError(f"no image files found in {directory}")
    return [Frame.from_path(i, p) for i, p in enumerate(paths)]
