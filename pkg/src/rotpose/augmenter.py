"""Estimator-style facade over the rotation-augmentation pipeline.

Wraps configuration, validation, and the frame loop behind the familiar
fit/transform/predict surface so the pipeline composes with scikit-learn
tooling (get_params/set_params, cloning, grid search over the tunables).
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import ConfigError
from .estimator import EstimatorBackend
from .pipeline import FrameResult, PipelineConfig, run_sequence
from .selector import SelectorConfig
from .validation import (
    check_floor,
    check_parallelism,
    check_step,
    check_threshold,
    check_top_k,
    check_weight,
    check_window,
    coerce_frames,
)


class RotationAugmentedPoseEstimator(TransformerMixin, BaseEstimator):
    """Rotation test-time augmentation around a pluggable keypoint backend.

    ``transform`` runs the full pipeline over an ordered frame sequence and
    returns the smoothed keypoints as a (n_frames, 3 * n_joints) array in the
    flat x/y/confidence layout; per-frame diagnostics land in ``results_``.

    Parameters mirror the pipeline tunables: ``step`` is the rotation grid
    spacing in degrees, ``w`` the blend weight of the current frame,
    ``top_k``/``distance_threshold`` control consistency selection, and
    ``angle_window`` (half-width, degrees) restricts the grid around the
    previous frame's angle when set.
    """

    def __init__(self, backend: Optional[EstimatorBackend] = None,
                 step: float = 10.0, w: float = 0.8, top_k: int = 5,
                 distance_threshold: float = 500.0,
                 confidence_floor: float = 0.05, exclude_head: bool = True,
                 distance_normalization: str = "scaled_to_full",
                 angle_window: Optional[float] = None, coasting: bool = True,
                 parallelism: int = 1, keep_going: bool = False,
                 output_dir: Optional[Union[str, Path]] = None):
        self.backend = backend
        self.step = step
        self.w = w
        self.top_k = top_k
        self.distance_threshold = distance_threshold
        self.confidence_floor = confidence_floor
        self.exclude_head = exclude_head
        self.distance_normalization = distance_normalization
        self.angle_window = angle_window
        self.coasting = coasting
        self.parallelism = parallelism
        self.keep_going = keep_going
        self.output_dir = output_dir

    def fit(self, X=None, y=None):
        """Validate parameters and freeze the run configuration."""
        if self.backend is None or not isinstance(self.backend, EstimatorBackend):
            raise ConfigError("backend must be an EstimatorBackend instance")
        step = check_step(self.step)
        selector = SelectorConfig(
            top_k=check_top_k(self.top_k),
            distance_threshold=check_threshold(self.distance_threshold),
            exclude_head=bool(self.exclude_head),
            confidence_floor=check_floor(self.confidence_floor),
            distance_normalization=self.distance_normalization,
        )
        self.config_ = PipelineConfig(
            step=step,
            w=check_weight(self.w),
            coasting=bool(self.coasting),
            angle_window=check_window(self.angle_window, step),
            selector=selector,
            parallelism=check_parallelism(self.parallelism),
            keep_going=bool(self.keep_going),
        )
        self.backend_ = self.backend
        return self

    def _check_fitted(self):
        if not hasattr(self, "config_"):
            raise NotFittedError(
                "this RotationAugmentedPoseEstimator is not fitted yet; "
                "call fit before transform/predict"
            )

    def transform(self, X) -> np.ndarray:
        """Run the pipeline; rows are frames, columns the flat wire layout."""
        self._check_fitted()
        frames = coerce_frames(X)
        out_dir = Path(self.output_dir) if self.output_dir is not None else None
        self.results_ = run_sequence(frames, self.backend_, self.config_,
                                     output_dir=out_dir)
        return np.stack([
            np.asarray(r.reconstructed_pose.flat()) for r in self.results_
        ])

    def predict(self, X) -> np.ndarray:
        """Like transform, shaped (n_frames, n_joints, 3)."""
        flat = self.transform(X)
        return flat.reshape(len(flat), -1, 3)

    def results(self) -> Sequence[FrameResult]:
        self._check_fitted()
        if not hasattr(self, "results_"):
            raise NotFittedError("no run has been executed yet; call transform")
        return self.results_
