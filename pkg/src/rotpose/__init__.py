"""Rotation test-time augmentation for 2D pose estimation.

Run a keypoint estimator over many rotations of each frame, map the
predictions back, keep the most temporally consistent one, and smooth the
result into a trajectory.  ``RotationAugmentedPoseEstimator`` is the
high-level entry point; the submodules expose the functional pieces.
"""

from .errors import (
    BackendError,
    BackendTimeoutError,
    ConfigError,
    FrameProcessingError,
    GenerationError,
    NoCandidateError,
    ProtocolError,
    RotposeError,
    SchemaError,
    WireFormatError,
)
from .skeleton import (
    BODY_25,
    Keypoint,
    Pose,
    SkeletonSchema,
    mean_confidence,
)
from .geometry import (
    AngleGrid,
    RotationSpec,
    circular_distance,
    forward_map,
    inverse_map,
    rotate_pose,
    rotate_raster,
    unrotate_pose,
    wrap_degrees,
)
from .frames import Frame, frames_from_dir
from .estimator import (
    EstimatorBackend,
    ExternalBackend,
    SyntheticBackend,
    SyntheticEstimatorModel,
    parse_wire_poses,
    serialize_wire_poses,
)
from .selector import (
    RotationCandidate,
    SelectorConfig,
    pose_distance,
    select_first_frame,
    select_frame,
)
from .reconstructor import ReconstructionState, reconstruct
from .pipeline import (
    FrameResult,
    PipelineConfig,
    angle_set_for_frame,
    process_frame,
    run_sequence,
)
from .benchmark import (
    EvalReport,
    MotionScript,
    cartwheel,
    circular_correlation,
    custom_keyframes,
    evaluate,
    generate_sequence,
    handstand_hold,
    upright_walk,
)

__version__ = "0.1.0"

__all__ = [
    "AngleGrid",
    "BODY_25",
    "BackendError",
    "BackendTimeoutError",
    "ConfigError",
    "EstimatorBackend",
    "EvalReport",
    "ExternalBackend",
    "Frame",
    "FrameProcessingError",
    "FrameResult",
    "GenerationError",
    "Keypoint",
    "MotionScript",
    "NoCandidateError",
    "PipelineConfig",
    "Pose",
    "ProtocolError",
    "ReconstructionState",
    "RotationAugmentedPoseEstimator",
    "RotationCandidate",
    "RotationSpec",
    "RotposeError",
    "SchemaError",
    "SelectorConfig",
    "SkeletonSchema",
    "SyntheticBackend",
    "SyntheticEstimatorModel",
    "WireFormatError",
    "angle_set_for_frame",
    "cartwheel",
    "circular_correlation",
    "circular_distance",
    "custom_keyframes",
    "evaluate",
    "forward_map",
    "frames_from_dir",
    "generate_sequence",
    "handstand_hold",
    "inverse_map",
    "mean_confidence",
    "parse_wire_poses",
    "pose_distance",
    "process_frame",
    "reconstruct",
    "rotate_pose",
    "rotate_raster",
    "run_sequence",
    "select_first_frame",
    "select_frame",
    "serialize_wire_poses",
    "unrotate_pose",
    "upright_walk",
    "wrap_degrees",
]


def __getattr__(name):
    # keep scikit-learn out of import time unless the facade is wanted
    if name == "RotationAugmentedPoseEstimator":
        from .augmenter import RotationAugmentedPoseEstimator

        return RotationAugmentedPoseEstimator
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
