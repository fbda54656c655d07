"""Shared fixtures and small pose-construction helpers."""

from __future__ import annotations

import numpy as np
import pytest

from rotpose.skeleton import Pose, SkeletonSchema


def flat_schema(k: int, name: str = "flat") -> SkeletonSchema:
    """A k-joint schema with no head joints (every joint considered)."""
    return SkeletonSchema(
        name=name,
        joint_names=tuple(f"j{i}" for i in range(k)),
        head_joints=frozenset(),
    )


def make_pose(schema: SkeletonSchema, xy, conf=None) -> Pose:
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    if conf is None:
        conf = np.ones(len(xy))
    kp = np.concatenate([xy, np.asarray(conf, dtype=float).reshape(-1, 1)], axis=1)
    return Pose.original(schema, kp)


@pytest.fixture
def two_joint_schema() -> SkeletonSchema:
    return flat_schema(2, "two")


@pytest.fixture
def four_joint_schema() -> SkeletonSchema:
    return flat_schema(4, "four")
