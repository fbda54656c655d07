import json

import numpy as np
import pytest

from rotpose.errors import SchemaError
from rotpose.skeleton import (
    BODY_25,
    Keypoint,
    Pose,
    SkeletonSchema,
    mean_confidence,
    valid_joint_mask,
)

from conftest import flat_schema, make_pose


class TestSkeletonSchema:
    def test_body25_layout(self):
        assert BODY_25.joint_count == 25
        assert len(set(BODY_25.joint_names)) == 25
        head_names = {BODY_25.joint_names[i] for i in BODY_25.head_joints}
        assert head_names == {"Nose", "REye", "LEye", "REar", "LEar"}

    def test_index_lookup(self):
        assert BODY_25.index("Neck") == 1
        assert BODY_25.index("MidHip") == 8
        with pytest.raises(ValueError):
            BODY_25.index("Tail")

    def test_duplicate_names_rejected(self):
        with pytest.raises(SchemaError):
            SkeletonSchema("bad", ("a", "a"), frozenset())

    def test_head_indices_out_of_range_rejected(self):
        with pytest.raises(SchemaError):
            SkeletonSchema("bad", ("a", "b"), frozenset({5}))

    def test_all_head_rejected(self):
        with pytest.raises(SchemaError):
            SkeletonSchema("bad", ("a", "b"), frozenset({0, 1}))

    def test_dict_round_trip(self):
        doc = BODY_25.to_dict()
        assert set(doc) == {"name", "joints", "head_joints"}
        again = SkeletonSchema.from_dict(doc)
        assert again == BODY_25

    def test_from_json(self, tmp_path):
        path = tmp_path / "schema.json"
        path.write_text(json.dumps(
            {"name": "mini", "joints": ["a", "b", "c"], "head_joints": [0]}
        ))
        schema = SkeletonSchema.from_json(path)
        assert schema.joint_count == 3
        assert schema.head_joints == frozenset({0})

    def test_head_mask(self):
        mask = BODY_25.head_mask()
        assert mask.sum() == 5
        assert mask[0] and mask[15] and mask[16] and mask[17] and mask[18]


class TestPose:
    def test_shape_enforced(self, two_joint_schema):
        with pytest.raises(SchemaError):
            Pose.original(two_joint_schema, np.zeros((3, 3)))

    def test_keypoints_read_only(self, two_joint_schema):
        pose = make_pose(two_joint_schema, [(0, 0), (1, 1)])
        with pytest.raises(ValueError):
            pose.keypoints[0, 0] = 5.0

    def test_detected_mask(self, four_joint_schema):
        pose = make_pose(four_joint_schema, np.zeros((4, 2)), [0.9, 0.0, 0.1, 0.0])
        assert list(pose.detected_mask) == [True, False, True, False]

    def test_keypoint_accessor(self, two_joint_schema):
        pose = make_pose(two_joint_schema, [(3, 4), (0, 0)], [0.5, 0.0])
        kp = pose.keypoint(0)
        assert kp == Keypoint(3.0, 4.0, 0.5)
        assert kp.detected
        assert not pose.keypoint(1).detected

    def test_flat_layout(self, two_joint_schema):
        pose = make_pose(two_joint_schema, [(1, 2), (3, 4)], [0.9, 0.8])
        assert pose.flat() == [1.0, 2.0, 0.9, 3.0, 4.0, 0.8]


class TestMeanConfidence:
    def test_constant_confidences(self):
        pose = make_pose(flat_schema(25), np.zeros((25, 2)), np.full(25, 0.6))
        assert mean_confidence(pose, floor=0.0) == pytest.approx(0.6)

    def test_all_zero_gives_zero(self):
        pose = make_pose(flat_schema(25), np.zeros((25, 2)), np.zeros(25))
        assert mean_confidence(pose, floor=0.0) == 0.0

    def test_hand_checked_mean(self, four_joint_schema):
        # independent scalar recomputation of the same mean
        confs = [0.9, 0.5, 0.0, 0.2]
        pose = make_pose(four_joint_schema, np.zeros((4, 2)), confs)
        expected = sum(c for c in confs if c > 0.1) / 3
        assert mean_confidence(pose, floor=0.1) == pytest.approx(expected)
        assert mean_confidence(pose, floor=0.1) == pytest.approx(1.6 / 3)

    def test_head_exclusion(self):
        schema = SkeletonSchema("h", ("head", "body"), frozenset({0}))
        pose = make_pose(schema, np.zeros((2, 2)), [1.0, 0.4])
        assert mean_confidence(pose, floor=0.0, exclude_head=True) == pytest.approx(0.4)
        assert mean_confidence(pose, floor=0.0, exclude_head=False) == pytest.approx(0.7)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(7)
        confs = rng.uniform(0, 1, size=10)
        schema = flat_schema(10)
        base = make_pose(schema, np.zeros((10, 2)), confs)
        perm = make_pose(schema, np.zeros((10, 2)), rng.permutation(confs))
        assert mean_confidence(base, floor=0.0) == pytest.approx(
            mean_confidence(perm, floor=0.0)
        )

    def test_range(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            confs = rng.uniform(0, 1, size=25)
            pose = make_pose(flat_schema(25), np.zeros((25, 2)), confs)
            value = mean_confidence(pose, floor=rng.uniform(0, 0.5))
            assert 0.0 <= value <= 1.0


class TestValidJointMask:
    def test_full_set(self):
        pose = make_pose(flat_schema(5), np.zeros((5, 2)), np.full(5, 0.5))
        assert valid_joint_mask(pose, floor=0.0) == set(range(5))

    def test_empty_set(self):
        pose = make_pose(flat_schema(5), np.zeros((5, 2)), np.zeros(5))
        assert valid_joint_mask(pose, floor=0.0) == set()

    def test_floor_cut(self, two_joint_schema):
        pose = make_pose(two_joint_schema, np.zeros((2, 2)), [0.05, 0.5])
        assert valid_joint_mask(pose, floor=0.1) == {1}

    def test_floor_monotone_shrinkage(self):
        rng = np.random.default_rng(3)
        pose = make_pose(flat_schema(25), np.zeros((25, 2)), rng.uniform(0, 1, 25))
        floors = sorted(rng.uniform(0, 1, size=10))
        masks = [valid_joint_mask(pose, floor=f) for f in floors]
        for small, large in zip(masks, masks[1:]):
            assert large <= small
