import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from voxact.action_codec import (
    ContinuousAction,
    DiscreteAction,
    QPrediction,
    discretize,
    encode_labels,
    num_rotation_bins,
    select_best_action,
    undiscretize,
)
from voxact.errors import InvalidInputError, OutOfBoundsError
from voxact.geometry import (
    angular_difference_deg,
    euler_xyz_from_quat,
    quat_from_euler_xyz,
    quat_geodesic_deg,
)

IDENTITY = np.array([0.0, 0.0, 0.0, 1.0])


def random_quat(rng):
    q = rng.standard_normal(4)
    return q / np.linalg.norm(q)


class TestDiscretize:
    def test_five_degree_bins(self):
        assert num_rotation_bins(5.0) == 72
        # 216 total rotation classes across the three axes
        assert 3 * num_rotation_bins(5.0) == 216

    def test_non_divisor_rejected(self):
        with pytest.raises(InvalidInputError):
            num_rotation_bins(7.0)

    def test_identity_orientation(self, unit_bounds):
        action = ContinuousAction(np.array([0.5, 0.5, 0.5]), IDENTITY, open=1, collide=0)
        d = discretize(action, unit_bounds, 5.0)
        assert d.rot_indices == (0, 0, 0)
        assert d.trans_index == (50, 50, 50)
        assert (d.open, d.collide) == (1, 0)

    def test_floor_rule_on_euler_angles(self, unit_bounds):
        quat = quat_from_euler_xyz([7.0, 0.0, 359.0])
        action = ContinuousAction(np.array([0.5, 0.5, 0.5]), quat, open=0, collide=1)
        d = discretize(action, unit_bounds, 5.0)
        assert d.rot_indices == (1, 0, 71)

    def test_outside_bounds_rejected(self, unit_bounds):
        action = ContinuousAction(np.array([1.5, 0.5, 0.5]), IDENTITY, open=1, collide=0)
        with pytest.raises(OutOfBoundsError):
            discretize(action, unit_bounds, 5.0)


class TestUndiscretize:
    def test_voxel_center(self, unit_bounds):
        d = DiscreteAction((0, 0, 0), (0, 0, 0), open=1, collide=0)
        action = undiscretize(d, unit_bounds, 5.0)
        np.testing.assert_allclose(action.position, [0.005, 0.005, 0.005])

    def test_bin_center(self, unit_bounds):
        d = DiscreteAction((0, 0, 0), (1, 0, 0), open=1, collide=0)
        action = undiscretize(d, unit_bounds, 5.0)
        angles = euler_xyz_from_quat(action.quaternion)
        assert angles[0] == pytest.approx(7.5, abs=1e-9)

    def test_round_trip_10k(self, unit_bounds):
        rng = np.random.default_rng(2024)
        edge = unit_bounds.edge_length
        for _ in range(10_000):
            action = ContinuousAction(
                rng.uniform(0.0, 1.0 - 1e-9, size=3),
                random_quat(rng),
                open=int(rng.integers(2)),
                collide=int(rng.integers(2)),
            )
            d = discretize(action, unit_bounds, 5.0)
            back = undiscretize(d, unit_bounds, 5.0)
            assert np.max(np.abs(back.position - action.position)) <= 0.5 * edge
            err = angular_difference_deg(
                euler_xyz_from_quat(action.quaternion), euler_xyz_from_quat(back.quaternion)
            )
            assert np.all(err <= 2.5 + 1e-9)
            assert (back.open, back.collide) == (action.open, action.collide)
            # exact idempotence on the image of discretize
            assert discretize(back, unit_bounds, 5.0) == d


class TestEncodeLabels:
    def test_paper_shapes(self, unit_bounds):
        d = DiscreteAction((3, 4, 5), (1, 2, 3), open=1, collide=0)
        labels = encode_labels(d, unit_bounds, 5.0)
        assert labels.y_trans.shape == (100, 100, 100)
        assert labels.y_rot.shape == (72, 3)
        assert labels.y_open.shape == (2,) and labels.y_collide.shape == (2,)
        assert labels.y_trans.sum() == 1.0
        np.testing.assert_array_equal(labels.y_rot.sum(axis=0), [1.0, 1.0, 1.0])
        assert labels.y_open.sum() == 1.0 and labels.y_collide.sum() == 1.0
        assert labels.y_trans[3, 4, 5] == 1.0

    def test_marks_argmax_of_q(self, small_bounds):
        rng = np.random.default_rng(8)
        q = QPrediction(
            q_trans=rng.standard_normal((8, 8, 8)),
            q_rot=rng.standard_normal((12, 3)),
            q_open=rng.standard_normal(2),
            q_collide=rng.standard_normal(2),
        )
        best = select_best_action(q)
        labels = encode_labels(best, small_bounds, 30.0)
        assert q.q_trans[labels.y_trans == 1.0][0] == q.q_trans.max()
        for axis in range(3):
            marked = q.q_rot[:, axis][labels.y_rot[:, axis] == 1.0][0]
            assert marked == q.q_rot[:, axis].max()


class TestSelectBestAction:
    def test_single_peak(self):
        q_trans = np.zeros((8, 8, 8))
        q_trans[3, 4, 5] = 5.0
        q = QPrediction(q_trans, np.zeros((12, 3)), np.zeros(2), np.zeros(2))
        assert select_best_action(q).trans_index == (3, 4, 5)

    def test_tie_break_lowest_flat_index(self):
        q = QPrediction(np.zeros((4, 4, 4)), np.zeros((12, 3)), np.zeros(2), np.zeros(2))
        best = select_best_action(q)
        assert best.trans_index == (0, 0, 0)
        assert best.rot_indices == (0, 0, 0)
        assert best.open == 0 and best.collide == 0

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            q = QPrediction(
                q_trans=rng.standard_normal((5, 6, 7)),
                q_rot=rng.standard_normal((12, 3)),
                q_open=rng.standard_normal(2),
                q_collide=rng.standard_normal(2),
            )
            best = select_best_action(q)
            # brute-force scan in plain loops
            top_val, top_idx = -np.inf, None
            for i in range(5):
                for j in range(6):
                    for k in range(7):
                        if q.q_trans[i, j, k] > top_val:
                            top_val, top_idx = q.q_trans[i, j, k], (i, j, k)
            assert best.trans_index == top_idx
            for axis in range(3):
                col = q.q_rot[:, axis]
                expect = max(range(12), key=lambda b: (col[b], -b))
                assert best.rot_indices[axis] == expect
            assert best.open == (0 if q.q_open[0] >= q.q_open[1] else 1)
            assert best.collide == (0 if q.q_collide[0] >= q.q_collide[1] else 1)

    def test_invariant_under_increasing_transform(self):
        rng = np.random.default_rng(5)
        q = QPrediction(
            rng.standard_normal((6, 6, 6)),
            rng.standard_normal((12, 3)),
            rng.standard_normal(2),
            rng.standard_normal(2),
        )
        base = select_best_action(q)
        for f in (lambda x: 3.0 * x + 1.0, np.exp, lambda x: x**3):
            mapped = QPrediction(f(q.q_trans), f(q.q_rot), f(q.q_open), f(q.q_collide))
            assert select_best_action(mapped) == base

    def test_non_finite_rejected(self):
        q_trans = np.zeros((4, 4, 4))
        q_trans[0, 0, 0] = np.nan
        q = QPrediction(q_trans, np.zeros((12, 3)), np.zeros(2), np.zeros(2))
        with pytest.raises(InvalidInputError):
            select_best_action(q)


class TestEulerConversion:
    def test_round_trip_preserves_orientation(self):
        rng = np.random.default_rng(31)
        for _ in range(2000):
            quat = random_quat(rng)
            angles = euler_xyz_from_quat(quat)
            back = quat_from_euler_xyz(angles)
            assert quat_geodesic_deg(quat, back) < 1e-6

    def test_matches_scipy_away_from_lock(self):
        rng = np.random.default_rng(17)
        for _ in range(500):
            quat = random_quat(rng)
            mine = euler_xyz_from_quat(quat)
            if abs((mine[1] % 180.0) - 90.0) < 1.0:
                continue
            ref = Rotation.from_quat(quat).as_euler("xyz", degrees=True) % 360.0
            np.testing.assert_allclose(mine, ref, atol=1e-8)

    def test_gimbal_lock_is_canonicalized(self):
        for pitch in (90.0, -90.0):
            quat = quat_from_euler_xyz([33.0, pitch, 10.0])
            angles = euler_xyz_from_quat(quat)
            assert angles[0] == 0.0  # roll folded away
            back = quat_from_euler_xyz(angles)
            assert quat_geodesic_deg(quat, back) < 1e-6

    def test_gimbal_lock_near_boundary_deterministic(self):
        quat_a = quat_from_euler_xyz([10.0, 90.0 - 1e-6, 20.0])
        quat_b = quat_from_euler_xyz([10.0, 90.0 - 1e-6, 20.0])
        np.testing.assert_array_equal(euler_xyz_from_quat(quat_a), euler_xyz_from_quat(quat_b))
