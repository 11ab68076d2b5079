import numpy as np
import pytest

from teleopkit.geometry import (
    Pose,
    quat_from_axis_angle,
    quat_multiply,
    quat_normalize,
    quat_rotate,
    quat_to_matrix,
)

from oracles import mat_from_quat, rodrigues


def random_quat(rng):
    return quat_normalize(rng.normal(size=4))


def test_quat_rotate_matches_matrix(rng):
    for _ in range(200):
        q = random_quat(rng)
        v = rng.normal(size=3)
        np.testing.assert_allclose(quat_rotate(q, v), quat_to_matrix(q) @ v, atol=1e-12)


def test_quat_multiply_matches_matrix_product(rng):
    for _ in range(200):
        a, b = random_quat(rng), random_quat(rng)
        np.testing.assert_allclose(
            quat_to_matrix(quat_multiply(a, b)),
            quat_to_matrix(a) @ quat_to_matrix(b),
            atol=1e-12,
        )


def test_axis_angle_matches_rodrigues(rng):
    for _ in range(100):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = rng.uniform(-np.pi, np.pi)
        np.testing.assert_allclose(
            quat_to_matrix(quat_from_axis_angle(axis, angle)), rodrigues(axis, angle), atol=1e-12
        )


def test_pose_normalizes_quaternion():
    p = Pose(np.zeros(3), np.array([2.0, 0, 0, 0]))
    assert abs(np.linalg.norm(p.orientation) - 1.0) <= 1e-9


def test_pose_rejects_degenerate_quaternion():
    with pytest.raises(ValueError):
        Pose(np.zeros(3), np.zeros(4))


def test_pose_rejects_nonfinite_position():
    with pytest.raises(ValueError):
        Pose(np.array([np.nan, 0, 0]), np.array([1.0, 0, 0, 0]))


def test_compose_norm_invariant(rng):
    a = Pose(rng.normal(size=3), random_quat(rng))
    b = Pose(rng.normal(size=3), random_quat(rng))
    for _ in range(50):
        a = a.compose(b)
        assert abs(np.linalg.norm(a.orientation) - 1.0) <= 1e-9


def test_compose_matches_matrix_composition(rng):
    for _ in range(100):
        a = Pose(rng.normal(size=3), random_quat(rng))
        b = Pose(rng.normal(size=3), random_quat(rng))
        c = a.compose(b)
        Ta = np.eye(4)
        Ta[:3, :3] = mat_from_quat(a.orientation)
        Ta[:3, 3] = a.position
        Tb = np.eye(4)
        Tb[:3, :3] = mat_from_quat(b.orientation)
        Tb[:3, 3] = b.position
        Tc = Ta @ Tb
        np.testing.assert_allclose(c.position, Tc[:3, 3], atol=1e-12)
        np.testing.assert_allclose(mat_from_quat(c.orientation), Tc[:3, :3], atol=1e-12)


def test_from_axis_angle_zero_angle_ignores_axis():
    p = Pose.from_axis_angle([1, 2, 3], [5, 5, 5], 0.0)
    np.testing.assert_array_equal(p.orientation, [1, 0, 0, 0])


def test_from_axis_angle_rejects_non_unit_axis():
    with pytest.raises(ValueError):
        Pose.from_axis_angle([0, 0, 0], [0, 0, 2], 0.5)


def test_poses_are_immutable():
    p = Pose.identity()
    with pytest.raises(ValueError):
        p.position[0] = 1.0
