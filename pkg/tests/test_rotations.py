import numpy as np
from numpy.testing import assert_allclose

from qframes.rotations import align_z, fibonacci_sphere, from_euler, from_quaternion, rot_z, so3_grid, to_quaternion


def test_fibonacci_sphere_unit_and_balanced():
    u = fibonacci_sphere(100)
    assert_allclose(np.linalg.norm(u, axis=1), 1, atol=1e-15)
    assert np.linalg.norm(u.mean(axis=0)) < 0.02


def test_align_z():
    for u in [[0, 0, 1], [0, 0, -1], [1, 2, 3], [-1, 0, 0]]:
        r = align_z(u)
        assert_allclose(r @ [0, 0, 1], np.array(u) / np.linalg.norm(u), atol=1e-15)
        assert_allclose(r.T @ r, np.eye(3), atol=1e-15)
        assert abs(np.linalg.det(r) - 1) < 1e-14


def test_grid_is_rotations_and_distinct():
    g = so3_grid(100, 10)
    assert g.shape == (1000, 3, 3)
    assert np.max(np.abs(np.einsum("nji,njk->nik", g, g) - np.eye(3))) < 1e-14
    q = np.array([to_quaternion(r) for r in g])
    assert len(np.unique(np.round(q, 9), axis=0)) == 1000
    assert_allclose(g, so3_grid(100, 10), atol=0)


def test_quaternion_round_trip():
    r = from_euler([0.3, 1.1, -0.4])
    q = to_quaternion(r)
    assert q[0] >= 0
    assert_allclose(from_quaternion(q), r, atol=1e-15)
    assert_allclose(from_quaternion([1, 0, 0, 0]), np.eye(3))
    assert_allclose(from_euler([0.7, 0, 0]), rot_z(0.7), atol=1e-15)
