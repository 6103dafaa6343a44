import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geodock.errors import ContractError
from geodock.geometry import (
    Rotation,
    apply_rotation_about_centroid,
    axis_angle_matrix,
    centroid,
    enumerate_rotations,
    pairwise_distances,
    rotate_about_axis,
    transform,
)

coord = st.floats(-50, 50, allow_nan=False)
point_sets = arrays(np.float64, st.tuples(st.integers(1, 12), st.just(3)), elements=coord)
angles = st.floats(-10, 10, allow_nan=False)


@st.composite
def unit_axes(draw):
    v = np.array(draw(st.tuples(coord, coord, coord)))
    n = np.linalg.norm(v)
    if n < 1e-3:
        v, n = np.array([0.0, 0.0, 1.0]), 1.0
    return v / n


def test_quarter_turn_about_z():
    out = rotate_about_axis([[1.0, 0.0, 0.0]], [0, 0, 0], [0, 0, 1], math.pi / 2)
    assert np.allclose(out, [[0.0, 1.0, 0.0]], atol=1e-12)


def test_zero_angle_is_bitwise_identity():
    pts = np.array([[0.1, 0.2, 0.3], [4.0, -5.0, 6.5]])
    out = rotate_about_axis(pts, [1, 1, 1], [0, 1, 0], 0.0)
    assert out.tobytes() == pts.tobytes()


def test_half_turn_about_z():
    out = rotate_about_axis([[1.0, 1.0, 0.0]], [0, 0, 0], [0, 0, 1], math.pi)
    assert np.allclose(out, [[-1.0, -1.0, 0.0]], atol=1e-12)


def test_rotation_about_offset_origin_keeps_origin_fixed():
    out = rotate_about_axis([[2.0, 0.0, 0.0], [1.0, 0.0, 0.0]], [1, 0, 0], [0, 0, 1], math.pi / 2)
    assert np.allclose(out, [[1.0, 1.0, 0.0], [1.0, 0.0, 0.0]], atol=1e-12)


def test_non_unit_axis_rejected():
    with pytest.raises(ContractError):
        rotate_about_axis([[1.0, 0.0, 0.0]], [0, 0, 0], [0, 0, 2], 1.0)


@given(point_sets, unit_axes(), angles, st.tuples(coord, coord, coord))
def test_axis_rotation_is_an_isometry(pts, axis, angle, origin):
    out = rotate_about_axis(pts, origin, axis, angle)
    assert np.allclose(pairwise_distances(out), pairwise_distances(pts), atol=1e-9)


@given(point_sets, unit_axes(), angles)
def test_rotation_then_inverse_restores(pts, axis, angle):
    back = rotate_about_axis(rotate_about_axis(pts, [0, 0, 0], axis, angle), [0, 0, 0], axis, -angle)
    assert np.allclose(back, pts, atol=1e-9)


@given(unit_axes(), angles)
def test_matrix_is_orthonormal(axis, angle):
    m = axis_angle_matrix(axis, angle)
    assert np.allclose(m @ m.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-12)


@given(unit_axes(), angles)
def test_quaternion_matches_rodrigues(axis, angle):
    q = Rotation.from_axis_angle(axis, angle)
    assert np.allclose(q.matrix(), axis_angle_matrix(axis, angle), atol=1e-12)


@given(unit_axes(), angles, unit_axes(), angles)
def test_quaternion_composition_and_inverse(a1, t1, a2, t2):
    q1 = Rotation.from_axis_angle(a1, t1)
    q2 = Rotation.from_axis_angle(a2, t2)
    assert np.allclose((q1 * q2).matrix(), q1.matrix() @ q2.matrix(), atol=1e-12)
    assert np.allclose((q1 * q1.inverse()).matrix(), np.eye(3), atol=1e-12)


def test_rotation_requires_unit_quaternion():
    with pytest.raises(ContractError):
        Rotation(1.0, 1.0, 0.0, 0.0)


def test_grid_sizes_and_identity_first():
    assert len(enumerate_rotations((1, 1, 1))) == 1
    assert np.array_equal(enumerate_rotations((1, 1, 1)).matrices[0], np.eye(3))
    g = enumerate_rotations((4, 4, 4))
    assert len(g) == 64
    assert np.allclose(g.matrices[0], np.eye(3), atol=0)


def test_grid_rejects_nonpositive_steps():
    with pytest.raises(ContractError):
        enumerate_rotations((0, 4, 4))


def test_default_grid_covers_many_directions():
    g = enumerate_rotations((16, 16, 8))
    assert len(g) == 2048
    images = g.matrices @ np.array([1.0, 0.0, 0.0])
    distinct = {tuple(np.round(v, 6)) for v in images}
    assert len(distinct) >= 500


def test_grid_matrices_match_rotation_objects():
    g = enumerate_rotations((3, 4, 2))
    for k in range(len(g)):
        assert np.allclose(g[k].matrix(), g.matrices[k], atol=1e-14)
        assert np.allclose(g.matrices[k] @ g.matrices[k].T, np.eye(3), atol=1e-12)


@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 6))
def test_grid_is_deterministic(a, b, c):
    g1 = enumerate_rotations((a, b, c))
    g2 = enumerate_rotations((a, b, c))
    assert len(g1) == a * b * c
    assert g1.matrices.tobytes() == g2.matrices.tobytes()
    assert g1.steps == (a, b, c)


def test_centroid_rotation_single_point_unchanged():
    out = apply_rotation_about_centroid([[3.0, -1.0, 2.0]], Rotation.from_axis_angle([0, 0, 1], 1.1))
    assert np.allclose(out, [[3.0, -1.0, 2.0]], atol=1e-12)


def test_centroid_rotation_pair():
    out = apply_rotation_about_centroid([[1.0, 0, 0], [-1.0, 0, 0]],
                                        Rotation.from_axis_angle([0, 0, 1], math.pi / 2))
    assert np.allclose(out, [[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]], atol=1e-12)


def test_centroid_rotation_empty_rejected():
    with pytest.raises(ContractError):
        apply_rotation_about_centroid(np.zeros((0, 3)), np.eye(3))


def test_centroid_rotation_ten_points():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(10, 3))
    out = apply_rotation_about_centroid(pts, Rotation.from_euler_zyz(0.3, 1.2, -2.0))
    assert np.allclose(pairwise_distances(out), pairwise_distances(pts), atol=1e-9)
    assert np.allclose(centroid(out), centroid(pts), atol=1e-12)


@given(point_sets, unit_axes(), angles)
def test_centroid_rotation_preserves_shape_and_centroid(pts, axis, angle):
    out = apply_rotation_about_centroid(pts, Rotation.from_axis_angle(axis, angle))
    assert np.allclose(pairwise_distances(out), pairwise_distances(pts), atol=1e-9)
    assert np.allclose(centroid(out), centroid(pts), atol=1e-9)


def test_stacked_transform_matches_single():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(7, 3))
    mats = enumerate_rotations((3, 3, 3)).matrices
    c = centroid(pts)
    stack = transform(pts, mats, c, c)
    for k, m in enumerate(mats):
        assert stack[k].tobytes() == transform(pts, m, c, c).tobytes()
