import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sjdbench import Quaternion, ValidationError, lerp, slerp
from sjdbench.geometry import quats_to_matrices, slerp_many


def quat_strategy():
    component = st.floats(-1.0, 1.0, allow_nan=False)
    return st.tuples(component, component, component, component).filter(
        lambda q: sum(c * c for c in q) > 1e-4
    ).map(lambda q: Quaternion(*q))


class TestQuaternion:
    def test_construction_normalizes_and_canonicalizes(self):
        q = Quaternion(-2.0, 0.0, 2.0, 0.0)
        assert q.w == pytest.approx(math.sqrt(0.5))
        assert q.y == pytest.approx(-math.sqrt(0.5))
        assert q.norm() == pytest.approx(1.0, abs=1e-12)

    def test_zero_norm_rejected(self):
        with pytest.raises(ValidationError):
            Quaternion(0.0, 0.0, 0.0, 0.0)

    def test_double_cover_equality(self):
        q = Quaternion.from_axis_angle([0.2, 0.5, 0.8], 1.1)
        neg = Quaternion(-q.w, -q.x, -q.y, -q.z)
        assert q.approx_equal(neg, 1e-15)

    def test_rotate_matches_matrix(self):
        q = Quaternion.from_axis_angle([1.0, -2.0, 0.5], 0.77)
        v = np.array([0.3, -1.2, 2.0])
        assert np.allclose(q.rotate(v), q.to_matrix() @ v)

    def test_multiply_composes_rotations(self):
        qa = Quaternion.from_axis_angle([0, 0, 1], 0.4)
        qb = Quaternion.from_axis_angle([0, 1, 0], 0.9)
        v = np.array([1.0, 2.0, 3.0])
        assert np.allclose((qa * qb).rotate(v), qa.rotate(qb.rotate(v)), atol=1e-12)

    @given(quat_strategy())
    @settings(max_examples=50, deadline=None)
    def test_always_unit_and_canonical(self, q):
        assert abs(q.norm() - 1.0) < 1e-9
        assert q.w >= 0.0


class TestLerp:
    def test_endpoint_identity(self):
        assert np.allclose(lerp((0, 0, 0), (1, 2, 3), 0.0), (0, 0, 0))
        assert np.array_equal(lerp((0, 0, 0), (1, 2, 3), 1.0), np.array([1.0, 2.0, 3.0]))

    def test_midpoint(self):
        assert np.allclose(lerp((0, 0, 0), (2, 4, 6), 0.5), (1, 2, 3))

    def test_out_of_range_t_rejected(self):
        with pytest.raises(ValidationError):
            lerp((0, 0, 0), (1, 1, 1), 1.5)
        with pytest.raises(ValidationError):
            lerp((0, 0, 0), (1, 1, 1), -0.1)

    @given(st.floats(0.0, 1.0))
    @settings(max_examples=50, deadline=None)
    def test_affine_symmetry(self, t):
        a = np.array([0.5, -1.0, 2.0])
        b = np.array([3.0, 0.25, -4.0])
        assert np.allclose(lerp(a, b, t), lerp(b, a, 1.0 - t), atol=1e-12)


class TestSlerp:
    def test_identical_endpoints(self):
        q = Quaternion.from_axis_angle([1, 1, 0], 0.6)
        assert slerp(q, q, 0.7).approx_equal(q, 1e-12)

    def test_halfway_90_degrees_about_z(self):
        # closed-form axis-angle oracle: cos/sin of 22.5 degrees
        mid = slerp(Quaternion.identity(),
                    Quaternion.from_axis_angle([0, 0, 1], math.pi / 2), 0.5)
        assert mid.w == pytest.approx(math.cos(math.pi / 8), abs=1e-12)
        assert mid.z == pytest.approx(math.sin(math.pi / 8), abs=1e-12)
        assert mid.x == mid.y == pytest.approx(0.0, abs=1e-15)

    def test_shorter_arc_with_negated_endpoint(self):
        # endpoints q0 and -(q0 * r) are 10 degrees apart on the quaternion
        # double cover; the midpoint must be 5 degrees about x relative to q0
        q0 = Quaternion.from_axis_angle([0, 1, 0], 0.7)
        r = Quaternion.from_axis_angle([1, 0, 0], math.radians(10))
        q1 = q0 * r
        q1_neg = Quaternion(-q1.w, -q1.x, -q1.y, -q1.z)
        rel = q0.conjugate() * slerp(q0, q1_neg, 0.5)
        expected = Quaternion.from_axis_angle([1, 0, 0], math.radians(5))
        assert rel.approx_equal(expected, 1e-9)

    def test_unit_norm_along_the_arc(self):
        q0 = Quaternion.from_axis_angle([1, 2, 3], 0.9)
        q1 = Quaternion.from_axis_angle([-1, 0.5, 2], 2.2)
        for t in np.linspace(0.0, 1.0, 11):
            assert abs(slerp(q0, q1, float(t)).norm() - 1.0) < 1e-9

    def test_constant_angular_velocity(self):
        q0 = Quaternion.identity()
        q1 = Quaternion.from_axis_angle([0.3, -0.2, 1.0], 1.8)
        delta = 0.125
        steps = [slerp(q0, q1, t).angle_to(slerp(q0, q1, t + delta))
                 for t in np.arange(0.0, 1.0 - delta + 1e-12, delta)]
        assert max(steps) - min(steps) < 1e-6

    def test_double_cover_invariance(self):
        q0 = Quaternion.from_axis_angle([1, 0, 1], 0.5)
        q1 = Quaternion.from_axis_angle([0, 1, 0], 1.4)
        q1_neg = Quaternion(-q1.w, -q1.x, -q1.y, -q1.z)
        for t in (0.0, 0.25, 0.5, 0.9, 1.0):
            assert slerp(q0, q1, t).approx_equal(slerp(q0, q1_neg, t), 1e-12)

    def test_near_identical_falls_back_to_lerp(self):
        q0 = Quaternion.from_axis_angle([0, 0, 1], 1.0)
        q1 = Quaternion.from_axis_angle([0, 0, 1], 1.0 + 1e-9)
        out = slerp(q0, q1, 0.5)
        assert abs(out.norm() - 1.0) < 1e-12
        assert out.angle_to(q0) < 1e-8

    def test_out_of_range_t_rejected(self):
        q = Quaternion.identity()
        with pytest.raises(ValidationError):
            slerp(q, q, 1.2)


class TestVectorized:
    def test_slerp_many_matches_scalar(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a = Quaternion(*rng.normal(size=4))
            b = Quaternion(*rng.normal(size=4))
            t = float(rng.uniform())
            got = slerp_many(a.as_array()[None, :], b.as_array()[None, :],
                             np.array([t]))[0]
            want = slerp(a, b, t).as_array()
            assert np.allclose(got, want, atol=1e-12)

    def test_quats_to_matrices_matches_scalar(self):
        rng = np.random.default_rng(4)
        qs = [Quaternion(*rng.normal(size=4)) for _ in range(20)]
        batch = quats_to_matrices(np.stack([q.as_array() for q in qs]))
        for q, m in zip(qs, batch):
            assert np.allclose(m, q.to_matrix(), atol=1e-12)
