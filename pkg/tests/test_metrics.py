import numpy as np
import pytest

from sjdbench import (
    DegenerateGeometryError,
    EmptyWindowError,
    FallCause,
    FallConfig,
    FallRecord,
    FrameMode,
    MotionSequence,
    PoseFrame,
    Quaternion,
    Skeleton,
    ValidationError,
    detect_fall,
    mpjpe,
    pa_mpjpe,
    smoothness,
    success_rate,
    umeyama_align,
)
from sjdbench.metrics import NO_FALL

from conftest import simple_sequence


def random_rotation(rng):
    u, _, vt = np.linalg.svd(rng.normal(size=(3, 3)))
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, 2] *= -1
        r = u @ vt
    return r


class TestUmeyama:
    def test_identity(self):
        pts = np.random.default_rng(0).normal(size=(10, 3))
        st = umeyama_align(pts, pts)
        assert st.scale == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(st.rotation, np.eye(3), atol=1e-12)
        assert np.allclose(st.translation, 0.0, atol=1e-12)

    def test_construct_and_recover(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(3, 51))
            src = rng.normal(size=(n, 3))
            rot = random_rotation(rng)
            scale = float(rng.uniform(0.5, 2.0))
            trans = rng.normal(size=3)
            tgt = scale * src @ rot.T + trans
            st = umeyama_align(src, tgt)
            assert abs(st.scale - scale) < 1e-8
            assert np.abs(st.rotation - rot).max() < 1e-8
            assert np.abs(st.translation - trans).max() < 1e-8
            assert np.abs(st.apply(src) - tgt).max() < 1e-8

    def test_known_rotation_scale_translation(self):
        src = np.random.default_rng(1).normal(size=(20, 3))
        rot = Quaternion.from_axis_angle([0, 0, 1], np.deg2rad(30)).to_matrix()
        tgt = 2.0 * src @ rot.T + np.array([1.0, 2.0, 3.0])
        st = umeyama_align(src, tgt)
        assert st.scale == pytest.approx(2.0, abs=1e-9)
        assert np.allclose(st.rotation, rot, atol=1e-9)
        assert np.allclose(st.translation, [1, 2, 3], atol=1e-9)

    def test_collinear_rejected(self):
        src = np.outer(np.arange(5.0), np.array([1.0, 2.0, 3.0]))
        with pytest.raises(DegenerateGeometryError):
            umeyama_align(src, src * 2.0)

    def test_too_few_points(self):
        with pytest.raises(ValidationError):
            umeyama_align(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_rotation_is_proper(self):
        rng = np.random.default_rng(5)
        src = rng.normal(size=(8, 3))
        tgt = src.copy()
        tgt[:, 2] *= -1  # a reflection; recovered transform must still be proper
        st = umeyama_align(src, tgt)
        assert np.linalg.det(st.rotation) == pytest.approx(1.0, abs=1e-9)


def offset_sequence(seq, world_offset):
    frames = [PoseFrame(f.timestamp, f.root_position, f.root_orientation,
                        f.joint_positions + world_offset, f.joint_angles)
              for f in seq.frames]
    return seq.with_frames(frames)


class TestMpjpe:
    def test_identity_zero(self, small_seq):
        assert mpjpe(small_seq, small_seq) == pytest.approx(0.0, abs=1e-9)

    def test_uniform_torso_frame_offset(self):
        rng = np.random.default_rng(2)
        q = Quaternion.from_axis_angle([0, 0, 1], 0.7)
        sk = Skeleton.default(4, tracked_effector=0)
        ref_frames, exec_frames = [], []
        for i in range(10):
            jp = rng.normal(size=(4, 3))
            rp = np.array([0.1 * i, 0.0, 1.0])
            ref_frames.append(PoseFrame(i / 10, rp, q, jp, np.zeros(4)))
            exec_frames.append(PoseFrame(i / 10, rp, q,
                                         jp + q.rotate([0.1, 0, 0]), np.zeros(4)))
        ref = MotionSequence(sk, ref_frames, 10.0)
        execution = MotionSequence(sk, exec_frames, 10.0)
        assert mpjpe(execution, ref) == pytest.approx(100.0, abs=1e-9)

    def test_active_all_split_around_fall(self):
        # first half perfect, second half offset 0.2 m: Active 0, All 100
        rng = np.random.default_rng(3)
        sk = Skeleton.default(3, tracked_effector=0)
        ref_frames, exec_frames = [], []
        for i in range(10):
            jp = rng.normal(size=(3, 3))
            f = PoseFrame(i / 10, [0, 0, 1], Quaternion.identity(), jp, np.zeros(3))
            ref_frames.append(f)
            off = np.array([0.2, 0, 0]) if i >= 5 else np.zeros(3)
            exec_frames.append(PoseFrame(f.timestamp, f.root_position,
                                         f.root_orientation, jp + off, np.zeros(3)))
        ref = MotionSequence(sk, ref_frames, 10.0)
        execution = MotionSequence(sk, exec_frames, 10.0)
        fall = FallRecord(True, 0.5, FallCause.ROOT_HEIGHT)
        assert mpjpe(execution, ref, FrameMode.ACTIVE, fall) == pytest.approx(0.0, abs=1e-9)
        assert mpjpe(execution, ref, FrameMode.ALL, fall) == pytest.approx(100.0, abs=1e-9)

    def test_active_equal_all_without_fall(self, small_seq):
        shifted = offset_sequence(small_seq, np.array([0.05, 0, 0]))
        a = mpjpe(shifted, small_seq, FrameMode.ACTIVE, NO_FALL)
        b = mpjpe(shifted, small_seq, FrameMode.ALL, NO_FALL)
        assert a == b

    def test_offset_scaling_monotone(self, small_seq):
        # scaling the offset by c > 1 scales the error by c
        e1 = mpjpe(offset_sequence(small_seq, np.array([0.1, 0, 0])), small_seq)
        e3 = mpjpe(offset_sequence(small_seq, np.array([0.3, 0, 0])), small_seq)
        assert e3 == pytest.approx(3 * e1, rel=1e-9)

    def test_fall_at_start_empty_window(self, small_seq):
        fall = FallRecord(True, 0.0, FallCause.ROOT_HEIGHT)
        with pytest.raises(EmptyWindowError):
            mpjpe(small_seq, small_seq, FrameMode.ACTIVE, fall)

    def test_skeleton_mismatch(self, small_seq):
        other = simple_sequence(joints=3)
        with pytest.raises(ValidationError):
            mpjpe(small_seq, other)


class TestPaMpjpe:
    def test_identity_zero(self, small_seq):
        assert pa_mpjpe(small_seq, small_seq) == pytest.approx(0.0, abs=1e-6)

    def test_similarity_invariance(self, easy_song):
        rot = Quaternion.from_axis_angle([0.3, 0.5, 1.0], 0.8).to_matrix()
        frames = [PoseFrame(f.timestamp, 1.3 * rot @ f.root_position + [1, 2, 3],
                            f.root_orientation,
                            1.3 * f.joint_positions @ rot.T + [1, 2, 3],
                            f.joint_angles)
                  for f in easy_song.frames]
        transformed = easy_song.with_frames(frames)
        assert pa_mpjpe(transformed, easy_song) == pytest.approx(0.0, abs=1e-6)
        base = pa_mpjpe(easy_song, transformed)
        assert base == pytest.approx(0.0, abs=1e-6)

    def test_alignment_never_hurts(self, small_seq):
        rng = np.random.default_rng(11)
        for _ in range(50):
            j = small_seq.skeleton.joint_count
            frames = [PoseFrame(f.timestamp, f.root_position, f.root_orientation,
                                f.joint_positions + rng.normal(0, 0.01, (j, 3)),
                                f.joint_angles)
                      for f in small_seq.frames]
            noisy = small_seq.with_frames(frames)
            assert pa_mpjpe(noisy, small_seq) <= \
                mpjpe(noisy, small_seq) + 1e-9

    def test_global_transform_invariance_of_value(self, small_seq):
        rng = np.random.default_rng(12)
        j = small_seq.skeleton.joint_count
        frames = [PoseFrame(f.timestamp, f.root_position, f.root_orientation,
                            f.joint_positions + rng.normal(0, 0.02, (j, 3)),
                            f.joint_angles)
                  for f in small_seq.frames]
        noisy = small_seq.with_frames(frames)
        base = pa_mpjpe(noisy, small_seq)
        rot = Quaternion.from_axis_angle([1, 1, 0], 0.5).to_matrix()
        moved = noisy.with_frames([
            PoseFrame(f.timestamp, f.root_position, f.root_orientation,
                      0.7 * f.joint_positions @ rot.T + [5, -2, 1], f.joint_angles)
            for f in noisy.frames
        ])
        assert abs(pa_mpjpe(moved, small_seq) - base) < 1e-6


class TestSmoothness:
    def test_constant_angles_zero(self):
        seq = simple_sequence(n_frames=20)
        frames = [PoseFrame(f.timestamp, f.root_position, f.root_orientation,
                            f.joint_positions, np.full(2, 0.3))
                  for f in seq.frames]
        jerk, acc = smoothness(seq.with_frames(frames))
        assert jerk == 0.0 and acc == 0.0

    def _poly_sequence(self, power, joints=3, n=40, dt=0.1):
        sk = Skeleton.default(joints, tracked_effector=0)
        frames = []
        for i in range(n):
            t = i * dt
            ang = np.zeros(joints)
            ang[0] = t**power
            frames.append(PoseFrame(t, [0, 0, 1], Quaternion.identity(),
                                    np.tile(np.eye(3)[:joints], 1).reshape(joints, 3),
                                    ang))
        return MotionSequence(sk, frames, 1 / dt)

    def test_quadratic_angle(self):
        # finite differences are exact on polynomials
        seq = self._poly_sequence(2)
        jerk, acc = smoothness(seq)
        assert acc == pytest.approx(2.0 / 3.0, abs=1e-9)
        assert jerk == pytest.approx(0.0, abs=1e-7)

    def test_cubic_angle(self):
        seq = self._poly_sequence(3)
        jerk, _ = smoothness(seq)
        assert jerk == pytest.approx(6.0 / 3.0, abs=1e-7)

    def test_too_few_frames(self):
        seq = simple_sequence(n_frames=3)
        with pytest.raises(ValidationError):
            smoothness(seq)

    def test_nonuniform_rejected(self):
        sk = Skeleton.default(1, tracked_effector=0)
        times = [0.0, 0.1, 0.25, 0.3, 0.4]
        frames = [PoseFrame(t, [0, 0, 1], Quaternion.identity(),
                            np.zeros((1, 3)), np.zeros(1)) for t in times]
        with pytest.raises(ValidationError):
            smoothness(MotionSequence(sk, frames, 10.0))

    def test_interpolation_smooths_vs_zero_order_hold(self, easy_song):
        from sjdbench import interpolate_span, resample_sequence

        times = np.arange(0.0, 10.0 + 1e-9, 0.2)
        kf = resample_sequence(easy_song, times, nominal_rate=5.0)
        lerped_frames = [kf.frames[0]]
        for a, b in zip(kf.frames, kf.frames[1:]):
            lerped_frames.extend(interpolate_span(a, b, 2))
        lerped = kf.with_frames(lerped_frames, nominal_rate=15.0)

        hold_frames = []
        for a, b in zip(kf.frames, kf.frames[1:]):
            for i in range(3):
                t = a.timestamp + i * (b.timestamp - a.timestamp) / 3
                hold_frames.append(PoseFrame(t, a.root_position, a.root_orientation,
                                             a.joint_positions, a.joint_angles))
        hold = kf.with_frames(hold_frames, nominal_rate=15.0)
        assert smoothness(lerped)[0] < smoothness(hold)[0]


class TestDetectFall:
    def _height_profile(self, heights, rate=10.0, nominal=0.75, tilt=None):
        sk = Skeleton.default(2, nominal_height=nominal, tracked_effector=0)
        frames = []
        for i, h in enumerate(heights):
            q = Quaternion.identity() if tilt is None or not tilt[i] else \
                Quaternion.from_axis_angle([1, 0, 0], np.deg2rad(80))
            frames.append(PoseFrame(i / rate, [0, 0, h], q, np.zeros((2, 3)),
                                    np.zeros(2)))
        return MotionSequence(sk, frames, rate)

    def test_standing_no_fall(self):
        seq = self._height_profile([0.75] * 20)
        assert detect_fall(seq) == NO_FALL

    def test_sustained_height_drop(self):
        heights = [0.75] * 30 + [0.2] * 30
        seq = self._height_profile(heights, nominal=0.75)
        rec = detect_fall(seq)
        assert rec.fell and rec.cause is FallCause.ROOT_HEIGHT
        assert rec.fall_time == pytest.approx(3.0 + 0.2, abs=1e-9)

    def test_brief_dip_ignored(self):
        heights = [0.75] * 30 + [0.2] * 1 + [0.75] * 30  # 0.1 s dip at 10 Hz
        seq = self._height_profile(heights)
        assert not detect_fall(seq).fell

    def test_tilt_fall(self):
        tilt = [False] * 30 + [True] * 30
        seq = self._height_profile([0.75] * 60, tilt=tilt)
        rec = detect_fall(seq)
        assert rec.fell and rec.cause is FallCause.ATTITUDE

    def test_thresholds_configurable(self):
        heights = [0.75] * 30 + [0.5] * 30
        seq = self._height_profile(heights, nominal=0.75)
        assert not detect_fall(seq).fell  # 0.5 is above 0.5*0.75
        strict = FallConfig(height_ratio=0.9)
        assert detect_fall(seq, cfg=strict).fell


class TestSuccessRate:
    def test_all_clean(self):
        assert success_rate([NO_FALL] * 3) == 100.0

    def test_12_of_15(self):
        falls = [FallRecord(True, 1.0, FallCause.ROOT_HEIGHT)] * 3 + [NO_FALL] * 12
        assert success_rate(falls) == pytest.approx(80.0)

    def test_all_fell(self):
        falls = [FallRecord(True, 1.0, FallCause.CONTROLLER_ABORT)] * 5
        assert success_rate(falls) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            success_rate([])

    def test_fall_record_invariant(self):
        with pytest.raises(ValidationError):
            FallRecord(True, None, FallCause.ROOT_HEIGHT)
        with pytest.raises(ValidationError):
            FallRecord(False, 2.0)
