import numpy as np
import pytest

from sjdbench import (
    DynConfig,
    MotionSequence,
    PoseFrame,
    Quaternion,
    Skeleton,
    SmoFilter,
    SmoFilterConfig,
    ValidationError,
    dyn_preprocess,
    smo_filter_sequence,
    smoothness,
)
from sjdbench.filters import _zero_phase
from sjdbench.motion import sequences_approx_equal

from conftest import simple_sequence


def constant_sequence(n=30, rate=10.0, joints=2):
    sk = Skeleton.default(joints, tracked_effector=0)
    frames = [PoseFrame(i / rate, [1.0, 2.0, 1.0], Quaternion.identity(),
                        np.ones((joints, 3)), np.full(joints, 0.5))
              for i in range(n)]
    return MotionSequence(sk, frames, rate)


def add_noise(seq, sigma_pos, sigma_ang, seed):
    rng = np.random.default_rng(seed)
    j = seq.skeleton.joint_count
    frames = [PoseFrame(f.timestamp,
                        f.root_position + rng.normal(0, sigma_pos, 3),
                        f.root_orientation,
                        f.joint_positions + rng.normal(0, sigma_pos, (j, 3)),
                        f.joint_angles + rng.normal(0, sigma_ang, j))
              for f in seq.frames]
    return seq.with_frames(frames)


class TestSmoFilter:
    def test_constant_input_is_fixed_point(self):
        seq = constant_sequence()
        out = smo_filter_sequence(seq)
        assert sequences_approx_equal(seq, out, 1e-12)

    def test_spike_rejected(self):
        seq = constant_sequence()
        frames = list(seq.frames)
        f = frames[15]
        jp = f.joint_positions.copy()
        jp[1, 0] += 10.0
        frames[15] = PoseFrame(f.timestamp, f.root_position, f.root_orientation,
                               jp, f.joint_angles)
        spiked = seq.with_frames(frames)
        out = smo_filter_sequence(spiked)
        x = np.array([fr.joint_positions[1, 0] for fr in out.frames])
        assert np.abs(np.diff(x)).max() == 0.0

    def test_velocity_clamp_on_step(self):
        # 1 m step at 10 Hz with v_max 0.5 m/s: at most 0.05 m per frame
        sk = Skeleton.default(1, tracked_effector=0)
        frames = []
        for i in range(40):
            x = 0.0 if i < 5 else 1.0
            frames.append(PoseFrame(i / 10.0, [x, 0, 1], Quaternion.identity(),
                                    np.full((1, 3), x), np.zeros(1)))
        seq = MotionSequence(sk, frames, 10.0)
        cfg = SmoFilterConfig(v_max=0.5, outlier_k=50.0)
        out = smo_filter_sequence(seq, cfg)
        roots = np.array([f.root_position[0] for f in out.frames])
        assert np.abs(np.diff(roots)).max() <= 0.05 + 1e-12

    def test_angle_velocity_clamp(self):
        sk = Skeleton.default(1, tracked_effector=0)
        frames = [PoseFrame(i / 10.0, [0, 0, 1], Quaternion.identity(),
                            np.zeros((1, 3)),
                            np.array([0.0 if i < 5 else 3.0]))
                  for i in range(40)]
        seq = MotionSequence(sk, frames, 10.0)
        cfg = SmoFilterConfig(angle_v_max=2.0, outlier_k=100.0)
        out = smo_filter_sequence(seq, cfg)
        angs = np.array([f.joint_angles[0] for f in out.frames])
        assert np.abs(np.diff(angs)).max() <= 0.2 + 1e-12

    def test_causality_by_truncation(self, easy_song):
        full = smo_filter_sequence(easy_song)
        cut = 100
        truncated = easy_song.with_frames(easy_song.frames[:cut])
        part = smo_filter_sequence(truncated)
        assert sequences_approx_equal(full.with_frames(full.frames[:cut]),
                                      part, 1e-12)

    def test_jerk_reduction_on_noisy_input(self, easy_song):
        wins = 0
        for seed in range(20):
            noisy = add_noise(easy_song, 0.002, 0.002, seed)
            filt = smo_filter_sequence(noisy)
            if smoothness(filt)[0] < smoothness(noisy)[0]:
                wins += 1
        assert wins == 20

    def test_quaternions_stay_unit(self, easy_song):
        out = smo_filter_sequence(easy_song)
        assert max(abs(f.root_orientation.norm() - 1.0) for f in out.frames) < 1e-9

    def test_first_frame_passes_through(self):
        seq = constant_sequence()
        filt = SmoFilter()
        first = filt.step(seq.frames[0])
        assert first is seq.frames[0]

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            SmoFilterConfig(cutoff_hz=-1.0)
        with pytest.raises(ValidationError):
            SmoFilterConfig(outlier_window=2)


class TestDynPreprocess:
    def test_resample_count_and_spacing(self):
        seq = simple_sequence(n_frames=51, rate=5.0)  # 10 s at 5 Hz
        out = dyn_preprocess(seq, DynConfig(target_rate=30.0))
        assert abs(len(out) - 300) <= 1
        assert np.allclose(np.diff(out.times()), 1.0 / 30.0, atol=1e-12)
        assert out.nominal_rate == pytest.approx(30.0)

    def test_identity_on_uniform_input(self):
        seq = simple_sequence(n_frames=31, rate=30.0)
        out = dyn_preprocess(seq, DynConfig(target_rate=30.0, smoothing_halfwidth=0))
        assert sequences_approx_equal(seq, out, 1e-9)

    def test_linear_ramp_unchanged(self):
        # zero-phase smoothing passes linear trends; verified against the
        # direct forward-backward computation
        sk = Skeleton.default(1, tracked_effector=0)
        frames = [PoseFrame(t, [0.3 * t, -0.2 * t, 1.0], Quaternion.identity(),
                            np.full((1, 3), 0.1 * t), np.array([0.25 * t]))
                  for t in np.arange(0.0, 5.01, 0.2)]
        seq = MotionSequence(sk, frames, 5.0)
        out = dyn_preprocess(seq, DynConfig(target_rate=30.0, smoothing_halfwidth=2))
        for f in out.frames:
            assert f.root_position[0] == pytest.approx(0.3 * f.timestamp, abs=1e-6)
            assert f.joint_angles[0] == pytest.approx(0.25 * f.timestamp, abs=1e-6)

    def test_zero_phase_matches_direct_forward_backward(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=60)
        h = 2
        w = h + 1
        pad = w
        ext = np.concatenate([2 * x[0] - x[pad:0:-1], x, 2 * x[-1] - x[-2:-pad - 2:-1]])

        def causal(arr):
            out = np.empty_like(arr)
            for i in range(len(arr)):
                lo = max(0, i - w + 1)
                out[i] = arr[lo:i + 1].mean()
            return out

        direct = causal(causal(ext)[::-1])[::-1][pad:pad + len(x)]
        assert np.allclose(_zero_phase(x, h), direct, atol=1e-12)

    def test_timing_preserved(self, demo_songs):
        for song in demo_songs:
            out = dyn_preprocess(song)
            v_in = np.linalg.norm(np.diff(song.root_positions(), axis=0), axis=1)
            v_out = np.linalg.norm(np.diff(out.root_positions(), axis=0), axis=1)
            n = min(len(v_in), len(v_out))
            a = v_in[:n] - v_in[:n].mean()
            b = v_out[:n] - v_out[:n].mean()
            corr = np.correlate(a, b, mode="full")
            lag = int(np.argmax(corr)) - (n - 1)
            assert lag == 0

    def test_quaternions_stay_unit(self, easy_song):
        out = dyn_preprocess(easy_song)
        assert max(abs(f.root_orientation.norm() - 1.0) for f in out.frames) < 1e-9

    def test_minimal_two_frame_input(self):
        seq = simple_sequence(n_frames=2, rate=5.0)
        out = dyn_preprocess(seq, DynConfig(target_rate=30.0, smoothing_halfwidth=0))
        assert len(out) == 7  # 0.2 s span at 30 Hz
