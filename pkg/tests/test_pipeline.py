import numpy as np
import pytest

from sjdbench import (
    InterpolatorConfig,
    KeyframeBuffer,
    StaleFrameError,
    interpolate_span,
    push_keyframe,
    resample_sequence,
    run_pipeline,
)
from sjdbench.pipeline import _Mailbox, paced_file_source

from conftest import simple_sequence


def keyframes_5hz(duration=10.0):
    seq = simple_sequence(n_frames=int(duration * 10) + 1, rate=10.0)
    times = np.arange(0.0, duration + 1e-9, 0.2)
    return resample_sequence(seq, times, nominal_rate=5.0)


class TestKeyframeBuffer:
    def test_fill_then_shift(self):
        seq = simple_sequence(n_frames=3)
        buf = KeyframeBuffer()
        buf = push_keyframe(buf, seq.frames[0])
        assert buf.previous is None and buf.current is seq.frames[0]
        assert not buf.ready
        buf = push_keyframe(buf, seq.frames[1])
        assert buf.previous is seq.frames[0] and buf.current is seq.frames[1]
        assert buf.ready

    def test_stale_frame_rejected(self):
        seq = simple_sequence(n_frames=3)
        buf = push_keyframe(KeyframeBuffer(), seq.frames[1])
        with pytest.raises(StaleFrameError):
            push_keyframe(buf, seq.frames[0])
        with pytest.raises(StaleFrameError):
            push_keyframe(buf, seq.frames[1])


class TestInterpolateSpan:
    def test_n0_returns_right_endpoint(self):
        seq = simple_sequence(n_frames=2)
        out = interpolate_span(seq.frames[0], seq.frames[1], 0)
        assert len(out) == 1
        assert out[0].timestamp == seq.frames[1].timestamp
        assert np.allclose(out[0].root_position, seq.frames[1].root_position)

    def test_n1_midpoint(self):
        seq = simple_sequence(n_frames=2, rate=5.0)  # dt = 0.2
        f0, f1 = seq.frames
        out = interpolate_span(f0, f1, 1)
        assert len(out) == 2
        assert out[0].timestamp == pytest.approx(f0.timestamp + 0.1)
        assert np.allclose(out[0].root_position,
                           0.5 * (f0.root_position + f1.root_position))

    def test_last_frame_equals_right_endpoint(self):
        seq = simple_sequence(n_frames=2)
        f0, f1 = seq.frames
        for n in (0, 1, 2, 5):
            last = interpolate_span(f0, f1, n)[-1]
            assert abs(last.timestamp - f1.timestamp) < 1e-12
            assert np.abs(last.joint_positions - f1.joint_positions).max() < 1e-12
            assert last.root_orientation.approx_equal(f1.root_orientation, 1e-12)

    def test_timestamps_strictly_increasing(self):
        seq = simple_sequence(n_frames=2)
        out = interpolate_span(seq.frames[0], seq.frames[1], 4)
        ts = [f.timestamp for f in out]
        assert all(b > a for a, b in zip(ts, ts[1:]))


class TestRunPipeline:
    def test_rate_and_latency_5hz_n2(self):
        kf = keyframes_5hz(10.0)
        out = []
        stats = run_pipeline(kf.frames, out.append, InterpolatorConfig(n_intermediate=2))
        assert stats.frames_in == 51
        assert stats.frames_out == 150
        assert stats.output_rate_hz == pytest.approx(15.0, abs=1.0)
        assert stats.mean_latency_s == pytest.approx(0.2, abs=0.02)
        assert max(stats.latencies) - min(stats.latencies) < 1e-9

    def test_downsampling_reproduces_keyframes(self):
        kf = keyframes_5hz(4.0)
        out = []
        run_pipeline(kf.frames, out.append, InterpolatorConfig(n_intermediate=2))
        emitted = {round(f.timestamp, 9): f for f in out}
        for src in kf.frames[1:]:
            e = emitted[round(src.timestamp, 9)]
            assert np.abs(e.root_position - src.root_position).max() < 1e-9
            assert np.abs(e.joint_positions - src.joint_positions).max() < 1e-9
            assert np.abs(e.joint_angles - src.joint_angles).max() < 1e-9
            assert e.root_orientation.approx_equal(src.root_orientation, 1e-9)

    def test_output_count_and_monotonicity(self):
        kf = keyframes_5hz(4.0)
        for n in (0, 1, 2, 3):
            out = []
            stats = run_pipeline(kf.frames, out.append,
                                 InterpolatorConfig(n_intermediate=n))
            assert stats.frames_out == (len(kf) - 1) * (n + 1)
            ts = [f.timestamp for f in out]
            assert all(b > a for a, b in zip(ts, ts[1:]))

    def test_emitted_orientations_unit(self):
        kf = keyframes_5hz(2.0)
        out = []
        run_pipeline(kf.frames, out.append, InterpolatorConfig(n_intermediate=2))
        assert all(abs(f.root_orientation.norm() - 1.0) < 1e-9 for f in out)

    def test_single_keyframe_no_emission(self):
        kf = keyframes_5hz(2.0)
        out = []
        stats = run_pipeline(kf.frames[:1], out.append, InterpolatorConfig())
        assert out == [] and stats.frames_out == 0

    def test_stale_keyframes_dropped_and_counted(self):
        kf = keyframes_5hz(2.0)
        frames = [kf.frames[0], kf.frames[1], kf.frames[1], kf.frames[2]]
        out = []
        stats = run_pipeline(frames, out.append, InterpolatorConfig(n_intermediate=1))
        assert stats.stale_drops == 1
        assert stats.frames_out == 2 * 2

    def test_paced_mode_smoke(self):
        # short wall-clock run; generous tolerances, this is a timing test
        kf = keyframes_5hz(1.0)
        out = []
        stats = run_pipeline(paced_file_source(kf.frames), out.append,
                             InterpolatorConfig(n_intermediate=2), paced=True)
        assert stats.frames_out == (len(kf) - 1) * 3
        assert stats.mean_latency_s == pytest.approx(0.2, abs=0.08)


class TestMailbox:
    def test_newest_wins_and_counts_overwrites(self):
        seq = simple_sequence(n_frames=3)
        box = _Mailbox()
        box.put(seq.frames[0])
        box.put(seq.frames[1])
        assert box.overwrites == 1
        assert box.take() is seq.frames[1]

    def test_close_unblocks(self):
        box = _Mailbox()
        box.close()
        assert box.take() is None
