"""The two input-conditioning paths: a causal streaming filter (smo) and an
offline 30 Hz resampler with zero-phase smoothing (dyn).

The streaming path runs per frame and never looks ahead: MAD-based outlier
rejection, then a first-order low-pass, then velocity clamps. The offline path
resamples the whole take onto a uniform grid and smooths it forward-backward,
so sharp transients keep their timing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError
from .geometry import Quaternion, slerp
from .motion import MotionSequence, PoseFrame, frames_from_arrays, resample_sequence


@dataclass
class SmoFilterConfig:
    cutoff_hz: float = 3.0
    outlier_window: int = 7
    outlier_k: float = 5.0
    v_max: float = 3.0          # m/s, per position channel group
    angle_v_max: float = 12.0   # rad/s

    def __post_init__(self):
        if self.cutoff_hz <= 0 or self.outlier_k <= 0 or self.v_max <= 0 \
                or self.angle_v_max <= 0:
            raise ValidationError("filter parameters must be positive")
        if self.outlier_window < 3:
            raise ValidationError("outlier_window must be >= 3")


@dataclass
class DynConfig:
    target_rate: float = 30.0
    smoothing_halfwidth: int = 2

    def __post_init__(self):
        if self.target_rate <= 0:
            raise ValidationError("target_rate must be positive")
        if self.smoothing_halfwidth < 0:
            raise ValidationError("smoothing_halfwidth must be >= 0")


def _alpha(cutoff_hz: float, dt: float) -> float:
    return 1.0 - math.exp(-2.0 * math.pi * cutoff_hz * dt)


class SmoFilter:
    """Causal per-stream filter state. One instance per stream; not shareable.

    Scalar channels are root position (3), flattened joint positions (3J) and
    joint angles (J); the root orientation is a single channel measured by
    geodesic angle. Innovation MADs are tracked over a trailing window; the
    rejection threshold is floored at the velocity-clamp displacement, so any
    step the clamp would allow is never discarded as an outlier.
    """

    def __init__(self, cfg: Optional[SmoFilterConfig] = None):
        self.cfg = cfg or SmoFilterConfig()
        self._prev: Optional[PoseFrame] = None
        self._pos_hist: Optional[np.ndarray] = None   # (window, 3 + 3J)
        self._ang_hist: Optional[np.ndarray] = None   # (window, J + 1)
        self._filled = 0

    def step(self, frame: PoseFrame) -> PoseFrame:
        cfg = self.cfg
        if self._prev is None:
            self._prev = frame  # first frame passes through and seeds the state
            j = frame.joint_count
            self._pos_hist = np.zeros((cfg.outlier_window, 3 + 3 * j))
            self._ang_hist = np.zeros((cfg.outlier_window, j + 1))
            self._filled = 0
            return frame

        prev = self._prev
        dt = frame.timestamp - prev.timestamp
        if dt <= 0:
            raise ValidationError("filter input timestamps must increase")

        pos_raw = np.concatenate([frame.root_position, frame.joint_positions.reshape(-1)])
        pos_prev = np.concatenate([prev.root_position, prev.joint_positions.reshape(-1)])
        ang_raw = frame.joint_angles
        ang_prev = prev.joint_angles
        quat_angle = prev.root_orientation.angle_to(frame.root_orientation)

        # 1. outlier rejection against rolling MAD of innovations
        pos_innov = pos_raw - pos_prev
        ang_innov = ang_raw - ang_prev
        if self._filled > 0:
            pos_mad = np.median(np.abs(self._pos_hist[: self._filled]), axis=0)
            ang_mad = np.median(np.abs(self._ang_hist[: self._filled]), axis=0)
        else:
            pos_mad = np.zeros_like(pos_raw)
            ang_mad = np.zeros(len(ang_raw) + 1)
        pos_thresh = np.maximum(cfg.outlier_k * pos_mad, cfg.v_max * dt)
        ang_thresh = np.maximum(cfg.outlier_k * ang_mad[:-1], cfg.angle_v_max * dt)
        quat_thresh = max(cfg.outlier_k * ang_mad[-1], cfg.angle_v_max * dt)

        pos_in = np.where(np.abs(pos_innov) > pos_thresh, pos_prev, pos_raw)
        ang_in = np.where(np.abs(ang_innov) > ang_thresh, ang_prev, ang_raw)
        quat_in = prev.root_orientation if quat_angle > quat_thresh \
            else frame.root_orientation

        slot = (self._filled if self._filled < cfg.outlier_window
                else self._filled % cfg.outlier_window)
        self._pos_hist[slot] = pos_innov
        self._ang_hist[slot, :-1] = ang_innov
        self._ang_hist[slot, -1] = quat_angle
        self._filled += 1

        # 2. first-order low-pass (orientation along the geodesic)
        a = _alpha(cfg.cutoff_hz, dt)
        pos_f = pos_prev + a * (pos_in - pos_prev)
        ang_f = ang_prev + a * (ang_in - ang_prev)
        quat_f = slerp(prev.root_orientation, quat_in, a)

        # 3. velocity clamps
        root_f = _clamp_step(pos_prev[:3], pos_f[:3], cfg.v_max * dt)
        joints_f = pos_f[3:].reshape(-1, 3)
        joints_prev = pos_prev[3:].reshape(-1, 3)
        step = joints_f - joints_prev
        norms = np.linalg.norm(step, axis=1)
        over = norms > cfg.v_max * dt
        if over.any():
            step[over] *= (cfg.v_max * dt / norms[over])[:, None]
            joints_f = joints_prev + step
        dmax = cfg.angle_v_max * dt
        ang_f = np.clip(ang_f, ang_prev - dmax, ang_prev + dmax)
        qa = prev.root_orientation.angle_to(quat_f)
        if qa > dmax:
            quat_f = slerp(prev.root_orientation, quat_f, dmax / qa)

        out = PoseFrame(
            timestamp=frame.timestamp,
            root_position=root_f,
            root_orientation=quat_f,
            joint_positions=joints_f,
            joint_angles=ang_f,
        )
        self._prev = out
        return out


def _clamp_step(prev3: np.ndarray, new3: np.ndarray, max_step: float) -> np.ndarray:
    step = new3 - prev3
    n = float(np.linalg.norm(step))
    if n > max_step:
        return prev3 + step * (max_step / n)
    return new3


def smo_filter_sequence(seq: MotionSequence, cfg: Optional[SmoFilterConfig] = None) -> MotionSequence:
    """Run a fresh SmoFilter over a whole sequence (replaying it as a stream)."""
    filt = SmoFilter(cfg)
    return seq.with_frames([filt.step(f) for f in seq.frames])


def dyn_preprocess(seq: MotionSequence, cfg: Optional[DynConfig] = None) -> MotionSequence:
    """Resample to a uniform grid at target_rate, then zero-phase smooth.

    The smoother is a causal moving average run forward and then backward
    (odd boundary extension), so linear trends and event timing pass
    unchanged.
    """
    cfg = cfg or DynConfig()
    t0 = seq.frames[0].timestamp
    dt = 1.0 / cfg.target_rate
    count = int(math.floor(seq.duration / dt + 1e-9)) + 1
    times = t0 + np.arange(count) * dt
    out = resample_sequence(seq, times, nominal_rate=cfg.target_rate)

    h = cfg.smoothing_halfwidth
    if h == 0:
        return out

    root = _zero_phase(out.root_positions(), h)
    ang = _zero_phase(out.joint_angles(), h)
    t, j, _ = out.joint_positions().shape
    pos = _zero_phase(out.joint_positions().reshape(t, -1), h).reshape(t, j, 3)

    quat = out.root_orientations()
    # re-hemispherize for continuity before componentwise smoothing
    for k in range(1, len(quat)):
        if np.dot(quat[k], quat[k - 1]) < 0:
            quat[k] = -quat[k]
    quat = _zero_phase(quat, h)
    quat /= np.linalg.norm(quat, axis=1, keepdims=True)

    frames = frames_from_arrays(times, root, quat, pos, ang)
    return out.with_frames(frames, nominal_rate=cfg.target_rate)


def _causal_ma(arr: np.ndarray, w: int) -> np.ndarray:
    """Trailing moving average of window w along axis 0 (growing window at the
    start)."""
    c = np.cumsum(arr, axis=0)
    out = np.empty_like(arr, dtype=float)
    head = min(w, len(arr))
    out[:head] = c[:head] / np.arange(1, head + 1)[:, None]
    if len(arr) > w:
        out[w:] = (c[w:] - c[:-w]) / w
    return out


def _zero_phase(x: np.ndarray, halfwidth: int) -> np.ndarray:
    """Forward-backward moving average of window halfwidth+1, odd-extended at
    the edges (odd extension keeps linear ramps exact)."""
    w = halfwidth + 1
    x = np.asarray(x, dtype=float)
    if w <= 1 or len(x) < 3:
        return x.copy()
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    pad = min(w, len(x) - 1)
    head = 2 * x[0] - x[pad:0:-1]
    tail = 2 * x[-1] - x[-2:-pad - 2:-1]
    ext = np.concatenate([head, x, tail])
    fwd = _causal_ma(ext, w)
    bwd = _causal_ma(fwd[::-1], w)[::-1]
    res = bwd[pad: pad + len(x)]
    return res[:, 0] if squeeze else res
