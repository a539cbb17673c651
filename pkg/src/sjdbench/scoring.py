"""Configurable dance scorer.

The real console game's algorithm is proprietary; this engine is an explicit
model with the three properties the benchmark needs from it: it tracks a
single effector, it is sensitive to acceleration differences, and it rewards
rhythmic alignment. A perfect reproduction of the reference scores the full
13,333; a motionless player scores near zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ValidationError
from .motion import MotionSequence, resample_sequence

MAX_SCORE = 13333.0
_STILL_EPS = 1e-9  # m/s std below which a speed signal counts as silent


@dataclass
class ScoreModel:
    max_score: float = MAX_SCORE
    window: float = 1.0
    w_pos: float = 0.5
    w_acc: float = 0.3
    w_beat: float = 0.2
    sigma_pos: float = 0.15   # m
    sigma_acc: float = 2.0    # m/s^2
    sigma_beat: float = 0.15  # s
    beat_grid: Optional[list[float]] = None
    effector: Optional[int] = None  # default: the skeleton's tracked effector

    def __post_init__(self):
        if self.window <= 0:
            raise ValidationError("window must be positive")
        if min(self.w_pos, self.w_acc, self.w_beat) < 0:
            raise ValidationError("weights must be non-negative")
        if abs(self.w_pos + self.w_acc + self.w_beat - 1.0) > 1e-9:
            raise ValidationError("weights must sum to 1")

    def to_dict(self) -> dict:
        return {
            "max_score": self.max_score, "window": self.window,
            "w_pos": self.w_pos, "w_acc": self.w_acc, "w_beat": self.w_beat,
            "sigma_pos": self.sigma_pos, "sigma_acc": self.sigma_acc,
            "sigma_beat": self.sigma_beat, "beat_grid": self.beat_grid,
            "effector": self.effector,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreModel":
        return cls(**d)


@dataclass
class WindowScore:
    t_start: float
    window_score: float
    pos_term: float
    acc_term: float
    beat_term: float


@dataclass
class ScoreBreakdown:
    total: float
    per_window: list[WindowScore] = field(default_factory=list)


def load_beat_grid(path) -> list[float]:
    """One beat timestamp (seconds) per line; blank and '#' lines skipped."""
    beats = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            beats.append(float(line))
    if not beats:
        raise ValidationError(f"{path}: no beats")
    return beats


def default_beat_grid(reference: MotionSequence, effector: int) -> list[float]:
    """Uniform grid at the dominant period of the reference effector speed
    (autocorrelation peak); falls back to 0.5 s when no periodicity shows."""
    t = reference.times()
    speed = _effector_speed(reference, effector)
    period = 0.5
    x = speed - speed.mean()
    if x.std() > _STILL_EPS and len(x) > 8:
        ac = np.correlate(x, x, mode="full")[len(x) - 1:]
        dt = float(np.median(np.diff(t)))
        lo = max(2, int(round(0.2 / dt)))          # ignore sub-0.2 s lags
        hi = min(len(ac) - 1, int(round(2.0 / dt)))
        if hi > lo:
            seg = ac[lo:hi]
            k = int(np.argmax(seg)) + lo
            if ac[k] > 0.1 * ac[0]:
                period = k * dt
    start, end = t[0], t[-1]
    n = max(1, int(math.floor((end - start) / period)) + 1)
    return [start + i * period for i in range(n)]


def _effector_positions(seq: MotionSequence, effector: int) -> np.ndarray:
    return seq.joint_positions()[:, effector, :]


def _effector_speed(seq: MotionSequence, effector: int) -> np.ndarray:
    pos = _effector_positions(seq, effector)
    t = seq.times()
    v = np.diff(pos, axis=0) / np.diff(t)[:, None]
    speed = np.linalg.norm(v, axis=1)
    return np.concatenate([[speed[0]], speed])  # length T, backward difference


def _effector_accel(pos: np.ndarray, dt: float) -> np.ndarray:
    """Central second difference of the effector path, (T-2, 3)."""
    return (pos[2:] - 2 * pos[1:-1] + pos[:-2]) / dt**2


def _window_lag(x: np.ndarray, y: np.ndarray, dt: float, max_lag_s: float) -> Optional[float]:
    """Cross-correlation peak offset of x vs y in seconds, searched within
    +/- max_lag_s. None when exactly one signal is silent; 0.0 when both are."""
    x = x - x.mean()
    y = y - y.mean()
    sx, sy = x.std(), y.std()
    if sx < _STILL_EPS and sy < _STILL_EPS:
        return 0.0
    if sx < _STILL_EPS or sy < _STILL_EPS:
        return None
    max_k = max(1, min(int(round(max_lag_s / dt)), len(x) - 1))
    corr = np.correlate(x, y, mode="full")
    lags = np.arange(-len(x) + 1, len(x))
    sel = (lags >= -max_k) & (lags <= max_k)
    best = lags[sel][int(np.argmax(corr[sel]))]
    return float(best * dt)


def _beat_period(beat_grid: list[float]) -> float:
    if len(beat_grid) < 2:
        return 0.5
    return float(np.median(np.diff(np.asarray(beat_grid, dtype=float))))


def score_trial(execution: MotionSequence, reference: MotionSequence,
                model: Optional[ScoreModel] = None) -> ScoreBreakdown:
    """Score an execution against its reference over non-overlapping windows.

    Per window: a position term from the effector trajectory error, an
    acceleration term from the finite-difference effector acceleration
    profiles, and a beat term from the cross-correlation lag of the effector
    speeds (search bounded to half a beat, so the lag is judged against the
    rhythm grid). Total = max_score * mean window score, clamped.
    """
    model = model or ScoreModel()
    effector = model.effector
    if effector is None:
        effector = execution.skeleton.tracked_effector
    if not 0 <= effector < execution.skeleton.joint_count:
        raise ValidationError("effector index out of range")

    t_exec = execution.times()
    t0 = max(t_exec[0], reference.times()[0])
    t1 = min(t_exec[-1], reference.times()[-1])
    if t1 - t0 <= 0:
        raise ValidationError("execution and reference do not overlap in time")
    keep = (t_exec >= t0) & (t_exec <= t1)
    times = t_exec[keep]
    if len(times) < 4:
        raise ValidationError("too few overlapping frames to score")

    if len(times) == len(reference) and np.array_equal(times, reference.times()):
        ref = reference  # already on the same grid
    else:
        ref = resample_sequence(reference, times,
                                nominal_rate=execution.nominal_rate)
    exec_pos = _effector_positions(execution, effector)[keep]
    ref_pos = _effector_positions(ref, effector)

    beats = model.beat_grid
    if beats is None:
        beats = default_beat_grid(ref, effector)
    max_lag = min(model.window / 2.0, _beat_period(beats) / 2.0)

    dt = float(np.median(np.diff(times)))
    err = np.linalg.norm(exec_pos - ref_pos, axis=1)
    pos_sim = np.exp(-((err / model.sigma_pos) ** 2))

    acc_exec = _effector_accel(exec_pos, dt)
    acc_ref = _effector_accel(ref_pos, dt)
    acc_diff = np.linalg.norm(acc_exec - acc_ref, axis=1)  # length T-2

    speed_exec = np.diff(exec_pos, axis=0) / dt
    speed_ref = np.diff(ref_pos, axis=0) / dt
    sp_exec = np.linalg.norm(speed_exec, axis=1)
    sp_ref = np.linalg.norm(speed_ref, axis=1)

    windows: list[WindowScore] = []
    w = model.window
    n_windows = max(1, int(math.ceil((times[-1] - times[0]) / w - 1e-9)))
    for m in range(n_windows):
        lo_t = times[0] + m * w
        hi_t = lo_t + w
        sel = (times >= lo_t) & (times < hi_t) if m < n_windows - 1 \
            else (times >= lo_t)
        idx = np.nonzero(sel)[0]
        if len(idx) < 4:
            continue
        pos_term = float(pos_sim[idx].mean())

        interior = idx[(idx >= 1) & (idx <= len(times) - 2)] - 1
        acc_term = float(np.exp(-acc_diff[interior].mean() / model.sigma_acc)) \
            if len(interior) else 1.0

        vidx = idx[idx < len(sp_exec)]
        lag = _window_lag(sp_exec[vidx], sp_ref[vidx], dt, max_lag)
        beat_term = 0.0 if lag is None \
            else float(np.exp(-abs(lag) / model.sigma_beat))

        score = model.w_pos * pos_term + model.w_acc * acc_term \
            + model.w_beat * beat_term
        windows.append(WindowScore(lo_t, score, pos_term, acc_term, beat_term))

    if not windows:
        raise ValidationError("no scoreable windows")
    total = model.max_score * float(np.mean([ws.window_score for ws in windows]))
    total = min(max(total, 0.0), model.max_score)
    return ScoreBreakdown(total=total, per_window=windows)


def aggregate_scores(trials) -> tuple[Optional[float], Optional[float], float]:
    """(easy_mean, hard_mean, all_mean) of trial scores; an absent difficulty
    group yields None, not zero.

    ``trials`` is an iterable of (score, Difficulty) pairs.
    """
    from .motion import Difficulty

    items = list(trials)
    if not items:
        raise ValidationError("no trials to aggregate")
    easy = [s for s, d in items if d is Difficulty.EASY]
    hard = [s for s, d in items if d is Difficulty.HARD]
    allv = [s for s, _ in items]
    easy_mean = float(np.mean(easy)) if easy else None
    hard_mean = float(np.mean(hard)) if hard else None
    return easy_mean, hard_mean, float(np.mean(allv))
