"""Simulated dance players.

A player is modeled kinematically: it tracks the reference with a constant
reaction lag, a first-order bandwidth limit, additive sensor/actuation noise,
and a fall hazard proportional to the local jerk of the reference. That is
enough structure to exercise every metric and statistic in the harness while
staying fully deterministic per seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .geometry import slerp_many
from .metrics import (
    FallCause,
    FallRecord,
    FrameMode,
    NO_FALL,
    TrialMetrics,
    mpjpe,
    pa_mpjpe,
    smoothness,
)
from .motion import MotionSequence, frames_from_arrays, resample_sequence
from .scoring import ScoreModel, score_trial
from .stats import TrialMatrix

FALLEN_ROOT_HEIGHT = 0.1  # m, where the root settles after a fall
FALL_DECAY_TAU = 0.25     # s


@dataclass
class PlayerProfile:
    name: str = "player"
    lag: float = 0.0
    noise_sigma: float = 0.0        # m, per joint coordinate
    angle_noise_sigma: float = 0.0  # rad
    tracking_cutoff: Optional[float] = None  # Hz; None = unlimited bandwidth
    fall_hazard_gain: float = 0.0   # per (rad/s^3), scaled by dt
    seed: int = 0

    def __post_init__(self):
        if self.lag < 0 or self.noise_sigma < 0 or self.angle_noise_sigma < 0 \
                or self.fall_hazard_gain < 0:
            raise ValidationError("profile parameters must be non-negative")
        if self.tracking_cutoff is not None and self.tracking_cutoff <= 0:
            raise ValidationError("tracking_cutoff must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "PlayerProfile":
        return cls(**d)


def load_cohort_file(path) -> list[PlayerProfile]:
    """JSON list of profile objects (or {"players": [...]})."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data.get("players", [])
    if not data:
        raise ValidationError(f"{path}: no player profiles")
    return [PlayerProfile.from_dict(d) for d in data]


def _reference_jerk_profile(reference: MotionSequence) -> np.ndarray:
    """Per-frame mean |third difference| / dt^3 of the joint angles; zeros at
    the boundary frames."""
    ang = reference.joint_angles()
    t = reference.times()
    dt = float(np.median(np.diff(t)))
    prof = np.zeros(len(t))
    if len(t) >= 4:
        j = np.abs(ang[3:] - 3 * ang[2:-1] + 3 * ang[1:-2] - ang[:-3]) / dt**3
        prof[2:-1] = j.mean(axis=1)
    return prof


def simulate_execution(reference: MotionSequence,
                       profile: PlayerProfile) -> tuple[MotionSequence, FallRecord]:
    """Produce the player's execution of a reference and its fall record."""
    rng = np.random.default_rng(profile.seed)
    times = reference.times()
    dt = float(np.median(np.diff(times)))

    tracked = reference if profile.lag == 0 else \
        resample_sequence(reference, times - profile.lag,
                          nominal_rate=reference.nominal_rate)
    # resample_sequence clamps before the start, which matches a player
    # holding the opening pose until the routine reaches them
    root = tracked.root_positions().copy()
    quat = tracked.root_orientations().copy()
    pos = tracked.joint_positions().copy()
    ang = tracked.joint_angles().copy()

    if profile.tracking_cutoff is not None:
        a = 1.0 - math.exp(-2.0 * math.pi * profile.tracking_cutoff * dt)
        for k in range(1, len(times)):
            root[k] = root[k - 1] + a * (root[k] - root[k - 1])
            pos[k] = pos[k - 1] + a * (pos[k] - pos[k - 1])
            ang[k] = ang[k - 1] + a * (ang[k] - ang[k - 1])
        quat = _lowpass_quats(quat, a)

    if profile.noise_sigma > 0:
        pos = pos + rng.normal(0.0, profile.noise_sigma, size=pos.shape)
        root = root + rng.normal(0.0, profile.noise_sigma, size=root.shape)
    if profile.angle_noise_sigma > 0:
        ang = ang + rng.normal(0.0, profile.angle_noise_sigma, size=ang.shape)

    fall = NO_FALL
    if profile.fall_hazard_gain > 0:
        hazard = np.clip(profile.fall_hazard_gain
                         * _reference_jerk_profile(reference) * dt, 0.0, 1.0)
        draws = rng.uniform(size=len(times))
        hits = np.nonzero(draws < hazard)[0]
        if len(hits) and hits[0] > 0:
            f = int(hits[0])
            fall = FallRecord(fell=True, fall_time=float(times[f]),
                              cause=FallCause.ROOT_HEIGHT)
            pos[f:] = pos[f]
            ang[f:] = ang[f]
            quat[f:] = quat[f]
            root[f:] = root[f]
            decay = np.exp(-(times[f:] - times[f]) / FALL_DECAY_TAU)
            h0 = root[f, 2]
            root[f:, 2] = FALLEN_ROOT_HEIGHT + (h0 - FALLEN_ROOT_HEIGHT) * decay

    frames = frames_from_arrays(times, root, quat, pos, ang)
    return reference.with_frames(frames), fall


def _lowpass_quats(quat: np.ndarray, a: float) -> np.ndarray:
    out = quat.copy()
    for k in range(1, len(out)):
        out[k] = slerp_many(out[k - 1][None, :], out[k][None, :],
                            np.array([a]))[0]
    return out


@dataclass
class TrialRecord:
    profile: str
    profile_index: int
    song_id: str
    song_index: int
    repeat: int
    score: float
    pa_mpjpe_mm: float
    metrics: TrialMetrics
    fall: FallRecord


@dataclass
class CohortResult:
    trials: list[TrialRecord] = field(default_factory=list)
    profiles: list[PlayerProfile] = field(default_factory=list)
    song_ids: list[str] = field(default_factory=list)
    repeats: int = 0

    def score_matrix(self) -> TrialMatrix:
        """Profiles x repeats; each cell is the mean score over songs."""
        n, k = len(self.profiles), self.repeats
        cells = np.zeros((n, k))
        counts = np.zeros((n, k))
        for tr in self.trials:
            cells[tr.profile_index, tr.repeat] += tr.score
            counts[tr.profile_index, tr.repeat] += 1
        if (counts == 0).any():
            raise ValidationError("incomplete cohort design")
        return TrialMatrix(cells / counts,
                           [p.name for p in self.profiles],
                           [f"repeat_{j}" for j in range(k)])

    def per_song_points(self, song_index: int) -> tuple[np.ndarray, np.ndarray]:
        """(scores, pa_mpjpe) over all trials of one song."""
        pts = [(tr.score, tr.pa_mpjpe_mm) for tr in self.trials
               if tr.song_index == song_index]
        arr = np.asarray(pts, dtype=float)
        return arr[:, 0], arr[:, 1]

    def cell_scores(self, profile_index: int, song_index: int) -> np.ndarray:
        return np.asarray([tr.score for tr in self.trials
                           if tr.profile_index == profile_index
                           and tr.song_index == song_index], dtype=float)

    def song_ranking_matrix(self) -> np.ndarray:
        """Songs x profiles mean scores: each song 'judges' the players."""
        m = np.zeros((len(self.song_ids), len(self.profiles)))
        counts = np.zeros_like(m)
        for tr in self.trials:
            m[tr.song_index, tr.profile_index] += tr.score
            counts[tr.song_index, tr.profile_index] += 1
        return m / np.maximum(counts, 1)


def derive_seed(base_seed: int, *indices: int) -> int:
    """Stable per-trial seed from the base seed and trial coordinates."""
    ss = np.random.SeedSequence([base_seed, *indices])
    return int(ss.generate_state(1)[0])


def cohort(profiles: Sequence[PlayerProfile],
           references: Sequence[MotionSequence],
           repeats: int,
           *,
           base_seed: int = 0,
           score_model: Optional[ScoreModel] = None) -> CohortResult:
    """Run every profile x reference x repeat, scoring and measuring each
    trial. Deterministic for a given base seed."""
    if not profiles or not references:
        raise ValidationError("cohort needs profiles and references")
    if repeats < 1:
        raise ValidationError("repeats must be >= 1")
    result = CohortResult(profiles=list(profiles),
                          song_ids=[r.song_id for r in references],
                          repeats=repeats)
    for pi, profile in enumerate(profiles):
        for si, ref in enumerate(references):
            for rep in range(repeats):
                trial_profile = replace(
                    profile, seed=derive_seed(base_seed, profile.seed, pi, si, rep))
                execution, fall = simulate_execution(ref, trial_profile)
                breakdown = score_trial(execution, ref, score_model)
                jerk, acc = smoothness(execution)
                all_mm = mpjpe(execution, ref)
                active_mm = mpjpe(execution, ref, FrameMode.ACTIVE, fall) \
                    if fall.fell else all_mm
                tm = TrialMetrics(
                    mpjpe_active_mm=active_mm,
                    mpjpe_all_mm=all_mm,
                    success=not fall.fell,
                    jerk=jerk,
                    acceleration=acc,
                    score=breakdown.total,
                )
                result.trials.append(TrialRecord(
                    profile=profile.name, profile_index=pi,
                    song_id=ref.song_id, song_index=si, repeat=rep,
                    score=breakdown.total, pa_mpjpe_mm=pa_mpjpe(execution, ref),
                    metrics=tm, fall=fall,
                ))
    return result
