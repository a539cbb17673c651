"""The user-facing harness: benchmark runs over players x settings x songs x
repeats, plus the scorer validation study (correlation and repeatability
statistics over a cohort).

Scores are always computed against the original choreography, while tracking
error is measured against the (possibly filtered) reference the player was
actually given — smoothing therefore trades score for stability, which is the
trade-off the harness exists to expose. Every run is deterministic for a
given config and seed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateInputError, ValidationError
from .filters import DynConfig, SmoFilterConfig, dyn_preprocess, smo_filter_sequence
from .metrics import FrameMode, mpjpe, pa_mpjpe, smoothness, success_rate
from .motion import Difficulty, MotionSequence, read_motion_file, resample_sequence
from .pipeline import interpolate_span
from .scoring import ScoreModel, aggregate_scores, score_trial
from .simplayer import (
    CohortResult,
    PlayerProfile,
    cohort,
    derive_seed,
    load_cohort_file,
    simulate_execution,
)
from .stats import cv, icc_2_1, kendall_w, pearson

SETTINGS = ("raw", "smo", "dyn")


@dataclass
class BenchConfig:
    songs: Optional[str] = None       # directory of .sjd files
    cohort: Optional[str] = None      # player-profile JSON
    settings: tuple[str, ...] = ("smo", "dyn")
    repeats: int = 3
    seed: int = 0
    output_dir: str = "bench-out"
    offset: float = 0.0               # manual score-alignment shift, seconds
    smo: SmoFilterConfig = field(default_factory=SmoFilterConfig)
    dyn: DynConfig = field(default_factory=DynConfig)
    score_model: Optional[ScoreModel] = None
    # online-path stream shape: live keyframe rate and interpolation factor
    smo_keyframe_rate: float = 5.0
    smo_interpolation: int = 2

    def __post_init__(self):
        if self.repeats < 1:
            raise ValidationError("repeats must be >= 1")
        settings = tuple(s.lower() for s in self.settings)
        if not settings:
            raise ValidationError("at least one setting is required")
        for s in settings:
            if s not in SETTINGS:
                raise ValidationError(f"unknown setting {s!r}")
        self.settings = settings

    def to_dict(self) -> dict:
        return {
            "songs": self.songs, "cohort": self.cohort,
            "settings": list(self.settings), "repeats": self.repeats,
            "seed": self.seed, "output_dir": self.output_dir,
            "offset": self.offset,
            "score_model": self.score_model.to_dict() if self.score_model else None,
            "smo_keyframe_rate": self.smo_keyframe_rate,
            "smo_interpolation": self.smo_interpolation,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class BenchRow:
    player: str
    setting: str
    jds_easy: Optional[float]
    jds_hard: Optional[float]
    jds_all: float
    mpjpe_active_mm: float
    mpjpe_all_mm: float
    sr_percent: float
    jerk: float
    acceleration: float

    def as_dict(self) -> dict:
        return {
            "player": self.player, "setting": self.setting,
            "jds_easy": self.jds_easy, "jds_hard": self.jds_hard,
            "jds_all": self.jds_all,
            "mpjpe_active_mm": self.mpjpe_active_mm,
            "mpjpe_all_mm": self.mpjpe_all_mm,
            "sr_percent": self.sr_percent,
            "jerk_rad_s3": self.jerk, "acc_rad_s2": self.acceleration,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BenchRow":
        return cls(
            player=d["player"], setting=d["setting"],
            jds_easy=d["jds_easy"], jds_hard=d["jds_hard"], jds_all=d["jds_all"],
            mpjpe_active_mm=d["mpjpe_active_mm"], mpjpe_all_mm=d["mpjpe_all_mm"],
            sr_percent=d["sr_percent"], jerk=d["jerk_rad_s3"],
            acceleration=d["acc_rad_s2"],
        )


@dataclass
class BenchReport:
    rows: list[BenchRow]
    provenance: dict
    errata: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "rows": [r.as_dict() for r in self.rows],
            "errata": self.errata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "BenchReport":
        return cls(rows=[BenchRow.from_dict(r) for r in d["rows"]],
                   provenance=d["provenance"], errata=list(d.get("errata", [])))

    @classmethod
    def from_json(cls, text: str) -> "BenchReport":
        return cls.from_dict(json.loads(text))


def load_songs_dir(path) -> list[MotionSequence]:
    files = sorted(Path(path).glob("*.sjd"))
    if not files:
        raise ValidationError(f"no .sjd files in {path}")
    return [read_motion_file(f) for f in files]


def default_cohort() -> list[PlayerProfile]:
    """Small demo cohort spanning the stability/accuracy trade-off."""
    return [
        PlayerProfile(name="ace", lag=0.0, noise_sigma=0.002,
                      tracking_cutoff=8.0, fall_hazard_gain=2e-5, seed=1),
        PlayerProfile(name="steady", lag=0.05, noise_sigma=0.01,
                      tracking_cutoff=4.0, fall_hazard_gain=1e-4, seed=2),
        PlayerProfile(name="wobbly", lag=0.12, noise_sigma=0.03,
                      tracking_cutoff=2.5, fall_hazard_gain=3e-4, seed=3),
    ]


def graded_cohort(n: int = 10) -> list[PlayerProfile]:
    """Skill-graded cohort for the validation study: noise and lag rise with
    the player index, no fall hazard (keeps the repeat design complete)."""
    noise_mm = np.linspace(0.0, 80.0, n)
    lags = np.linspace(0.0, 0.18, n)
    return [
        PlayerProfile(name=f"grade_{i:02d}", lag=float(lags[i]),
                      noise_sigma=float(noise_mm[i]) / 1000.0,
                      angle_noise_sigma=float(noise_mm[i]) / 1000.0,
                      seed=100 + i)
        for i in range(n)
    ]


def _preprocess(ref: MotionSequence, setting: str, cfg: BenchConfig) -> MotionSequence:
    """Produce the reference stream a player receives under each setting.

    raw: the capture untouched. smo: the online chain — the capture sampled
    at the live keyframe rate, causally filtered, then interpolated up, i.e.
    the conservative band-limited stream a real-time pipeline can deliver.
    dyn: the offline 30 Hz resample with zero-phase smoothing, which keeps
    the sharp transients.
    """
    if setting == "raw":
        return ref
    if setting == "smo":
        rate = cfg.smo_keyframe_rate
        t0, t1 = ref.frames[0].timestamp, ref.frames[-1].timestamp
        times = t0 + np.arange(int((t1 - t0) * rate + 1e-9) + 1) / rate
        keyframes = resample_sequence(ref, times, nominal_rate=rate)
        filtered = smo_filter_sequence(keyframes, cfg.smo)
        n = cfg.smo_interpolation
        frames = [filtered.frames[0]]
        for prev, curr in zip(filtered.frames, filtered.frames[1:]):
            frames.extend(interpolate_span(prev, curr, n))
        return ref.with_frames(frames, nominal_rate=rate * (n + 1))
    if setting == "dyn":
        return dyn_preprocess(ref, cfg.dyn)
    raise ValidationError(f"unknown setting {setting!r}")


def _shift_times(seq: MotionSequence, offset: float) -> MotionSequence:
    if offset == 0.0:
        return seq
    frames = [replace(f, timestamp=f.timestamp + offset) for f in seq.frames]
    return seq.with_frames(frames)


def run_bench(cfg: BenchConfig,
              songs: Optional[Sequence[MotionSequence]] = None,
              profiles: Optional[Sequence[PlayerProfile]] = None) -> BenchReport:
    """Run every player x setting x song x repeat and aggregate the table.

    ``songs`` and ``profiles`` override the config paths (used by tests and
    callers that already hold the data in memory).
    """
    if songs is None:
        if cfg.songs is None:
            raise ValidationError("no songs given")
        songs = load_songs_dir(cfg.songs)
    if profiles is None:
        profiles = load_cohort_file(cfg.cohort) if cfg.cohort else default_cohort()

    errata: list[str] = []
    rows: list[BenchRow] = []
    prepared: dict[tuple[str, int], MotionSequence] = {}
    for s_idx, setting in enumerate(cfg.settings):
        for g_idx, song in enumerate(songs):
            try:
                prepared[(setting, g_idx)] = _preprocess(song, setting, cfg)
            except Exception as exc:  # skip the song, note it, keep running
                errata.append(f"{setting}/{song.song_id}: {exc}")

    for p_idx, profile in enumerate(profiles):
        for s_idx, setting in enumerate(cfg.settings):
            scores: list[tuple[float, Difficulty]] = []
            active_mms: list[float] = []
            all_mms: list[float] = []
            falls = []
            jerks: list[float] = []
            accs: list[float] = []
            for g_idx, song in enumerate(songs):
                target = prepared.get((setting, g_idx))
                if target is None:
                    continue
                score_ref = _shift_times(song, cfg.offset)
                for rep in range(cfg.repeats):
                    seed = derive_seed(cfg.seed, p_idx, s_idx, g_idx, rep)
                    trial_profile = replace(profile, seed=seed)
                    execution, fall = simulate_execution(target, trial_profile)
                    scores.append(
                        (score_trial(execution, score_ref, cfg.score_model).total,
                         song.difficulty))
                    all_mm = mpjpe(execution, target)
                    active_mms.append(
                        mpjpe(execution, target, FrameMode.ACTIVE, fall)
                        if fall.fell else all_mm)
                    all_mms.append(all_mm)
                    falls.append(fall)
                    jerk, acc = smoothness(execution)
                    jerks.append(jerk)
                    accs.append(acc)
            if not scores:
                errata.append(f"{profile.name}/{setting}: no trials ran")
                continue
            easy, hard, allv = aggregate_scores(scores)
            rows.append(BenchRow(
                player=profile.name, setting=setting,
                jds_easy=easy, jds_hard=hard, jds_all=allv,
                mpjpe_active_mm=float(np.mean(active_mms)),
                mpjpe_all_mm=float(np.mean(all_mms)),
                sr_percent=success_rate(falls),
                jerk=float(np.mean(jerks)),
                acceleration=float(np.mean(accs)),
            ))

    provenance = {
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "score_source": "sjdbench built-in score model (not a console score)",
        "songs": [s.song_id for s in songs],
        "players": [p.name for p in profiles],
    }
    return BenchReport(rows=rows, provenance=provenance, errata=errata)


# --- validation study ---------------------------------------------------------

@dataclass
class SongCorrelation:
    song_id: str
    r: float
    p: float
    n: int


@dataclass
class ValidationReport:
    per_song: list[SongCorrelation]
    pooled_r: Optional[float]
    pooled_p: Optional[float]
    icc_2_1: Optional[float]
    kendall_w: Optional[float]
    cv_cells: dict[str, float]
    cv_mean: Optional[float]
    degenerate: bool
    notes: list[str] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_song": [
                {"song_id": c.song_id, "r": c.r, "p": c.p, "n": c.n}
                for c in self.per_song
            ],
            "pooled_r": self.pooled_r, "pooled_p": self.pooled_p,
            "icc_2_1": self.icc_2_1, "kendall_w": self.kendall_w,
            "cv_cells": self.cv_cells, "cv_mean": self.cv_mean,
            "degenerate": self.degenerate, "notes": self.notes,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def run_validation_study(cfg: BenchConfig,
                         songs: Optional[Sequence[MotionSequence]] = None,
                         profiles: Optional[Sequence[PlayerProfile]] = None,
                         ) -> tuple[ValidationReport, CohortResult]:
    """Cohort-level scorer validation: per-song score/PA-MPJPE correlation,
    ICC(2,1) and per-cell CV over repeats, and rank concordance across songs.

    Degenerate cohorts are flagged, never fabricated.
    """
    if songs is None:
        if cfg.songs is None:
            raise ValidationError("no songs given")
        songs = load_songs_dir(cfg.songs)
    if profiles is None:
        profiles = load_cohort_file(cfg.cohort) if cfg.cohort else graded_cohort()
    if len(profiles) < 2:
        raise ValidationError("the validation study needs >= 2 profiles")
    if cfg.repeats < 2:
        raise ValidationError("the validation study needs >= 2 repeats")

    result = cohort(profiles, songs, cfg.repeats, base_seed=cfg.seed,
                    score_model=cfg.score_model)

    notes: list[str] = []
    degenerate = False

    per_song: list[SongCorrelation] = []
    pooled_scores: list[np.ndarray] = []
    pooled_errs: list[np.ndarray] = []
    for si, song in enumerate(songs):
        scores, errs = result.per_song_points(si)
        pooled_scores.append(scores)
        pooled_errs.append(errs)
        try:
            r, p = pearson(scores, errs)
            per_song.append(SongCorrelation(song.song_id, r, p, len(scores)))
        except DegenerateInputError:
            degenerate = True
            notes.append(f"{song.song_id}: zero-variance scores, correlation skipped")

    pooled_r = pooled_p = None
    try:
        pooled_r, pooled_p = pearson(np.concatenate(pooled_scores),
                                     np.concatenate(pooled_errs))
    except DegenerateInputError:
        degenerate = True
        notes.append("pooled correlation degenerate")

    icc_val = None
    try:
        icc_val = icc_2_1(result.score_matrix())
    except DegenerateInputError:
        degenerate = True
        notes.append("score matrix degenerate, ICC skipped")

    kcc_val = None
    try:
        kcc_val = kendall_w(result.song_ranking_matrix())
    except DegenerateInputError:
        degenerate = True
        notes.append("rankings fully tied, KCC skipped")

    cv_cells: dict[str, float] = {}
    cv_vals: list[float] = []
    for pi, profile in enumerate(profiles):
        for si, song in enumerate(songs):
            cell = result.cell_scores(pi, si)
            if len(cell) < 2:
                continue
            try:
                c = cv(cell)
            except DegenerateInputError:
                c = float("nan")
            if np.isfinite(c):
                cv_cells[f"{profile.name}/{song.song_id}"] = c
                cv_vals.append(c)
    cv_mean = float(np.mean(cv_vals)) if cv_vals else None

    report = ValidationReport(
        per_song=per_song, pooled_r=pooled_r, pooled_p=pooled_p,
        icc_2_1=icc_val, kendall_w=kcc_val,
        cv_cells=cv_cells, cv_mean=cv_mean,
        degenerate=degenerate, notes=notes,
        provenance={"config_hash": cfg.config_hash(), "seed": cfg.seed,
                    "trials": len(result.trials)},
    )
    return report, result
