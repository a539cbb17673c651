"""Tracking-quality metrics: similarity alignment, torso-frame MPJPE with the
Active/All fall split, PA-MPJPE, finite-difference smoothness, fall detection
and success rate.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import (
    DegenerateGeometryError,
    EmptyWindowError,
    ValidationError,
)
from .geometry import quats_to_matrices
from .motion import MotionSequence, Skeleton, resample_sequence

_RANK_RTOL = 1e-9


@dataclass(frozen=True)
class SimilarityTransform:
    """x -> scale * rotation @ x + translation, det(rotation) = +1."""

    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def apply(self, points: np.ndarray) -> np.ndarray:
        return self.scale * points @ self.rotation.T + self.translation


class FallCause(enum.Enum):
    ROOT_HEIGHT = "root_height"
    ATTITUDE = "attitude"
    CONTROLLER_ABORT = "controller_abort"


@dataclass(frozen=True)
class FallRecord:
    fell: bool
    fall_time: Optional[float] = None
    cause: Optional[FallCause] = None

    def __post_init__(self):
        if self.fell != (self.fall_time is not None):
            raise ValidationError("fall_time must be present iff fell")


NO_FALL = FallRecord(fell=False)


@dataclass
class TrialMetrics:
    mpjpe_active_mm: float
    mpjpe_all_mm: float
    success: bool
    jerk: float
    acceleration: float
    score: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "mpjpe_active_mm": self.mpjpe_active_mm,
            "mpjpe_all_mm": self.mpjpe_all_mm,
            "success": self.success,
            "jerk_rad_s3": self.jerk,
            "acceleration_rad_s2": self.acceleration,
            "score": self.score,
        }


class FrameMode(enum.Enum):
    ACTIVE = "active"   # frames strictly before the fall
    ALL = "all"


@dataclass
class FallConfig:
    height_ratio: float = 0.5   # fall when root height < ratio * nominal_height
    tilt_deg: float = 60.0
    dwell_s: float = 0.2
    up_axis: int = 2            # world z-up


def umeyama_align(source: np.ndarray, target: np.ndarray) -> SimilarityTransform:
    """Least-squares similarity transform mapping source points onto target.

    Minimizes sum ||s R source_i + t - target_i||^2; reflections are excluded
    by flipping the smallest singular direction when needed.
    """
    src = np.asarray(source, dtype=float)
    tgt = np.asarray(target, dtype=float)
    if src.shape != tgt.shape or src.ndim != 2 or src.shape[1] != 3:
        raise ValidationError("point sets must both be (N, 3)")
    n = src.shape[0]
    if n < 3:
        raise ValidationError("need at least 3 point pairs")

    mu_s = src.mean(axis=0)
    mu_t = tgt.mean(axis=0)
    ds = src - mu_s
    dt_ = tgt - mu_t
    cov = dt_.T @ ds / n
    u, d, vt = np.linalg.svd(cov)
    if d[0] <= 0 or d[1] <= _RANK_RTOL * d[0]:
        raise DegenerateGeometryError("source covariance rank < 2")
    s_diag = np.ones(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        s_diag[2] = -1.0
    rot = u @ np.diag(s_diag) @ vt
    var_s = (ds**2).sum() / n
    scale = float((d * s_diag).sum() / var_s)
    trans = mu_t - scale * rot @ mu_s
    return SimilarityTransform(scale=scale, rotation=rot, translation=trans)


def _to_torso_frame(seq: MotionSequence) -> np.ndarray:
    """Joint positions expressed in each frame's own root (torso) frame."""
    pos = seq.joint_positions()
    root = seq.root_positions()
    rot = quats_to_matrices(seq.root_orientations())
    # rows: local = (p - root) @ R equals R^T (p - root) per point
    return np.einsum("tjk,tkl->tjl", pos - root[:, None, :], rot)


def _aligned_pair(execution: MotionSequence, reference: MotionSequence):
    if execution.skeleton.joint_count != reference.skeleton.joint_count:
        raise ValidationError("execution and reference skeletons differ")
    if len(execution) == len(reference) and \
            np.array_equal(execution.times(), reference.times()):
        return execution, reference  # already on the same grid
    ref = resample_sequence(reference, execution.times(),
                            nominal_rate=execution.nominal_rate)
    return execution, ref


def mpjpe(execution: MotionSequence, reference: MotionSequence,
          frame_mode: FrameMode = FrameMode.ALL,
          fall: FallRecord = NO_FALL) -> float:
    """Mean per-joint position error in the torso frame, in millimeters.

    The reference is resampled onto the execution's timestamps first. ACTIVE
    restricts the mean to frames strictly before the fall time.
    """
    execution, ref = _aligned_pair(execution, reference)
    exec_local = _to_torso_frame(execution)
    ref_local = _to_torso_frame(ref)
    err = np.linalg.norm(exec_local - ref_local, axis=2)  # (T, J)
    if frame_mode is FrameMode.ACTIVE and fall.fell:
        mask = execution.times() < fall.fall_time
        if not mask.any():
            raise EmptyWindowError("no frames before the fall")
        err = err[mask]
    return float(err.mean() * 1000.0)


def pa_mpjpe(execution: MotionSequence, reference: MotionSequence) -> float:
    """MPJPE after per-frame similarity (Procrustes) alignment of the
    execution onto the reference, in millimeters. Degenerate frames are
    skipped."""
    execution, ref = _aligned_pair(execution, reference)
    exec_pos = execution.joint_positions()
    ref_pos = ref.joint_positions()
    t, j, _ = exec_pos.shape
    if j < 3:
        raise ValidationError("PA alignment needs at least 3 joints")

    mu_e = exec_pos.mean(axis=1, keepdims=True)
    mu_r = ref_pos.mean(axis=1, keepdims=True)
    de = exec_pos - mu_e
    dr = ref_pos - mu_r
    cov = np.einsum("tja,tjb->tab", dr, de) / j
    u, d, vt = np.linalg.svd(cov)
    valid = d[:, 1] > _RANK_RTOL * np.maximum(d[:, 0], 1e-300)
    det = np.linalg.det(u) * np.linalg.det(vt)
    s_diag = np.ones((t, 3))
    s_diag[det < 0, 2] = -1.0
    rot = u * s_diag[:, None, :] @ vt
    var_e = (de**2).sum(axis=(1, 2)) / j
    valid &= var_e > 0
    if not valid.any():
        raise DegenerateGeometryError("every frame was degenerate")
    scale = (d * s_diag).sum(axis=1) / np.where(var_e > 0, var_e, 1.0)
    aligned = scale[:, None, None] * np.einsum("tab,tjb->tja", rot, de)
    err = np.linalg.norm(aligned - dr, axis=2)[valid]
    return float(err.mean() * 1000.0)


def smoothness(seq: MotionSequence) -> tuple[float, float]:
    """(jerk rad/s^3, acceleration rad/s^2): mean absolute finite differences
    of the joint angles over interior frames. Requires >= 4 uniformly spaced
    frames (within 1%)."""
    ang = seq.joint_angles()
    t = seq.times()
    if len(t) < 4:
        raise ValidationError("smoothness needs at least 4 frames")
    dts = np.diff(t)
    dt = float(dts.mean())
    if np.abs(dts - dt).max() > 0.01 * dt:
        raise ValidationError("smoothness needs uniform frame spacing (within 1%)")
    acc = np.abs(ang[2:] - 2 * ang[1:-1] + ang[:-2]) / dt**2
    jerk = np.abs(ang[3:] - 3 * ang[2:-1] + 3 * ang[1:-2] - ang[:-3]) / dt**3
    return float(jerk.mean()), float(acc.mean())


def detect_fall(seq: MotionSequence, skeleton: Optional[Skeleton] = None,
                cfg: Optional[FallConfig] = None) -> FallRecord:
    """First sustained root-height collapse or torso tilt past the thresholds.

    A condition must hold continuously for dwell_s before it counts; the fall
    time is the end of the dwell.
    """
    cfg = cfg or FallConfig()
    sk = skeleton or seq.skeleton
    t = seq.times()
    height = seq.root_positions()[:, cfg.up_axis]
    low = height < cfg.height_ratio * sk.nominal_height

    up = np.zeros(3)
    up[cfg.up_axis] = 1.0
    cos_tilt = np.array([f.root_orientation.rotate(up)[cfg.up_axis] for f in seq.frames])
    tilted = cos_tilt < np.cos(np.deg2rad(cfg.tilt_deg))

    t_low = _first_sustained(t, low, cfg.dwell_s)
    t_tilt = _first_sustained(t, tilted, cfg.dwell_s)
    if t_low is None and t_tilt is None:
        return NO_FALL
    if t_tilt is None or (t_low is not None and t_low <= t_tilt):
        return FallRecord(fell=True, fall_time=t_low, cause=FallCause.ROOT_HEIGHT)
    return FallRecord(fell=True, fall_time=t_tilt, cause=FallCause.ATTITUDE)


def _first_sustained(t: np.ndarray, flag: np.ndarray, dwell: float) -> Optional[float]:
    start = None
    for k in range(len(t)):
        if flag[k]:
            if start is None:
                start = t[k]
            if t[k] - start >= dwell:
                return float(start + dwell)
        else:
            start = None
    return None


def success_rate(trials: Iterable[FallRecord]) -> float:
    """Percent of trials that ended without a fall or abort."""
    records = list(trials)
    if not records:
        raise ValidationError("success_rate needs at least one trial")
    clean = sum(1 for r in records if not r.fell)
    return 100.0 * clean / len(records)
