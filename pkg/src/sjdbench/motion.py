"""Motion domain types and the `sjd-motion v1` text format.

A MotionSequence carries world-frame joint positions *and* joint-space angles
for every frame; downstream consumers declare which representation they use
(position metrics and the scorer read positions, smoothness and the wire
protocol read angles).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError, ValidationError
from .geometry import Quaternion, slerp_many

SMPL_JOINT_NAMES = [
    "pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee",
    "spine2", "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot",
    "neck", "left_collar", "right_collar", "head", "left_shoulder",
    "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist",
    "left_hand", "right_hand",
]

RIGHT_WRIST = SMPL_JOINT_NAMES.index("right_wrist")

_MAGIC = "# sjd-motion v1"


class Difficulty(enum.Enum):
    EASY = "easy"
    HARD = "hard"


@dataclass(frozen=True)
class Skeleton:
    """Joint layout plus the single tracked effector (the instrumented wrist)."""

    joint_count: int
    joint_names: tuple[str, ...]
    nominal_height: float
    tracked_effector: int

    def __post_init__(self):
        if self.joint_count <= 0:
            raise ValidationError("joint_count must be positive")
        if len(self.joint_names) != self.joint_count:
            raise ValidationError(
                f"{len(self.joint_names)} names for {self.joint_count} joints"
            )
        if not 0 <= self.tracked_effector < self.joint_count:
            raise ValidationError("tracked_effector out of range")
        if not self.nominal_height > 0:
            raise ValidationError("nominal_height must be positive")
        object.__setattr__(self, "joint_names", tuple(self.joint_names))

    @classmethod
    def default(cls, joint_count: int = 24, nominal_height: float = 1.7,
                tracked_effector: int | None = None) -> "Skeleton":
        if joint_count == len(SMPL_JOINT_NAMES):
            names = tuple(SMPL_JOINT_NAMES)
            effector = RIGHT_WRIST if tracked_effector is None else tracked_effector
        else:
            names = tuple(f"joint_{i}" for i in range(joint_count))
            effector = 0 if tracked_effector is None else tracked_effector
        return cls(joint_count, names, nominal_height, effector)


@dataclass(frozen=True)
class PoseFrame:
    """One timestamped full-body pose: root transform, joint positions, joint angles."""

    timestamp: float
    root_position: np.ndarray
    root_orientation: Quaternion
    joint_positions: np.ndarray
    joint_angles: np.ndarray

    def __post_init__(self):
        rp = np.asarray(self.root_position, dtype=float).reshape(3)
        jp = np.asarray(self.joint_positions, dtype=float)
        ja = np.asarray(self.joint_angles, dtype=float).reshape(-1)
        if jp.ndim != 2 or jp.shape[1] != 3:
            raise ValidationError(f"joint_positions must be (J, 3), got {jp.shape}")
        if jp.shape[0] != ja.shape[0]:
            raise ValidationError("joint_positions and joint_angles disagree on J")
        if not (math.isfinite(self.timestamp) and np.isfinite(rp).all()
                and np.isfinite(jp).all() and np.isfinite(ja).all()):
            raise ValidationError("non-finite value in pose frame")
        object.__setattr__(self, "root_position", rp)
        object.__setattr__(self, "joint_positions", jp)
        object.__setattr__(self, "joint_angles", ja)

    @property
    def joint_count(self) -> int:
        return self.joint_positions.shape[0]

    @classmethod
    def _unchecked(cls, timestamp, root_position, root_orientation,
                   joint_positions, joint_angles) -> "PoseFrame":
        """Skip per-frame validation; caller must have validated the arrays."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "timestamp", timestamp)
        object.__setattr__(obj, "root_position", root_position)
        object.__setattr__(obj, "root_orientation", root_orientation)
        object.__setattr__(obj, "joint_positions", joint_positions)
        object.__setattr__(obj, "joint_angles", joint_angles)
        return obj


@dataclass
class MotionSequence:
    """Ordered frames plus skeleton metadata; the unit of ingestion and scoring."""

    skeleton: Skeleton
    frames: list[PoseFrame]
    nominal_rate: float
    difficulty: Difficulty = Difficulty.EASY
    song_id: str = "unnamed"

    def __post_init__(self):
        if len(self.frames) < 2:
            raise ValidationError("a motion sequence needs at least 2 frames")
        if self.nominal_rate <= 0:
            raise ValidationError("nominal_rate must be positive")
        prev = -math.inf
        for f in self.frames:
            if f.timestamp <= prev:
                raise ValidationError("timestamps must be strictly increasing")
            prev = f.timestamp
            if f.joint_count != self.skeleton.joint_count:
                raise ValidationError(
                    f"frame has {f.joint_count} joints, skeleton has "
                    f"{self.skeleton.joint_count}"
                )

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def duration(self) -> float:
        return self.frames[-1].timestamp - self.frames[0].timestamp

    # --- array views (stacked copies) -------------------------------------

    def times(self) -> np.ndarray:
        return np.array([f.timestamp for f in self.frames])

    def root_positions(self) -> np.ndarray:
        return np.stack([f.root_position for f in self.frames])

    def root_orientations(self) -> np.ndarray:
        """(T, 4) wxyz rows."""
        return np.stack([f.root_orientation.as_array() for f in self.frames])

    def joint_positions(self) -> np.ndarray:
        """(T, J, 3) world-frame joint positions."""
        return np.stack([f.joint_positions for f in self.frames])

    def joint_angles(self) -> np.ndarray:
        """(T, J) joint angles in radians."""
        return np.stack([f.joint_angles for f in self.frames])

    def with_frames(self, frames: Sequence[PoseFrame], *,
                    nominal_rate: float | None = None) -> "MotionSequence":
        return MotionSequence(
            skeleton=self.skeleton,
            frames=list(frames),
            nominal_rate=self.nominal_rate if nominal_rate is None else nominal_rate,
            difficulty=self.difficulty,
            song_id=self.song_id,
        )


def frames_from_arrays(times, root_pos, root_quat_wxyz, joint_pos, joint_ang) -> list[PoseFrame]:
    """Assemble PoseFrames from stacked arrays (inverse of the array views).

    Validation and quaternion canonicalization happen once over the whole
    batch, so the frames see the same invariants as ordinary construction.
    """
    times = np.asarray(times, dtype=float)
    root_pos = np.asarray(root_pos, dtype=float)
    q = np.array(root_quat_wxyz, dtype=float)
    joint_pos = np.asarray(joint_pos, dtype=float)
    joint_ang = np.asarray(joint_ang, dtype=float)
    t = len(times)
    if root_pos.shape != (t, 3) or q.shape != (t, 4) \
            or joint_pos.ndim != 3 or joint_pos.shape[::2] != (t, 3) \
            or joint_ang.shape != (t, joint_pos.shape[1]):
        raise ValidationError("frame arrays disagree on shape")
    if not (np.isfinite(times).all() and np.isfinite(root_pos).all()
            and np.isfinite(q).all() and np.isfinite(joint_pos).all()
            and np.isfinite(joint_ang).all()):
        raise ValidationError("non-finite value in frame arrays")
    norms = np.linalg.norm(q, axis=1)
    if (norms < 1e-12).any():
        raise ValidationError("zero-norm quaternion in frame arrays")
    q /= norms[:, None]
    flip = q[:, 0] < 0.0
    q[flip] = -q[flip]
    quats = [Quaternion._unchecked(q[k, 0], q[k, 1], q[k, 2], q[k, 3])
             for k in range(t)]
    return [
        PoseFrame._unchecked(float(times[k]), root_pos[k], quats[k],
                             joint_pos[k], joint_ang[k])
        for k in range(t)
    ]


def resample_sequence(seq: MotionSequence, new_times, *,
                      nominal_rate: float | None = None) -> MotionSequence:
    """Sample a sequence at arbitrary timestamps (LERP positions/angles, SLERP
    orientations between the bracketing frames; clamped at the ends)."""
    new_times = np.asarray(new_times, dtype=float)
    if new_times.ndim != 1 or len(new_times) < 2:
        raise ValidationError("need at least 2 resample timestamps")
    t = seq.times()
    idx = np.clip(np.searchsorted(t, new_times, side="right") - 1, 0, len(t) - 2)
    span = t[idx + 1] - t[idx]
    u = np.clip((new_times - t[idx]) / span, 0.0, 1.0)

    pos = seq.joint_positions()
    ang = seq.joint_angles()
    root = seq.root_positions()
    quat = seq.root_orientations()

    w = u[:, None]
    new_root = (1.0 - w) * root[idx] + w * root[idx + 1]
    new_ang = (1.0 - w) * ang[idx] + w * ang[idx + 1]
    w3 = u[:, None, None]
    new_pos = (1.0 - w3) * pos[idx] + w3 * pos[idx + 1]
    new_quat = slerp_many(quat[idx], quat[idx + 1], u)

    frames = frames_from_arrays(new_times, new_root, new_quat, new_pos, new_ang)
    rate = nominal_rate
    if rate is None:
        dt = np.diff(new_times)
        rate = 1.0 / float(np.median(dt))
    return seq.with_frames(frames, nominal_rate=rate)


def sequences_approx_equal(a: MotionSequence, b: MotionSequence, tol: float = 1e-9) -> bool:
    """Numeric equality of two sequences (timestamps, root, joints, angles)."""
    if len(a) != len(b) or a.skeleton.joint_count != b.skeleton.joint_count:
        return False
    for fa, fb in zip(a.frames, b.frames):
        if abs(fa.timestamp - fb.timestamp) > tol:
            return False
        if not fa.root_orientation.approx_equal(fb.root_orientation, tol):
            return False
        if (np.abs(fa.root_position - fb.root_position).max() > tol
                or np.abs(fa.joint_positions - fb.joint_positions).max() > tol
                or np.abs(fa.joint_angles - fb.joint_angles).max() > tol):
            return False
    return True


# --- sjd-motion v1 file format ---------------------------------------------
#
#   # sjd-motion v1
#   joints=<J> rate=<Hz> height=<m> effector=<idx> song=<id> difficulty=<easy|hard>
#   <t> <px py pz> <qw qx qy qz> <a_0..a_{J-1}> <j0x j0y j0z ... >
#
# One data line per frame; '#'-prefixed lines are comments.


def write_motion_file(seq: MotionSequence, path) -> None:
    """Write a sequence; floats carry 9+ significant digits so the round-trip
    is lossless at 1e-9."""
    sk = seq.skeleton
    lines = [_MAGIC]
    lines.append(
        f"joints={sk.joint_count} rate={seq.nominal_rate:.9g} "
        f"height={sk.nominal_height:.9g} effector={sk.tracked_effector} "
        f"song={seq.song_id} difficulty={seq.difficulty.value}"
    )
    for f in seq.frames:
        q = f.root_orientation
        vals = [f.timestamp, *f.root_position, q.w, q.x, q.y, q.z,
                *f.joint_angles, *f.joint_positions.reshape(-1)]
        lines.append(" ".join(f"{v:.12g}" for v in vals))
    Path(path).write_text("\n".join(lines) + "\n")


def read_motion_file(path) -> MotionSequence:
    """Parse and validate an `sjd-motion v1` file."""
    raw = Path(path).read_text().splitlines()
    if not raw or raw[0].strip() != _MAGIC:
        raise FormatError(f"{path}: missing '{_MAGIC}' header line")
    header = None
    data_lines = []
    for line in raw[1:]:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = line
        else:
            data_lines.append(line)
    if header is None:
        raise FormatError(f"{path}: missing metadata header line")

    meta = {}
    for tok in header.split():
        if "=" not in tok:
            raise FormatError(f"{path}: bad header token {tok!r}")
        key, val = tok.split("=", 1)
        meta[key] = val
    try:
        joints = int(meta["joints"])
        rate = float(meta["rate"])
        height = float(meta["height"])
        effector = int(meta["effector"])
        song = meta.get("song", "unnamed")
        difficulty = Difficulty(meta.get("difficulty", "easy"))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: malformed header ({exc})") from exc
    if joints <= 0:
        raise FormatError(f"{path}: joints={joints} not positive")

    skeleton = Skeleton.default(joints, nominal_height=height, tracked_effector=effector)
    expected = 8 + 4 * joints
    frames = []
    for i, line in enumerate(data_lines):
        cols = line.split()
        if len(cols) != expected:
            raise FormatError(
                f"{path}: line {i + 3}: expected {expected} columns, got {len(cols)}"
            )
        try:
            v = np.array([float(c) for c in cols])
        except ValueError as exc:
            raise FormatError(f"{path}: line {i + 3}: {exc}") from exc
        if not np.isfinite(v).all():
            raise ValidationError(f"{path}: line {i + 3}: non-finite value")
        frames.append(
            PoseFrame(
                timestamp=v[0],
                root_position=v[1:4],
                root_orientation=Quaternion.from_wxyz(v[4:8]),
                joint_positions=v[8 + joints:].reshape(joints, 3),
                joint_angles=v[8:8 + joints],
            )
        )
    return MotionSequence(
        skeleton=skeleton, frames=frames, nominal_rate=rate,
        difficulty=difficulty, song_id=song,
    )
