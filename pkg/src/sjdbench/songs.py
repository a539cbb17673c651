"""Procedurally generated choreography fixtures.

Five synthetic routines (three easy, two hard) exercise the whole harness at
desk scale: a wandering root path, beat-locked limb swings with a vigorous
tracked-wrist trajectory, and joint-angle dynamics whose jerk rises sharply
with difficulty. Real captures in the same file format can be dropped in
beside them.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import Quaternion
from .motion import (
    Difficulty,
    MotionSequence,
    PoseFrame,
    RIGHT_WRIST,
    Skeleton,
)

# pelvis-relative rest offsets (x right, y forward, z up), loosely humanoid
_REST_OFFSETS = np.array([
    [0.00, 0.00, 0.00],    # pelvis
    [-0.09, 0.00, -0.06],  # left_hip
    [0.09, 0.00, -0.06],   # right_hip
    [0.00, 0.01, 0.12],    # spine1
    [-0.10, 0.00, -0.45],  # left_knee
    [0.10, 0.00, -0.45],   # right_knee
    [0.00, 0.01, 0.24],    # spine2
    [-0.10, 0.00, -0.85],  # left_ankle
    [0.10, 0.00, -0.85],   # right_ankle
    [0.00, 0.02, 0.34],    # spine3
    [-0.10, 0.08, -0.92],  # left_foot
    [0.10, 0.08, -0.92],   # right_foot
    [0.00, 0.00, 0.46],    # neck
    [-0.07, 0.02, 0.42],   # left_collar
    [0.07, 0.02, 0.42],    # right_collar
    [0.00, 0.03, 0.58],    # head
    [-0.17, 0.00, 0.44],   # left_shoulder
    [0.17, 0.00, 0.44],    # right_shoulder
    [-0.22, 0.05, 0.18],   # left_elbow
    [0.22, 0.05, 0.18],    # right_elbow
    [-0.24, 0.12, -0.04],  # left_wrist
    [0.24, 0.12, -0.04],   # right_wrist
    [-0.25, 0.16, -0.12],  # left_hand
    [0.25, 0.16, -0.12],   # right_hand
])

_LIMB_JOINTS = {
    "arms": [16, 17, 18, 19, 20, 21, 22, 23],
    "legs": [1, 2, 4, 5, 7, 8, 10, 11],
}


@dataclass(frozen=True)
class SongSpec:
    song_id: str
    difficulty: Difficulty
    move_hz: float        # limb swing frequency
    angle_amp: float      # rad
    swing_amp: float      # m, effector swing amplitude
    sharpness: float      # 3rd-harmonic mix; raises jerk without raising amp
    duration: float = 20.0
    seed: int = 0
    # live-capture jitter baked into the recording; both preprocessing paths
    # start from this raw stream, like a streamed pose estimate would
    jitter_pos: float = 0.003   # m
    jitter_angle: float = 0.006  # rad


DEMO_SONGS = [
    SongSpec("amber-waltz", Difficulty.EASY, 0.9, 0.30, 0.40, 0.00, seed=11),
    SongSpec("boardwalk-sway", Difficulty.EASY, 1.0, 0.32, 0.42, 0.05, seed=12),
    SongSpec("cedar-groove", Difficulty.EASY, 1.1, 0.30, 0.45, 0.10, seed=13),
    SongSpec("delta-rush", Difficulty.HARD, 1.7, 0.42, 0.48, 0.30, seed=14),
    SongSpec("ember-spin", Difficulty.HARD, 1.9, 0.45, 0.50, 0.35, seed=15),
]


def make_song(spec: SongSpec, rate: float = 30.0) -> MotionSequence:
    rng = np.random.default_rng(spec.seed)
    n = int(round(spec.duration * rate)) + 1
    t = np.arange(n) / rate
    skeleton = Skeleton.default(24, nominal_height=1.7,
                                tracked_effector=RIGHT_WRIST)

    # wandering root path: slow incommensurate Lissajous plus a bob
    wander_fx = 0.07 + 0.02 * rng.uniform()
    wander_fy = 0.11 + 0.02 * rng.uniform()
    root = np.zeros((n, 3))
    root[:, 0] = 0.55 * np.sin(2 * np.pi * wander_fx * t + rng.uniform(0, 2 * np.pi))
    root[:, 1] = 0.55 * np.sin(2 * np.pi * wander_fy * t + rng.uniform(0, 2 * np.pi))
    root[:, 2] = 1.0 + 0.05 * np.sin(2 * np.pi * spec.move_hz * t / 2)

    yaw = np.deg2rad(22.0) * np.sin(2 * np.pi * 0.13 * t + rng.uniform(0, 2 * np.pi))
    quats = np.stack([np.cos(yaw / 2), np.zeros(n), np.zeros(n), np.sin(yaw / 2)],
                     axis=1)

    # beat-locked joint angles; the sharpness term adds a 3rd harmonic
    phases = rng.uniform(0, 2 * np.pi, size=24)
    amps = spec.angle_amp * (0.5 + rng.uniform(size=24))
    omega = 2 * np.pi * spec.move_hz
    base = np.sin(omega * t[:, None] + phases[None, :])
    third = np.sin(3 * omega * t[:, None] + phases[None, :])
    angles = amps[None, :] * (base + spec.sharpness * third)

    # limb swings in the pelvis frame; arms lead, wrists widest
    swing = np.zeros((n, 24, 3))
    for k, j in enumerate(_LIMB_JOINTS["arms"]):
        depth = 0.35 + 0.65 * (k // 2) / 3  # collar..hand ramp
        amp = spec.swing_amp * depth
        swing[:, j, 0] = amp * 0.5 * np.sin(omega * t + phases[j])
        swing[:, j, 1] = amp * np.sin(omega * t + phases[j] + np.pi / 4)
        swing[:, j, 2] = amp * 0.7 * np.cos(omega * t + phases[j])
    for j in _LIMB_JOINTS["legs"]:
        swing[:, j, 1] = 0.12 * np.sin(omega * t / 2 + phases[j])

    cos_y, sin_y = np.cos(yaw), np.sin(yaw)
    local = _REST_OFFSETS[None, :, :] + swing
    world = np.empty_like(local)
    world[:, :, 0] = cos_y[:, None] * local[:, :, 0] - sin_y[:, None] * local[:, :, 1]
    world[:, :, 1] = sin_y[:, None] * local[:, :, 0] + cos_y[:, None] * local[:, :, 1]
    world[:, :, 2] = local[:, :, 2]
    world += root[:, None, :]

    if spec.jitter_pos > 0:
        world += rng.normal(0.0, spec.jitter_pos, size=world.shape)
        root = root + rng.normal(0.0, spec.jitter_pos, size=root.shape)
    if spec.jitter_angle > 0:
        angles = angles + rng.normal(0.0, spec.jitter_angle, size=angles.shape)

    frames = [
        PoseFrame(
            timestamp=float(t[k]),
            root_position=root[k],
            root_orientation=Quaternion.from_wxyz(quats[k]),
            joint_positions=world[k],
            joint_angles=angles[k],
        )
        for k in range(n)
    ]
    return MotionSequence(skeleton=skeleton, frames=frames, nominal_rate=rate,
                          difficulty=spec.difficulty, song_id=spec.song_id)


def make_demo_songs(rate: float = 30.0) -> list[MotionSequence]:
    """The shipped 3-easy + 2-hard fixture set."""
    return [make_song(spec, rate) for spec in DEMO_SONGS]


def write_demo_songs(out_dir, rate: float = 30.0) -> list[Path]:
    from .motion import write_motion_file

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for seq in make_demo_songs(rate):
        p = out / f"{seq.song_id}.sjd"
        write_motion_file(seq, p)
        paths.append(p)
    return paths
