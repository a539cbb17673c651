import numpy as np
import pytest

from sjdbench import MotionSequence, PoseFrame, Quaternion, Skeleton, make_demo_songs
from sjdbench.motion import Difficulty


@pytest.fixture(scope="session")
def demo_songs():
    return make_demo_songs()


@pytest.fixture(scope="session")
def easy_song(demo_songs):
    return demo_songs[0]


@pytest.fixture(scope="session")
def hard_song(demo_songs):
    return demo_songs[3]


def simple_sequence(n_frames=10, joints=2, rate=10.0, difficulty=Difficulty.EASY,
                    song_id="unit"):
    """Small deterministic sequence with mildly varying values."""
    sk = Skeleton.default(joints, nominal_height=1.7, tracked_effector=0)
    frames = []
    for i in range(n_frames):
        t = i / rate
        frames.append(PoseFrame(
            timestamp=t,
            root_position=[0.1 * i, 0.05 * i, 1.0 + 0.01 * i],
            root_orientation=Quaternion.from_axis_angle([0, 0, 1], 0.05 * i),
            joint_positions=np.arange(joints * 3).reshape(joints, 3) * 0.01 + 0.02 * i,
            joint_angles=np.linspace(0.0, 0.5, joints) + 0.03 * i,
        ))
    return MotionSequence(skeleton=sk, frames=frames, nominal_rate=rate,
                          difficulty=difficulty, song_id=song_id)


@pytest.fixture
def small_seq():
    return simple_sequence()


def static_copy(seq):
    """Every frame frozen at the sequence's first pose."""
    f0 = seq.frames[0]
    frames = [
        PoseFrame(timestamp=f.timestamp, root_position=f0.root_position,
                  root_orientation=f0.root_orientation,
                  joint_positions=f0.joint_positions, joint_angles=f0.joint_angles)
        for f in seq.frames
    ]
    return seq.with_frames(frames)
