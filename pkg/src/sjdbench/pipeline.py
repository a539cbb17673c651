"""Real-time keyframe upsampler.

Sparse keyframes (~5 Hz) are held in a two-slot buffer; once both slots are
filled, each arriving keyframe closes a span that is interpolated into
n_intermediate + 1 output frames (LERP positions/angles, SLERP orientation)
and emitted over the following keyframe interval. Every output frame is
therefore delivered exactly one keyframe interval after its nominal time —
the pipeline's constant delay.

Two modes share the same span arithmetic:
  * unpaced (virtual clock): single-threaded, deterministic, runs as fast as
    possible; arrival time of a keyframe is its timestamp.
  * paced (wall clock): producer thread feeds a single-slot mailbox, the
    emitter sleeps until each frame's wall deadline. The newest-wins mailbox
    is the back-pressure mechanism: a keyframe superseded before service is
    dropped and counted, so a slow sink never builds unbounded backlog.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional

from .errors import StaleFrameError, ValidationError
from .geometry import lerp, slerp
from .motion import PoseFrame

DEFAULT_KEYFRAME_INTERVAL = 0.2  # 5 Hz input


@dataclass
class InterpolatorConfig:
    n_intermediate: int = 2
    input_rate_hint: float = 5.0
    output_latency: float = DEFAULT_KEYFRAME_INTERVAL

    def __post_init__(self):
        if self.n_intermediate < 0:
            raise ValidationError("n_intermediate must be >= 0")
        if self.input_rate_hint <= 0:
            raise ValidationError("input_rate_hint must be positive")

    @property
    def output_rate_hint(self) -> float:
        return self.input_rate_hint * (self.n_intermediate + 1)


@dataclass
class KeyframeBuffer:
    """Two consecutive keyframes; emission is possible only when both are set."""

    previous: Optional[PoseFrame] = None
    current: Optional[PoseFrame] = None

    @property
    def ready(self) -> bool:
        return self.previous is not None and self.current is not None


def push_keyframe(buf: KeyframeBuffer, frame: PoseFrame) -> KeyframeBuffer:
    """Shift the buffer; keyframes must arrive with strictly increasing timestamps."""
    if buf.current is not None and frame.timestamp <= buf.current.timestamp:
        raise StaleFrameError(
            f"keyframe at t={frame.timestamp} not after t={buf.current.timestamp}"
        )
    return KeyframeBuffer(previous=buf.current, current=frame)


def interpolate_span(f_prev: PoseFrame, f_curr: PoseFrame, n: int) -> list[PoseFrame]:
    """n + 1 frames at t_prev + (i+1)/(n+1) * dt for i = 0..n; the last one
    equals f_curr."""
    if n < 0:
        raise ValidationError("n must be >= 0")
    if not f_curr.timestamp > f_prev.timestamp:
        raise ValidationError("span endpoints must be time-ordered")
    dt = f_curr.timestamp - f_prev.timestamp
    out = []
    for i in range(n + 1):
        u = (i + 1) / (n + 1)
        out.append(
            PoseFrame(
                timestamp=f_prev.timestamp + u * dt if i < n else f_curr.timestamp,
                root_position=lerp(f_prev.root_position, f_curr.root_position, u),
                root_orientation=slerp(f_prev.root_orientation, f_curr.root_orientation, u),
                joint_positions=lerp(f_prev.joint_positions, f_curr.joint_positions, u),
                joint_angles=lerp(f_prev.joint_angles, f_curr.joint_angles, u),
            )
        )
    return out


@dataclass
class PipelineStats:
    frames_in: int = 0
    frames_out: int = 0
    stale_drops: int = 0
    overrun_drops: int = 0  # keyframes superseded in the mailbox before service
    latencies: list[float] = field(default_factory=list, repr=False)
    first_emit_time: Optional[float] = None
    last_emit_time: Optional[float] = None

    @property
    def drops(self) -> int:
        return self.stale_drops + self.overrun_drops

    @property
    def output_rate_hz(self) -> float:
        if self.frames_out < 2 or self.last_emit_time == self.first_emit_time:
            return 0.0
        return (self.frames_out - 1) / (self.last_emit_time - self.first_emit_time)

    @property
    def mean_latency_s(self) -> float:
        return sum(self.latencies) / len(self.latencies) if self.latencies else 0.0

    def _record_emit(self, emit_time: float, frame_time: float) -> None:
        if self.first_emit_time is None:
            self.first_emit_time = emit_time
        self.last_emit_time = emit_time
        self.latencies.append(emit_time - frame_time)
        self.frames_out += 1


class _Mailbox:
    """Single-slot, newest-wins hand-off between one producer and one consumer."""

    def __init__(self):
        self._cond = threading.Condition()
        self._item: Optional[PoseFrame] = None
        self._closed = False
        self.overwrites = 0

    def put(self, item: PoseFrame) -> None:
        with self._cond:
            if self._item is not None:
                self.overwrites += 1
            self._item = item
            self._cond.notify()

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify()

    def take(self) -> Optional[PoseFrame]:
        """Block until an item or close; None means the stream ended."""
        with self._cond:
            while self._item is None and not self._closed:
                self._cond.wait()
            item, self._item = self._item, None
            return item


def run_pipeline(
    source: Iterable[PoseFrame],
    sink: Callable[[PoseFrame], None],
    cfg: InterpolatorConfig,
    *,
    paced: bool = False,
) -> PipelineStats:
    """Drive keyframes from ``source`` through the interpolator into ``sink``.

    Unpaced mode is deterministic and instant (virtual clock = keyframe
    timestamps). Paced mode paces emission against the wall clock and is meant
    for live streaming.
    """
    if paced:
        return _run_paced(iter(source), sink, cfg)
    return _run_virtual(iter(source), sink, cfg)


def _run_virtual(source: Iterator[PoseFrame], sink, cfg: InterpolatorConfig) -> PipelineStats:
    stats = PipelineStats()
    buf = KeyframeBuffer()
    n = cfg.n_intermediate
    for kf in source:
        stats.frames_in += 1
        try:
            buf = push_keyframe(buf, kf)
        except StaleFrameError:
            stats.stale_drops += 1
            continue
        if not buf.ready:
            continue
        arrival = kf.timestamp  # a live source delivers at the frame's own time
        for fr in interpolate_span(buf.previous, buf.current, n):
            emit_time = arrival + (fr.timestamp - buf.previous.timestamp)
            sink(fr)
            stats._record_emit(emit_time, fr.timestamp)
    return stats


def _run_paced(source: Iterator[PoseFrame], sink, cfg: InterpolatorConfig) -> PipelineStats:
    stats = PipelineStats()
    mailbox = _Mailbox()

    def produce():
        for kf in source:
            stats.frames_in += 1
            mailbox.put(kf)
        mailbox.close()

    producer = threading.Thread(target=produce, daemon=True)
    producer.start()

    origin = time.monotonic()
    origin_ts: Optional[float] = None
    buf = KeyframeBuffer()
    n = cfg.n_intermediate
    while True:
        kf = mailbox.take()
        if kf is None:
            break
        try:
            buf = push_keyframe(buf, kf)
        except StaleFrameError:
            stats.stale_drops += 1
            continue
        if origin_ts is None:
            origin_ts = kf.timestamp
        if not buf.ready:
            continue
        arrival = time.monotonic()
        for fr in interpolate_span(buf.previous, buf.current, n):
            deadline = arrival + (fr.timestamp - buf.previous.timestamp)
            delay = deadline - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            sink(fr)
            stats._record_emit(time.monotonic() - origin + origin_ts, fr.timestamp)
    producer.join()
    stats.overrun_drops = mailbox.overwrites
    return stats


def paced_file_source(seq_frames: Iterable[PoseFrame]) -> Iterator[PoseFrame]:
    """Replay frames against the wall clock at their own timestamps."""
    start = time.monotonic()
    first_ts: Optional[float] = None
    for fr in seq_frames:
        if first_ts is None:
            first_ts = fr.timestamp
        delay = (fr.timestamp - first_ts) - (time.monotonic() - start)
        if delay > 0:
            time.sleep(delay)
        yield fr
