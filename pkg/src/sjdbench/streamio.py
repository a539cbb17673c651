"""Datagram wire protocol for the interpolated reference stream.

Packet layout (little-endian, fixed):

    offset  size  field
    0       4     magic "SJDM"
    4       1     version (1)
    5       1     flags (bit0 = end of stream)
    6       4     sequence, u32
    10      8     timestamp, u64 microseconds
    18      2     joint count J, u16
    20      12    root position, 3 x f32
    32      16    root orientation w x y z, 4 x f32
    48      4*J   joint angles, f32 each

Total length is exactly 20 + 28 + 4*J octets. The receiver delivers frames in
strictly increasing sequence order; anything at or below the last delivered
sequence is dropped as stale (a real-time reference must never step back in
time).
"""

from __future__ import annotations

import socket
import struct
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .errors import FormatError, ValidationError
from .geometry import Quaternion
from .motion import PoseFrame

MAGIC = b"SJDM"
VERSION = 1
FLAG_END_OF_STREAM = 0x01
HEADER = struct.Struct("<4sBBIQH")
ROOT = struct.Struct("<3f4f")
HEADER_LEN = HEADER.size          # 20
FIXED_PAYLOAD_LEN = ROOT.size     # 28
DEFAULT_PORT = 47474


def packet_length(joint_count: int) -> int:
    return HEADER_LEN + FIXED_PAYLOAD_LEN + 4 * joint_count


def encode_packet(frame: PoseFrame, sequence: int, *,
                  end_of_stream: bool = False) -> bytes:
    """Serialize one frame; joint angles travel on the wire, positions do not."""
    j = frame.joint_count
    if j > 0xFFFF:
        raise ValidationError(f"joint count {j} exceeds the u16 wire field")
    if not 0 <= sequence <= 0xFFFFFFFF:
        raise ValidationError("sequence must fit in u32")
    if frame.timestamp < 0:
        raise ValidationError("wire timestamps must be non-negative")
    flags = FLAG_END_OF_STREAM if end_of_stream else 0
    q = frame.root_orientation
    head = HEADER.pack(MAGIC, VERSION, flags, sequence,
                       round(frame.timestamp * 1_000_000), j)
    body = ROOT.pack(*frame.root_position, q.w, q.x, q.y, q.z)
    angles = struct.pack(f"<{j}f", *frame.joint_angles)
    return head + body + angles


@dataclass
class DecodedPacket:
    sequence: int
    frame: PoseFrame          # joint positions are zero: not on the wire
    end_of_stream: bool


def decode_packet(data: bytes) -> DecodedPacket:
    if len(data) < HEADER_LEN:
        raise FormatError("packet shorter than header")
    magic, version, flags, sequence, ts_us, j = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if len(data) != packet_length(j):
        raise FormatError(
            f"packet length {len(data)} != {packet_length(j)} for J={j}")
    vals = ROOT.unpack_from(data, HEADER_LEN)
    angles = struct.unpack_from(f"<{j}f", data, HEADER_LEN + FIXED_PAYLOAD_LEN)
    frame = PoseFrame(
        timestamp=ts_us / 1_000_000,
        root_position=np.array(vals[:3], dtype=float),
        root_orientation=Quaternion.from_wxyz(vals[3:7]),
        joint_positions=np.zeros((j, 3)),
        joint_angles=np.array(angles, dtype=float),
    )
    return DecodedPacket(sequence=sequence, frame=frame,
                         end_of_stream=bool(flags & FLAG_END_OF_STREAM))


@dataclass
class StreamStats:
    received: int = 0
    delivered: int = 0
    dropped_stale: int = 0
    bad_magic: int = 0
    bad_version: int = 0
    truncated: int = 0
    gaps: int = 0

    @property
    def dropped_total(self) -> int:
        return self.dropped_stale + self.bad_magic + self.bad_version + self.truncated


class StreamReassembler:
    """Order-enforcing datagram consumer, independent of the transport.

    Feed raw datagrams with push(); in-order frames come back immediately,
    everything stale or malformed is counted and discarded.
    """

    def __init__(self):
        self.stats = StreamStats()
        self.last_sequence: Optional[int] = None
        self.ended = False

    def push(self, data: bytes) -> Optional[DecodedPacket]:
        self.stats.received += 1
        if len(data) < HEADER_LEN:
            self.stats.truncated += 1
            return None
        if data[:4] != MAGIC:
            self.stats.bad_magic += 1
            return None
        if data[4] != VERSION:
            self.stats.bad_version += 1
            return None
        try:
            pkt = decode_packet(data)
        except FormatError:
            self.stats.truncated += 1
            return None
        if self.last_sequence is not None and pkt.sequence <= self.last_sequence:
            self.stats.dropped_stale += 1
            return None
        if self.last_sequence is not None and pkt.sequence > self.last_sequence + 1:
            self.stats.gaps += 1
        self.last_sequence = pkt.sequence
        self.stats.delivered += 1
        if pkt.end_of_stream:
            self.ended = True
        return pkt


class FrameSender:
    """Sequence-stamping UDP sender; one instance per stream."""

    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_PORT):
        self.addr = (host, port)
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sequence = 0

    def send(self, frame: PoseFrame, *, end_of_stream: bool = False) -> int:
        self.sequence += 1
        self.sock.sendto(encode_packet(frame, self.sequence,
                                       end_of_stream=end_of_stream), self.addr)
        return self.sequence

    def close(self) -> None:
        self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class FrameReceiver:
    """UDP receiver delivering frames in sequence order until end-of-stream."""

    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_PORT,
                 *, timeout: float = 5.0, recv_buffer: int = 1 << 22):
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, recv_buffer)
        self.sock.bind((host, port))
        self.sock.settimeout(timeout)
        self.reassembler = StreamReassembler()

    @property
    def stats(self) -> StreamStats:
        return self.reassembler.stats

    @property
    def port(self) -> int:
        return self.sock.getsockname()[1]

    def frames(self, max_datagram: int = 1 << 16) -> Iterator[DecodedPacket]:
        while not self.reassembler.ended:
            try:
                data, _ = self.sock.recvfrom(max_datagram)
            except socket.timeout:
                return
            pkt = self.reassembler.push(data)
            if pkt is not None:
                yield pkt

    def close(self) -> None:
        self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
