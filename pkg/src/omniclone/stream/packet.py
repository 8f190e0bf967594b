"""Bit-exact UDP datagram codec.

Layout (all little-endian):
    magic      4 bytes  "OCL1"
    version    1 byte   = 1
    msg_type   1 byte   0=frames, 1=calibration, 2=heartbeat
    flags      2 bytes
    seq        4 bytes  unsigned, monotone per session
    send_ts_us 8 bytes  unsigned microseconds
    frame_count 2 bytes unsigned
    n_bodies   2 bytes  unsigned
    n_joints   2 bytes  unsigned
    payload    frame_count x [root_lin_vel 3xf32,
                              per body (pos 3xf32, quat 4xf32),
                              joint_pos n x f32]
    crc32      4 bytes  IEEE, over all preceding bytes

Datagrams larger than 1400 bytes are rejected at encode time.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from ..errors import CorruptionError, InputError, ProtocolError, TruncationError

MAGIC = b"OCL1"
VERSION = 1
MSG_FRAMES = 0
MSG_CALIBRATION = 1
MSG_HEARTBEAT = 2

MAX_DATAGRAM = 1400
HEADER = struct.Struct("<4sBBHIQHHH")
HEADER_LEN = HEADER.size  # 26
CRC_LEN = 4


@dataclass(frozen=True, eq=False)
class PacketFrame:
    """One frame of the command stream as carried on the wire (float32)."""

    root_lin_vel: np.ndarray  # (3,)
    body_pos: np.ndarray  # (K, 3)
    body_quat: np.ndarray  # (K, 4)
    joint_pos: np.ndarray  # (n,)

    def __post_init__(self):
        for name in ("root_lin_vel", "body_pos", "body_quat", "joint_pos"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float32)
            object.__setattr__(self, name, arr)
        if self.root_lin_vel.shape != (3,):
            raise InputError("root_lin_vel must be a 3-vector")
        k = self.body_pos.shape[0]
        if self.body_pos.shape != (k, 3) or self.body_quat.shape != (k, 4):
            raise InputError("body_pos/body_quat shapes inconsistent")
        if self.joint_pos.ndim != 1:
            raise InputError("joint_pos must be a vector")

    @property
    def n_bodies(self) -> int:
        return self.body_pos.shape[0]

    @property
    def n_joints(self) -> int:
        return self.joint_pos.shape[0]


@dataclass(frozen=True, eq=False)
class StreamPacket:
    msg_type: int
    seq: int
    send_ts_us: int
    frames: tuple[PacketFrame, ...] = ()
    flags: int = 0
    n_bodies: int = 0
    n_joints: int = 0

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if self.frames:
            k = self.frames[0].n_bodies
            n = self.frames[0].n_joints
            if self.n_bodies == 0 and self.n_joints == 0:
                object.__setattr__(self, "n_bodies", k)
                object.__setattr__(self, "n_joints", n)
            for f in self.frames:
                if f.n_bodies != self.n_bodies or f.n_joints != self.n_joints:
                    raise InputError("frames disagree on body/joint counts")
        if not 0 <= self.seq < 2**32:
            raise InputError("seq out of uint32 range")
        if not 0 <= self.send_ts_us < 2**64:
            raise InputError("send_ts_us out of uint64 range")


def heartbeat(seq: int, send_ts_us: int) -> StreamPacket:
    return StreamPacket(msg_type=MSG_HEARTBEAT, seq=seq, send_ts_us=send_ts_us)


def frame_bytes(k: int, n: int) -> int:
    return 4 * (3 + 7 * k + n)


def packet_bytes(frame_count: int, k: int, n: int) -> int:
    return HEADER_LEN + frame_count * frame_bytes(k, n) + CRC_LEN


def encode_packet(packet: StreamPacket) -> bytes:
    total = packet_bytes(len(packet.frames), packet.n_bodies, packet.n_joints)
    if total > MAX_DATAGRAM:
        raise InputError(
            f"datagram of {total} bytes exceeds the {MAX_DATAGRAM}-byte budget"
        )
    parts = [
        HEADER.pack(
            MAGIC,
            VERSION,
            packet.msg_type,
            packet.flags,
            packet.seq,
            packet.send_ts_us,
            len(packet.frames),
            packet.n_bodies,
            packet.n_joints,
        )
    ]
    for f in packet.frames:
        parts.append(f.root_lin_vel.tobytes())
        body = np.concatenate([f.body_pos, f.body_quat], axis=1)
        parts.append(np.ascontiguousarray(body, dtype=np.float32).tobytes())
        parts.append(f.joint_pos.tobytes())
    body = b"".join(parts)
    crc = zlib.crc32(body) & 0xFFFFFFFF
    return body + struct.pack("<I", crc)


def decode_packet(data: bytes) -> StreamPacket:
    if len(data) < HEADER_LEN + CRC_LEN:
        raise TruncationError(f"datagram of {len(data)} bytes is shorter than a header")
    magic, version, msg_type, flags, seq, ts, frame_count, k, n = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ProtocolError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ProtocolError(f"unsupported version {version}")
    expected = packet_bytes(frame_count, k, n)
    if len(data) != expected:
        raise TruncationError(
            f"datagram of {len(data)} bytes, expected {expected} for {frame_count} frames"
        )
    crc = struct.unpack_from("<I", data, len(data) - CRC_LEN)[0]
    actual = zlib.crc32(data[:-CRC_LEN]) & 0xFFFFFFFF
    if crc != actual:
        raise CorruptionError(f"crc mismatch: trailer {crc:#010x}, computed {actual:#010x}")
    frames = []
    offset = HEADER_LEN
    per_frame = frame_bytes(k, n)
    for _ in range(frame_count):
        chunk = np.frombuffer(data, dtype="<f4", count=per_frame // 4, offset=offset)
        root_lin_vel = chunk[:3]
        body = chunk[3 : 3 + 7 * k].reshape(k, 7)
        joint_pos = chunk[3 + 7 * k :]
        frames.append(
            PacketFrame(
                root_lin_vel=root_lin_vel,
                body_pos=body[:, :3],
                body_quat=body[:, 3:],
                joint_pos=joint_pos,
            )
        )
        offset += per_frame
    return StreamPacket(
        msg_type=msg_type,
        seq=seq,
        send_ts_us=ts,
        frames=tuple(frames),
        flags=flags,
        n_bodies=k,
        n_joints=n,
    )


def packet_frame_from_motion(frame, model) -> PacketFrame:
    """Project a motion Frame onto the wire schema (key bodies + joints)."""
    if frame.body_pos is None or frame.body_quat is None:
        raise InputError("frame lacks body kinematics; derive them before streaming")
    return PacketFrame(
        root_lin_vel=frame.root_lin_vel,
        body_pos=frame.body_pos,
        body_quat=frame.body_quat,
        joint_pos=frame.joint_pos,
    )


def packets_equal(a: StreamPacket, b: StreamPacket) -> bool:
    if (
        a.msg_type != b.msg_type
        or a.seq != b.seq
        or a.send_ts_us != b.send_ts_us
        or a.flags != b.flags
        or a.n_bodies != b.n_bodies
        or a.n_joints != b.n_joints
        or len(a.frames) != len(b.frames)
    ):
        return False
    for fa, fb in zip(a.frames, b.frames):
        if not (
            np.array_equal(fa.root_lin_vel, fb.root_lin_vel)
            and np.array_equal(fa.body_pos, fb.body_pos)
            and np.array_equal(fa.body_quat, fb.body_quat)
            and np.array_equal(fa.joint_pos, fb.joint_pos)
        ):
            return False
    return True
