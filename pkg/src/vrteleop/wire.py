"""Fixed-layout little-endian datagram codec and UDP endpoints.

Header (16 bytes): magic ``b"HP"``, version u8, type u8, seq u32, timestamp_us u64.

Hand pose (type 0x01, 80 bytes): position 3 x f64, quaternion (w, x, y, z)
4 x f64, confidence f64.

Joint state (type 0x02, 128 bytes): positions 7 x f64, velocities 7 x f64.
"""
from __future__ import annotations

import enum
import logging
import math
import socket
import struct
import threading
import time
from dataclasses import dataclass
from typing import Callable

from .geometry import Pose, Quat

log = logging.getLogger(__name__)

MAGIC = b"HP"
VERSION = 0x01
TYPE_HAND = 0x01
TYPE_JOINT = 0x02

HAND_STRUCT = struct.Struct("<2sBBIQ3d4dd")
JOINT_STRUCT = struct.Struct("<2sBBIQ7d7d")
HAND_SIZE = HAND_STRUCT.size
JOINT_SIZE = JOINT_STRUCT.size

HAND_PORT = 47800
JOINT_PORT = 47801
DEFAULT_MAX_AGE_US = 100_000

QUAT_TOL = 1e-6
U32_MAX = 2**32 - 1
U64_MAX = 2**64 - 1


class WireErrorKind(enum.Enum):
    BAD_MAGIC = "BadMagic"
    BAD_VERSION = "BadVersion"
    BAD_TYPE = "BadType"
    TRUNCATED = "Truncated"
    NON_UNIT_QUAT = "NonUnitQuat"
    BAD_VALUE = "BadValue"


class WireError(ValueError):
    def __init__(self, kind: WireErrorKind, detail: str = ""):
        super().__init__(f"{kind.value}: {detail}" if detail else kind.value)
        self.kind = kind


@dataclass(frozen=True)
class HandSample:
    seq: int
    timestamp_us: int
    pose: Pose
    confidence: float = 1.0


@dataclass(frozen=True)
class JointStateMsg:
    seq: int
    timestamp_us: int
    positions: tuple[float, ...]
    velocities: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(float(x) for x in self.positions))
        object.__setattr__(self, "velocities", tuple(float(x) for x in self.velocities))


def _check_header(seq: int, timestamp_us: int):
    if not (0 <= seq <= U32_MAX):
        raise WireError(WireErrorKind.BAD_VALUE, f"seq {seq} outside u32")
    if not (0 <= timestamp_us <= U64_MAX):
        raise WireError(WireErrorKind.BAD_VALUE, f"timestamp {timestamp_us} outside u64")


def encode_hand(s: HandSample) -> bytes:
    _check_header(s.seq, s.timestamp_us)
    q = s.pose.orientation
    if abs(math.sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z) - 1.0) > QUAT_TOL:
        raise WireError(WireErrorKind.NON_UNIT_QUAT)
    if not (0.0 <= s.confidence <= 1.0):
        raise WireError(WireErrorKind.BAD_VALUE, f"confidence {s.confidence} outside [0, 1]")
    return HAND_STRUCT.pack(MAGIC, VERSION, TYPE_HAND, s.seq, s.timestamp_us,
                            *s.pose.position, q.w, q.x, q.y, q.z, s.confidence)


def encode_joint(m: JointStateMsg) -> bytes:
    _check_header(m.seq, m.timestamp_us)
    if len(m.positions) != 7 or len(m.velocities) != 7:
        raise WireError(WireErrorKind.BAD_VALUE, "joint messages carry exactly 7 joints")
    if not all(math.isfinite(x) for x in m.positions + m.velocities):
        raise WireError(WireErrorKind.BAD_VALUE, "joint values must be finite")
    return JOINT_STRUCT.pack(MAGIC, VERSION, TYPE_JOINT, m.seq, m.timestamp_us,
                             *m.positions, *m.velocities)


def _check_frame(b: bytes, msg_type: int, size: int):
    if len(b) < 2:
        raise WireError(WireErrorKind.TRUNCATED, f"{len(b)} bytes")
    if b[:2] != MAGIC:
        raise WireError(WireErrorKind.BAD_MAGIC)
    if len(b) < 4:
        raise WireError(WireErrorKind.TRUNCATED, f"{len(b)} bytes")
    if b[2] != VERSION:
        raise WireError(WireErrorKind.BAD_VERSION, f"version {b[2]}")
    if b[3] != msg_type:
        raise WireError(WireErrorKind.BAD_TYPE, f"type {b[3]}")
    if len(b) != size:
        raise WireError(WireErrorKind.TRUNCATED, f"{len(b)} bytes, expected {size}")


def decode_hand(b: bytes) -> HandSample:
    b = bytes(b)
    _check_frame(b, TYPE_HAND, HAND_SIZE)
    _, _, _, seq, ts, px, py, pz, qw, qx, qy, qz, conf = HAND_STRUCT.unpack(b)
    norm = math.sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
    if not abs(norm - 1.0) <= QUAT_TOL:
        raise WireError(WireErrorKind.NON_UNIT_QUAT, f"norm {norm}")
    if not all(math.isfinite(x) for x in (px, py, pz)):
        raise WireError(WireErrorKind.BAD_VALUE, "non-finite position")
    if not 0.0 <= conf <= 1.0:
        raise WireError(WireErrorKind.BAD_VALUE, f"confidence {conf}")
    return HandSample(seq, ts, Pose((px, py, pz), Quat(qw, qx, qy, qz)), conf)


def decode_joint(b: bytes) -> JointStateMsg:
    b = bytes(b)
    _check_frame(b, TYPE_JOINT, JOINT_SIZE)
    vals = JOINT_STRUCT.unpack(b)
    seq, ts, data = vals[3], vals[4], vals[5:]
    if not all(math.isfinite(x) for x in data):
        raise WireError(WireErrorKind.BAD_VALUE, "non-finite joint value")
    return JointStateMsg(seq, ts, data[:7], data[7:])


def decode(b: bytes) -> HandSample | JointStateMsg:
    """Decode either message type, dispatching on the type byte."""
    b = bytes(b)
    if len(b) >= 4 and b[:2] == MAGIC and b[2] == VERSION and b[3] == TYPE_JOINT:
        return decode_joint(b)
    return decode_hand(b)


class Verdict(enum.Enum):
    ACCEPT = "accept"
    DROP_STALE = "stale"
    DROP_REORDERED = "reordered"


def freshness_gate(last_accepted_seq: int | None, seq: int, timestamp_us: int, now_us: int,
                   max_age_us: int | None = DEFAULT_MAX_AGE_US) -> Verdict:
    """Latest-only admission: newer sequence number and not older than ``max_age_us``."""
    if last_accepted_seq is not None and seq <= last_accepted_seq:
        return Verdict.DROP_REORDERED
    if max_age_us is not None and now_us - timestamp_us > max_age_us:
        return Verdict.DROP_STALE
    return Verdict.ACCEPT


class Mailbox:
    """Single-slot latest-value handover between a writer and a reader thread."""

    def __init__(self):
        self._lock = threading.Lock()
        self._value = None
        self._version = 0

    def put(self, value) -> None:
        with self._lock:
            self._value = value
            self._version += 1

    def take(self):
        """Return the newest value and clear the slot (None when empty)."""
        with self._lock:
            value, self._value = self._value, None
            return value

    def peek(self):
        with self._lock:
            return self._value

    @property
    def version(self) -> int:
        with self._lock:
            return self._version


def monotonic_us() -> int:
    return time.monotonic_ns() // 1000


class GateState:
    """Freshness gate bookkeeping for one stream.

    With ``align_clocks`` the age is measured relative to the smallest
    receive-minus-send offset seen so far, which removes a constant clock
    offset between sender and receiver.
    """

    def __init__(self, max_age_us: int | None = DEFAULT_MAX_AGE_US, align_clocks: bool = False):
        self.max_age_us = max_age_us
        self.align_clocks = align_clocks
        self.last_seq: int | None = None
        self.min_offset: int | None = None
        self.accepted = 0
        self.stale = 0
        self.reordered = 0

    def admit(self, seq: int, timestamp_us: int, now_us: int) -> Verdict:
        ts = timestamp_us
        if self.align_clocks:
            off = now_us - timestamp_us
            if self.min_offset is None or off < self.min_offset:
                self.min_offset = off
            ts = timestamp_us + self.min_offset
        verdict = freshness_gate(self.last_seq, seq, ts, now_us, self.max_age_us)
        if verdict is Verdict.ACCEPT:
            self.last_seq = seq
            self.accepted += 1
        elif verdict is Verdict.DROP_STALE:
            self.stale += 1
        else:
            self.reordered += 1
        return verdict


class UdpReceiver:
    """Background loop: receive datagrams, decode, gate, publish to a mailbox."""

    def __init__(self, decoder: Callable[[bytes], object], port: int, host: str = "127.0.0.1",
                 gate: GateState | None = None, clock: Callable[[], int] = monotonic_us,
                 on_message: Callable[[object], None] | None = None, timeout_s: float = 0.05):
        self.decoder = decoder
        self.gate = gate if gate is not None else GateState(align_clocks=True)
        self.clock = clock
        self.on_message = on_message
        self.mailbox = Mailbox()
        self.decode_errors = 0
        self._stop = threading.Event()
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind((host, port))
        self._sock.settimeout(timeout_s)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._sock.getsockname()

    def poll_once(self) -> bool:
        try:
            data, _ = self._sock.recvfrom(2048)
        except socket.timeout:
            return False
        try:
            msg = self.decoder(data)
        except WireError as exc:
            self.decode_errors += 1
            log.debug("dropped datagram: %s", exc)
            return False
        if self.gate.admit(msg.seq, msg.timestamp_us, self.clock()) is Verdict.ACCEPT:
            self.mailbox.put(msg)
            if self.on_message is not None:
                self.on_message(msg)
            return True
        return False

    def _run(self):
        while not self._stop.is_set():
            try:
                self.poll_once()
            except OSError:
                if self._stop.is_set():
                    break
                raise

    def start(self) -> UdpReceiver:
        self._thread = threading.Thread(target=self._run, name="udp-receiver", daemon=True)
        self._thread.start()
        return self

    def close(self):
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=1.0)
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class UdpSender:
    def __init__(self, host: str = "127.0.0.1", port: int = HAND_PORT):
        self.dest = (host, port)
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)

    def send_bytes(self, data: bytes):
        self._sock.sendto(data, self.dest)

    def send_hand(self, s: HandSample):
        self.send_bytes(encode_hand(s))

    def send_joint(self, m: JointStateMsg):
        self.send_bytes(encode_joint(m))

    def close(self):
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
