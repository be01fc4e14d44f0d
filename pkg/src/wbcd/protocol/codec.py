"""Binary wire codec for the teleoperation link.

Every frame is ``header + payload``:

    magic     4 bytes  b"WBTP"
    version   u8       1
    msg_type  u8       see MessageType
    flags     u16      bit 0: echo (set by a hub returning a heartbeat)
    seq       u32      per-topic monotonic counter
    send_time_ns u64   sender monotonic clock
    payload_len  u32   length of the payload that follows

All integers are little-endian. The payload layout is fixed per message
type; see docs/wire-protocol.md for the byte-level reference. Decoding is
total over arbitrary byte strings: every malformed input maps to one of the
typed errors below, and a decode that raises consumes nothing.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Tuple, Union

MAGIC = b"WBTP"
VERSION = 1
HEADER_FMT = "<4sBBHIQI"
HEADER_SIZE = struct.calcsize(HEADER_FMT)  # 24 bytes
MAX_PAYLOAD = 16 * 1024 * 1024

FLAG_ECHO = 0x0001


class MessageType(IntEnum):
    COMMAND_RETARGET = 1
    JOINT_STATE = 2
    FRAME = 3
    SESSION_CONTROL = 4
    SESSION_EVENT = 5


class WireError(ValueError):
    """Base class for codec failures."""


class BadMagic(WireError):
    pass


class UnsupportedVersion(WireError):
    pass


class UnknownMsgType(WireError):
    pass


class TruncatedFrame(WireError):
    """More bytes are required to finish this frame; nothing was consumed."""


class LengthMismatch(WireError):
    """Declared lengths or payload structure are inconsistent with the type."""


class PayloadTooLarge(WireError):
    pass


# ---------------------------------------------------------------------------
# Message types. Fields are plain tuples/ints/bytes so equality is exact and
# round-trip tests can compare messages directly.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CommandRetarget:
    """Operator hand poses plus clutch/gripper button state."""

    left_position: Tuple[float, float, float]
    left_quat: Tuple[float, float, float, float]  # w, x, y, z
    right_position: Tuple[float, float, float]
    right_quat: Tuple[float, float, float, float]
    clutch_engaged: bool
    left_gripper_closed: bool
    right_gripper_closed: bool

    _PAYLOAD_FMT = "<14d3B"
    PAYLOAD_SIZE = struct.calcsize(_PAYLOAD_FMT)  # 115 bytes

    def to_payload(self) -> bytes:
        return struct.pack(
            self._PAYLOAD_FMT,
            *self.left_position,
            *self.left_quat,
            *self.right_position,
            *self.right_quat,
            int(self.clutch_engaged),
            int(self.left_gripper_closed),
            int(self.right_gripper_closed),
        )

    @classmethod
    def from_payload(cls, payload: bytes) -> "CommandRetarget":
        if len(payload) != cls.PAYLOAD_SIZE:
            raise LengthMismatch(f"CommandRetarget payload must be {cls.PAYLOAD_SIZE} bytes, got {len(payload)}")
        vals = struct.unpack(cls._PAYLOAD_FMT, payload)
        for b in vals[14:]:
            if b not in (0, 1):
                raise LengthMismatch(f"boolean byte must be 0 or 1, got {b}")
        return cls(
            left_position=vals[0:3],
            left_quat=vals[3:7],
            right_position=vals[7:10],
            right_quat=vals[10:14],
            clutch_engaged=bool(vals[14]),
            left_gripper_closed=bool(vals[15]),
            right_gripper_closed=bool(vals[16]),
        )


@dataclass(frozen=True)
class JointStateMsg:
    """Full joint state as the simulator's 18-component vector."""

    values: Tuple[float, ...]  # left 7, right 7, grippers 2, head 2

    _PAYLOAD_FMT = "<18d"
    PAYLOAD_SIZE = struct.calcsize(_PAYLOAD_FMT)  # 144 bytes

    def __post_init__(self):
        if len(self.values) != 18:
            raise ValueError(f"JointStateMsg needs 18 values, got {len(self.values)}")

    def to_payload(self) -> bytes:
        return struct.pack(self._PAYLOAD_FMT, *self.values)

    @classmethod
    def from_payload(cls, payload: bytes) -> "JointStateMsg":
        if len(payload) != cls.PAYLOAD_SIZE:
            raise LengthMismatch(f"JointStateMsg payload must be {cls.PAYLOAD_SIZE} bytes, got {len(payload)}")
        return cls(values=struct.unpack(cls._PAYLOAD_FMT, payload))


@dataclass(frozen=True)
class FrameMsg:
    """One compressed camera image."""

    camera_id: int  # 0 head, 1 wrist_left, 2 wrist_right
    frame_seq: int
    capture_time_ns: int
    codec: int  # 0 = JFIF
    width: int
    height: int
    payload: bytes

    _HEAD_FMT = "<BIQBHH"
    HEAD_SIZE = struct.calcsize(_HEAD_FMT)  # 18 bytes

    def to_payload(self) -> bytes:
        return (
            struct.pack(
                self._HEAD_FMT,
                self.camera_id,
                self.frame_seq,
                self.capture_time_ns,
                self.codec,
                self.width,
                self.height,
            )
            + self.payload
        )

    @classmethod
    def from_payload(cls, payload: bytes) -> "FrameMsg":
        if len(payload) < cls.HEAD_SIZE:
            raise LengthMismatch(f"FrameMsg payload needs at least {cls.HEAD_SIZE} bytes, got {len(payload)}")
        camera_id, frame_seq, t_ns, codec, width, height = struct.unpack_from(cls._HEAD_FMT, payload)
        body = payload[cls.HEAD_SIZE :]
        if width == 0 or height == 0:
            raise LengthMismatch("FrameMsg width/height must be positive")
        if codec == 0:
            if len(body) < 4 or body[:2] != b"\xff\xd8" or body[-2:] != b"\xff\xd9":
                raise LengthMismatch("codec 0 payload must be a JFIF stream (SOI…EOI)")
        return cls(camera_id, frame_seq, t_ns, codec, width, height, body)


class ControlOp(IntEnum):
    SUBSCRIBE = 1
    UNSUBSCRIBE = 2
    HEARTBEAT = 3


@dataclass(frozen=True)
class SessionControl:
    """Session management: topic subscription changes and heartbeats."""

    op: int
    topic: str = ""

    def to_payload(self) -> bytes:
        raw = self.topic.encode("utf-8")
        return struct.pack("<BH", self.op, len(raw)) + raw

    @classmethod
    def from_payload(cls, payload: bytes) -> "SessionControl":
        if len(payload) < 3:
            raise LengthMismatch(f"SessionControl payload needs at least 3 bytes, got {len(payload)}")
        op, topic_len = struct.unpack_from("<BH", payload)
        if op not in (ControlOp.SUBSCRIBE, ControlOp.UNSUBSCRIBE, ControlOp.HEARTBEAT):
            raise LengthMismatch(f"unknown SessionControl op {op}")
        raw = payload[3:]
        if len(raw) != topic_len:
            raise LengthMismatch(f"SessionControl topic length {topic_len} vs {len(raw)} actual")
        try:
            topic = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise LengthMismatch("SessionControl topic is not valid UTF-8") from e
        return cls(op=int(op), topic=topic)


class EventKind(IntEnum):
    ROUND_START = 1
    SUBTASK_START = 2
    COMPONENT_ACHIEVED = 3
    SUBTASK_COMPLETE = 4
    ROUND_FINISH = 5


@dataclass(frozen=True)
class SessionEvent:
    """Scoring timeline mark (round/subtask boundaries, achieved components)."""

    kind: int
    subtask_id: int = 0  # 1..3 where applicable, else 0
    event_time_ns: int = 0
    alpha: float = 0.0  # operation coefficient for SUBTASK_START, else 0
    label: str = ""  # component label for COMPONENT_ACHIEVED, else ""

    _HEAD_FMT = "<BBQdH"
    HEAD_SIZE = struct.calcsize(_HEAD_FMT)  # 20 bytes

    def to_payload(self) -> bytes:
        raw = self.label.encode("utf-8")
        return struct.pack(self._HEAD_FMT, self.kind, self.subtask_id, self.event_time_ns, self.alpha, len(raw)) + raw

    @classmethod
    def from_payload(cls, payload: bytes) -> "SessionEvent":
        if len(payload) < cls.HEAD_SIZE:
            raise LengthMismatch(f"SessionEvent payload needs at least {cls.HEAD_SIZE} bytes, got {len(payload)}")
        kind, subtask_id, t_ns, alpha, label_len = struct.unpack_from(cls._HEAD_FMT, payload)
        if kind not in tuple(EventKind):
            raise LengthMismatch(f"unknown SessionEvent kind {kind}")
        raw = payload[cls.HEAD_SIZE :]
        if len(raw) != label_len:
            raise LengthMismatch(f"SessionEvent label length {label_len} vs {len(raw)} actual")
        try:
            label = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise LengthMismatch("SessionEvent label is not valid UTF-8") from e
        return cls(kind=int(kind), subtask_id=subtask_id, event_time_ns=t_ns, alpha=alpha, label=label)


Message = Union[CommandRetarget, JointStateMsg, FrameMsg, SessionControl, SessionEvent]

_TYPE_OF_MESSAGE = {
    CommandRetarget: MessageType.COMMAND_RETARGET,
    JointStateMsg: MessageType.JOINT_STATE,
    FrameMsg: MessageType.FRAME,
    SessionControl: MessageType.SESSION_CONTROL,
    SessionEvent: MessageType.SESSION_EVENT,
}

_PARSER_OF_TYPE = {
    MessageType.COMMAND_RETARGET: CommandRetarget.from_payload,
    MessageType.JOINT_STATE: JointStateMsg.from_payload,
    MessageType.FRAME: FrameMsg.from_payload,
    MessageType.SESSION_CONTROL: SessionControl.from_payload,
    MessageType.SESSION_EVENT: SessionEvent.from_payload,
}


@dataclass(frozen=True)
class FrameHeader:
    msg_type: int
    flags: int
    seq: int
    send_time_ns: int
    payload_len: int


def message_type(msg: Message) -> MessageType:
    try:
        return _TYPE_OF_MESSAGE[type(msg)]
    except KeyError:
        raise TypeError(f"not a wire message: {type(msg).__name__}") from None


def encode(msg: Message, *, seq: int = 0, send_time_ns: int = 0, flags: int = 0) -> bytes:
    """Serialize one message into a complete wire frame."""
    payload = msg.to_payload()
    if len(payload) > MAX_PAYLOAD:
        raise PayloadTooLarge(f"payload of {len(payload)} bytes exceeds the {MAX_PAYLOAD}-byte cap")
    header = struct.pack(
        HEADER_FMT, MAGIC, VERSION, int(message_type(msg)), flags, seq & 0xFFFFFFFF, send_time_ns, len(payload)
    )
    return header + payload


def decode(data: bytes, offset: int = 0) -> Tuple[Message, FrameHeader, int]:
    """Parse exactly one frame starting at ``offset``.

    Returns ``(message, header, bytes_consumed)``. On any error nothing is
    considered consumed; ``TruncatedFrame`` specifically means the caller
    should retry once more bytes arrive.
    """
    view = memoryview(data)[offset:]
    if len(view) < 4:
        raise TruncatedFrame(f"need at least 4 bytes for the magic, have {len(view)}")
    if bytes(view[:4]) != MAGIC:
        raise BadMagic(f"bad magic {bytes(view[:4])!r}")
    if len(view) < HEADER_SIZE:
        raise TruncatedFrame(f"need {HEADER_SIZE} header bytes, have {len(view)}")
    _, version, msg_type_raw, flags, seq, send_time_ns, payload_len = struct.unpack_from(HEADER_FMT, view)
    if version != VERSION:
        raise UnsupportedVersion(f"version {version} not supported (expected {VERSION})")
    if msg_type_raw not in tuple(MessageType):
        raise UnknownMsgType(f"unknown msg_type {msg_type_raw}")
    if payload_len > MAX_PAYLOAD:
        raise LengthMismatch(f"declared payload of {payload_len} bytes exceeds the {MAX_PAYLOAD}-byte cap")
    total = HEADER_SIZE + payload_len
    if len(view) < total:
        raise TruncatedFrame(f"frame needs {total} bytes, have {len(view)}")
    payload = bytes(view[HEADER_SIZE:total])
    msg = _PARSER_OF_TYPE[MessageType(msg_type_raw)](payload)
    header = FrameHeader(
        msg_type=msg_type_raw, flags=flags, seq=seq, send_time_ns=send_time_ns, payload_len=payload_len
    )
    return msg, header, total
