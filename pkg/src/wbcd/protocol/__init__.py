"""Teleoperation wire protocol: binary codec, pub/sub sessions, hub, bridges."""

from .codec import (
    FLAG_ECHO,
    HEADER_SIZE,
    MAGIC,
    MAX_PAYLOAD,
    VERSION,
    BadMagic,
    CommandRetarget,
    ControlOp,
    EventKind,
    FrameHeader,
    FrameMsg,
    JointStateMsg,
    LengthMismatch,
    Message,
    MessageType,
    PayloadTooLarge,
    SessionControl,
    SessionEvent,
    TruncatedFrame,
    UnknownMsgType,
    UnsupportedVersion,
    WireError,
    decode,
    encode,
)
from .server import Hub, PortInUse, ProtocolViolation, TeleopServer
from .session import (
    TOPIC_COMMANDS,
    TOPIC_CONTROL,
    TOPIC_EVENTS,
    TOPIC_JOINTS,
    VIDEO_TOPICS,
    LatencyStats,
    NoSamples,
    NotSubscribed,
    Session,
    SessionClosed,
    TopicMismatch,
    latency_stats,
    session_poll,
    session_publish,
    topic_of,
)
from .transport import LoopbackTransport, TcpTransport, connect_tcp, loopback_pair
from .wsbridge import WebSocketBridge

__all__ = [
    "MAGIC",
    "VERSION",
    "HEADER_SIZE",
    "MAX_PAYLOAD",
    "FLAG_ECHO",
    "MessageType",
    "ControlOp",
    "EventKind",
    "CommandRetarget",
    "JointStateMsg",
    "FrameMsg",
    "SessionControl",
    "SessionEvent",
    "Message",
    "FrameHeader",
    "encode",
    "decode",
    "WireError",
    "BadMagic",
    "UnsupportedVersion",
    "UnknownMsgType",
    "TruncatedFrame",
    "LengthMismatch",
    "PayloadTooLarge",
    "Session",
    "SessionClosed",
    "NotSubscribed",
    "NoSamples",
    "TopicMismatch",
    "LatencyStats",
    "topic_of",
    "session_publish",
    "session_poll",
    "latency_stats",
    "TOPIC_COMMANDS",
    "TOPIC_JOINTS",
    "TOPIC_EVENTS",
    "TOPIC_CONTROL",
    "VIDEO_TOPICS",
    "loopback_pair",
    "connect_tcp",
    "LoopbackTransport",
    "TcpTransport",
    "Hub",
    "TeleopServer",
    "PortInUse",
    "ProtocolViolation",
    "WebSocketBridge",
]
