"""Topic-addressed pub/sub sessions over a reliable byte transport.

The wire frame itself carries no topic string: the topic of a message is a
fixed function of its type (and camera for video), so both ends of a link
agree on addressing without per-frame topic bytes. Video topics use bounded
drop-oldest buffers; command and event topics are lossless and unbounded.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

from ..types import CAMERA_NAMES
from .codec import (
    FLAG_ECHO,
    CommandRetarget,
    ControlOp,
    FrameMsg,
    JointStateMsg,
    Message,
    SessionControl,
    SessionEvent,
    TruncatedFrame,
    decode,
    encode,
)

TOPIC_COMMANDS = "commands"
TOPIC_JOINTS = "joints"
TOPIC_EVENTS = "events"
TOPIC_CONTROL = "_control"
VIDEO_TOPICS = tuple(f"video/{name}" for name in CAMERA_NAMES)

DEFAULT_FRAME_BUFFER = 8
HEARTBEAT_INTERVAL_MS = 500
HEARTBEAT_MISS_LIMIT = 3


class SessionClosed(RuntimeError):
    pass


class NotSubscribed(LookupError):
    pass


class NoSamples(LookupError):
    pass


class TopicMismatch(ValueError):
    """Message type does not belong on the requested topic."""


def topic_of(msg: Message) -> str:
    """Canonical topic for a message (the wire carries no topic field)."""
    if isinstance(msg, CommandRetarget):
        return TOPIC_COMMANDS
    if isinstance(msg, JointStateMsg):
        return TOPIC_JOINTS
    if isinstance(msg, FrameMsg):
        if 0 <= msg.camera_id < len(CAMERA_NAMES):
            return VIDEO_TOPICS[msg.camera_id]
        return f"video/{msg.camera_id}"
    if isinstance(msg, SessionEvent):
        return TOPIC_EVENTS
    if isinstance(msg, SessionControl):
        return TOPIC_CONTROL
    raise TypeError(f"not a wire message: {type(msg).__name__}")


def is_video_topic(topic: str) -> bool:
    return topic.startswith("video/")


def nearest_rank(sorted_samples: List[int], pct: float) -> int:
    """Nearest-rank percentile: the ceil(p/100·N)-th smallest sample."""
    if not sorted_samples:
        raise NoSamples("no latency samples")
    rank = max(1, math.ceil(pct / 100.0 * len(sorted_samples)))
    return sorted_samples[rank - 1]


@dataclass(frozen=True)
class LatencyStats:
    count: int
    p50_ns: int
    p90_ns: int
    p99_ns: int
    max_ns: int
    out_of_order_count: int
    dropped_count: int


class TopicBuffer:
    """Receive-side queue for one topic with seq tracking.

    Video topics hold at most ``capacity`` messages, dropping the oldest;
    other topics are unbounded. Sequence gaps on arrival are counted as
    drops; stale (non-increasing) sequence numbers are rejected and counted
    as out-of-order.
    """

    def __init__(self, topic: str, capacity: int):
        self.topic = topic
        self.capacity = capacity if is_video_topic(topic) else None
        self._items: List[Message] = []
        self._next_seq: Optional[int] = None
        self.dropped = 0
        self.out_of_order = 0
        self.latency_samples_ns: List[int] = []
        self.received = 0

    def push(self, msg: Message, seq: int, latency_ns: Optional[int]) -> None:
        if self._next_seq is not None:
            if seq < self._next_seq:
                self.out_of_order += 1
                return
            if seq > self._next_seq:
                self.dropped += seq - self._next_seq
        self._next_seq = seq + 1
        self.received += 1
        if latency_ns is not None:
            self.latency_samples_ns.append(max(0, latency_ns))
        self._items.append(msg)
        if self.capacity is not None and len(self._items) > self.capacity:
            overflow = len(self._items) - self.capacity
            del self._items[:overflow]
            self.dropped += overflow

    def drain(self) -> List[Message]:
        out = self._items
        self._items = []
        return out

    def stats(self) -> LatencyStats:
        samples = sorted(self.latency_samples_ns)
        if not samples:
            raise NoSamples(f"no latency samples on topic {self.topic!r}")
        return LatencyStats(
            count=len(samples),
            p50_ns=nearest_rank(samples, 50),
            p90_ns=nearest_rank(samples, 90),
            p99_ns=nearest_rank(samples, 99),
            max_ns=samples[-1],
            out_of_order_count=self.out_of_order,
            dropped_count=self.dropped,
        )


class Session:
    """One endpoint of a teleoperation link.

    ``same_clock_domain`` must only be True when both endpoints read the
    same monotonic clock (in-process loopback); only then are one-way
    ``receive − send`` latencies meaningful. Across processes, latency is
    measured from echoed heartbeats as RTT/2 on the ``_control`` topic.
    """

    def __init__(
        self,
        transport,
        *,
        frame_buffer: int = DEFAULT_FRAME_BUFFER,
        clock_ns: Callable[[], int] = time.monotonic_ns,
        same_clock_domain: bool = False,
        heartbeat_ms: int = HEARTBEAT_INTERVAL_MS,
    ):
        self._transport = transport
        self._frame_buffer = frame_buffer
        self._clock_ns = clock_ns
        self._same_clock = same_clock_domain
        self._heartbeat_ms = heartbeat_ms
        self._send_seq: Dict[str, int] = {}
        self._buffers: Dict[str, TopicBuffer] = {}
        self._subscribed = set()
        self._rx = bytearray()
        self._closed = False
        self._last_heard_ns: Optional[int] = None
        self._lock = threading.Lock()

    # -- lifecycle ---------------------------------------------------------

    def close(self) -> None:
        self._closed = True
        close = getattr(self._transport, "close", None)
        if close:
            close()

    @property
    def closed(self) -> bool:
        return self._closed

    def _check_open(self) -> None:
        if self._closed:
            raise SessionClosed("session is closed")

    # -- sending -----------------------------------------------------------

    def publish(self, topic: str, msg: Message) -> None:
        """Send one message; ``topic`` must be the message's canonical topic."""
        self._check_open()
        canonical = topic_of(msg)
        if topic != canonical:
            raise TopicMismatch(f"{type(msg).__name__} belongs on topic {canonical!r}, not {topic!r}")
        with self._lock:
            seq = self._send_seq.get(topic, 0)
            self._send_seq[topic] = seq + 1
        frame = encode(msg, seq=seq, send_time_ns=self._clock_ns())
        self._transport.send(frame)

    def subscribe(self, topic: str) -> None:
        self._check_open()
        self._subscribed.add(topic)
        self._buffers.setdefault(topic, TopicBuffer(topic, self._frame_buffer))
        self.publish(TOPIC_CONTROL, SessionControl(op=int(ControlOp.SUBSCRIBE), topic=topic))

    def unsubscribe(self, topic: str) -> None:
        self._check_open()
        self._subscribed.discard(topic)
        self.publish(TOPIC_CONTROL, SessionControl(op=int(ControlOp.UNSUBSCRIBE), topic=topic))

    def heartbeat(self) -> None:
        """Send a liveness probe; the far end echoes it for RTT measurement."""
        self.publish(TOPIC_CONTROL, SessionControl(op=int(ControlOp.HEARTBEAT)))

    # -- receiving ---------------------------------------------------------

    def _buffer_for(self, topic: str) -> TopicBuffer:
        buf = self._buffers.get(topic)
        if buf is None:
            buf = self._buffers[topic] = TopicBuffer(topic, self._frame_buffer)
        return buf

    def pump(self) -> None:
        """Drain the transport and dispatch complete frames into topic buffers."""
        self._check_open()
        data = self._transport.recv()
        if data:
            self._rx += data
        offset = 0
        while True:
            try:
                msg, header, consumed = decode(self._rx, offset)
            except TruncatedFrame:
                break
            offset += consumed
            self._dispatch(msg, header)
        if offset:
            del self._rx[:offset]

    def _dispatch(self, msg: Message, header) -> None:
        now = self._clock_ns()
        self._last_heard_ns = now
        topic = topic_of(msg)
        if isinstance(msg, SessionControl):
            if msg.op == ControlOp.HEARTBEAT and header.flags & FLAG_ECHO:
                # Round trip of our own probe: sender clock on both ends.
                rtt = max(0, now - header.send_time_ns)
                buf = self._buffer_for(TOPIC_CONTROL)
                buf.latency_samples_ns.append(rtt // 2)
                buf.received += 1
                return
            buf = self._buffer_for(topic)
            buf.push(msg, header.seq, None)
            return
        latency = now - header.send_time_ns if self._same_clock else None
        self._buffer_for(topic).push(msg, header.seq, latency)

    def poll(self, topic: str) -> List[Message]:
        """Receive pending traffic and return this topic's queued messages."""
        self._check_open()
        if topic not in self._subscribed and topic != TOPIC_CONTROL:
            raise NotSubscribed(f"not subscribed to topic {topic!r}")
        self.pump()
        return self._buffer_for(topic).drain()

    def latency_stats(self, topic: str) -> LatencyStats:
        buf = self._buffers.get(topic)
        if buf is None:
            raise NoSamples(f"no traffic observed on topic {topic!r}")
        return buf.stats()

    # -- liveness ----------------------------------------------------------

    def is_alive(self, now_ns: Optional[int] = None) -> bool:
        """False once 3 heartbeat intervals pass with no inbound traffic."""
        if self._last_heard_ns is None:
            return True
        now = self._clock_ns() if now_ns is None else now_ns
        dead_after_ns = HEARTBEAT_MISS_LIMIT * self._heartbeat_ms * 1_000_000
        return (now - self._last_heard_ns) < dead_after_ns


def session_publish(session: Session, topic: str, msg: Message) -> None:
    session.publish(topic, msg)


def session_poll(session: Session, topic: str) -> List[Message]:
    return session.poll(topic)


def latency_stats(session: Session, topic: str) -> LatencyStats:
    return session.latency_stats(topic)
