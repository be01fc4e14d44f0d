"""Routing hub and TCP server for the teleoperation link.

The hub owns message routing and is transport-agnostic: TCP peers and
WebSocket-bridge peers attach with nothing more than a raw-bytes send
callable. The robot-side application publishes joint states, camera frames
and session events through :meth:`Hub.broadcast` and consumes operator
commands from :meth:`Hub.take`.
"""

from __future__ import annotations

import errno
import selectors
import socket
import time
from collections import deque
from typing import Callable, Dict, List, Optional

from .codec import (
    FLAG_ECHO,
    ControlOp,
    Message,
    SessionControl,
    TruncatedFrame,
    WireError,
    decode,
    encode,
)
from .session import (
    HEARTBEAT_INTERVAL_MS,
    HEARTBEAT_MISS_LIMIT,
    TOPIC_COMMANDS,
    TOPIC_CONTROL,
    TOPIC_EVENTS,
    is_video_topic,
    topic_of,
)


class PortInUse(OSError):
    pass


class ProtocolViolation(ValueError):
    """A peer sent bytes that do not parse as wire frames."""


class PeerLink:
    """Hub-side state for one connected peer."""

    def __init__(self, name: str, send_raw: Callable[[bytes], None], frame_buffer: int):
        self.name = name
        self.send_raw = send_raw
        self.frame_buffer = frame_buffer
        self.subscriptions: set = set()
        self.rx = bytearray()
        self.out: deque = deque()  # (topic, encoded frame) awaiting flush
        self.seq: Dict[str, int] = {}
        self.last_heard_ns: Optional[int] = None
        self.video_drops = 0
        self.alive = True

    def next_seq(self, topic: str) -> int:
        seq = self.seq.get(topic, 0)
        self.seq[topic] = seq + 1
        return seq

    def enqueue(self, topic: str, frame: bytes) -> None:
        """Queue an encoded frame; video queues are bounded drop-oldest."""
        self.out.append((topic, frame))
        if is_video_topic(topic):
            queued = [i for i, (t, _) in enumerate(self.out) if t == topic]
            if len(queued) > self.frame_buffer:
                del self.out[queued[0]]
                self.video_drops += 1

    def pending_bytes(self) -> bool:
        return bool(self.out)


class Hub:
    """Routes wire messages between peers and the hosting application."""

    def __init__(self, *, frame_buffer: int = 8, heartbeat_ms: int = HEARTBEAT_INTERVAL_MS,
                 clock_ns: Callable[[], int] = time.monotonic_ns):
        self.frame_buffer = frame_buffer
        self.heartbeat_ms = heartbeat_ms
        self.clock_ns = clock_ns
        self.peers: List[PeerLink] = []
        self._host_inbox: Dict[str, List[Message]] = {TOPIC_COMMANDS: [], TOPIC_EVENTS: []}

    # -- peer lifecycle ------------------------------------------------------

    def attach(self, name: str, send_raw: Callable[[bytes], None]) -> PeerLink:
        peer = PeerLink(name, send_raw, self.frame_buffer)
        peer.last_heard_ns = self.clock_ns()
        self.peers.append(peer)
        return peer

    def detach(self, peer: PeerLink) -> None:
        peer.alive = False
        if peer in self.peers:
            self.peers.remove(peer)

    def reap_dead(self) -> List[PeerLink]:
        """Drop peers silent for 3 heartbeat intervals; return them."""
        now = self.clock_ns()
        limit = HEARTBEAT_MISS_LIMIT * self.heartbeat_ms * 1_000_000
        dead = [p for p in self.peers if p.last_heard_ns is not None and now - p.last_heard_ns >= limit]
        for p in dead:
            self.detach(p)
        return dead

    # -- inbound -------------------------------------------------------------

    def feed(self, peer: PeerLink, data: bytes) -> None:
        """Consume raw bytes from a peer, dispatching every complete frame."""
        peer.rx += data
        offset = 0
        while True:
            try:
                msg, header, consumed = decode(peer.rx, offset)
            except TruncatedFrame:
                break
            except WireError as e:
                raise ProtocolViolation(f"peer {peer.name}: {e}") from e
            offset += consumed
            self._route(peer, msg, header)
        if offset:
            del peer.rx[:offset]

    def _route(self, peer: PeerLink, msg: Message, header) -> None:
        peer.last_heard_ns = self.clock_ns()
        if isinstance(msg, SessionControl):
            if msg.op == ControlOp.SUBSCRIBE:
                peer.subscriptions.add(msg.topic)
            elif msg.op == ControlOp.UNSUBSCRIBE:
                peer.subscriptions.discard(msg.topic)
            elif msg.op == ControlOp.HEARTBEAT:
                # Echo with the sender's own timestamp so it can compute RTT.
                frame = encode(msg, seq=peer.next_seq(TOPIC_CONTROL),
                               send_time_ns=header.send_time_ns, flags=header.flags | FLAG_ECHO)
                peer.enqueue(TOPIC_CONTROL, frame)
            return
        topic = topic_of(msg)
        if topic in self._host_inbox:
            self._host_inbox[topic].append(msg)
        for other in self.peers:
            if other is not peer and topic in other.subscriptions:
                self._send_to(other, topic, msg)

    # -- outbound ------------------------------------------------------------

    def _send_to(self, peer: PeerLink, topic: str, msg: Message) -> None:
        frame = encode(msg, seq=peer.next_seq(topic), send_time_ns=self.clock_ns())
        peer.enqueue(topic, frame)

    def broadcast(self, topic: str, msg: Message) -> int:
        """Send to every peer subscribed to ``topic``; returns receiver count."""
        if topic_of(msg) != topic:
            raise ValueError(f"{type(msg).__name__} belongs on topic {topic_of(msg)!r}, not {topic!r}")
        n = 0
        for peer in self.peers:
            if topic in peer.subscriptions:
                self._send_to(peer, topic, msg)
                n += 1
        return n

    def take(self, topic: str) -> List[Message]:
        """Drain host-bound messages (commands or events)."""
        box = self._host_inbox.get(topic)
        if box is None:
            return []
        out = box[:]
        box.clear()
        return out

    def flush(self) -> None:
        """Hand every queued frame to its peer's raw sender."""
        for peer in list(self.peers):
            while peer.out:
                topic, frame = peer.out.popleft()
                try:
                    peer.send_raw(frame)
                except OSError:
                    self.detach(peer)
                    break


class TeleopServer:
    """Non-blocking TCP acceptor that feeds a Hub."""

    def __init__(self, hub: Hub, host: str = "127.0.0.1", port: int = 7450):
        self.hub = hub
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            self._listener.bind((host, port))
        except OSError as e:
            self._listener.close()
            if e.errno == errno.EADDRINUSE:
                raise PortInUse(f"TCP port {port} is already in use") from e
            raise
        self._listener.listen(16)
        self._listener.setblocking(False)
        self.port = self._listener.getsockname()[1]
        self._sel = selectors.DefaultSelector()
        self._sel.register(self._listener, selectors.EVENT_READ, None)
        self._socks: Dict[PeerLink, socket.socket] = {}

    def step(self, timeout: float = 0.0) -> None:
        """One poll iteration: accept, read, route, flush."""
        for key, _ in self._sel.select(timeout):
            if key.data is None:
                self._accept()
            else:
                self._read(key.data)
        self.hub.flush()
        for peer in self.hub.reap_dead():
            self._drop(peer)

    def _accept(self) -> None:
        try:
            conn, addr = self._listener.accept()
        except OSError:
            return
        conn.setblocking(True)  # frame sends are small; blocking sendall is fine
        peer = self.hub.attach(f"tcp:{addr[0]}:{addr[1]}", conn.sendall)
        self._socks[peer] = conn
        conn.setblocking(False)
        self._sel.register(conn, selectors.EVENT_READ, peer)
        # sendall on a non-blocking socket can fail under pressure; wrap it.
        peer.send_raw = lambda data, c=conn: self._blocking_send(c, data)

    @staticmethod
    def _blocking_send(conn: socket.socket, data: bytes) -> None:
        conn.setblocking(True)
        try:
            conn.sendall(data)
        finally:
            conn.setblocking(False)

    def _read(self, peer: PeerLink) -> None:
        conn = self._socks.get(peer)
        if conn is None:
            return
        try:
            data = conn.recv(65536)
        except BlockingIOError:
            return
        except OSError:
            data = b""
        if not data:
            self._drop(peer)
            return
        try:
            self.hub.feed(peer, data)
        except ProtocolViolation:
            self._drop(peer)

    def _drop(self, peer: PeerLink) -> None:
        self.hub.detach(peer)
        conn = self._socks.pop(peer, None)
        if conn is not None:
            try:
                self._sel.unregister(conn)
            except (KeyError, ValueError):
                pass
            conn.close()

    def close(self) -> None:
        for peer in list(self._socks):
            self._drop(peer)
        self._sel.unregister(self._listener)
        self._listener.close()
        self._sel.close()
