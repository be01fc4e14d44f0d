"""Byte transports feeding Session endpoints: in-memory loopback and TCP."""

from __future__ import annotations

import select
import socket
import threading
import time
from collections import deque
from typing import Callable, Optional, Tuple

from .session import Session


class LoopbackTransport:
    """One direction-pair endpoint of an in-process byte pipe."""

    def __init__(self, inbox: deque, outbox: deque, lock: threading.Lock):
        self._inbox = inbox
        self._outbox = outbox
        self._lock = lock
        self._open = True

    def send(self, data: bytes) -> None:
        if not self._open:
            raise BrokenPipeError("loopback transport closed")
        with self._lock:
            self._outbox.append(bytes(data))

    def recv(self) -> bytes:
        with self._lock:
            if not self._inbox:
                return b""
            chunks = list(self._inbox)
            self._inbox.clear()
        return b"".join(chunks)

    def close(self) -> None:
        self._open = False


def loopback_pair(
    *,
    frame_buffer: int = 8,
    clock_ns: Callable[[], int] = time.monotonic_ns,
    heartbeat_ms: int = 500,
) -> Tuple[Session, Session]:
    """Two connected sessions in one process, sharing one monotonic clock.

    Because both ends read the same clock, one-way latency (receive − send)
    is well-defined and the sessions are created with
    ``same_clock_domain=True``.
    """
    lock = threading.Lock()
    a_to_b: deque = deque()
    b_to_a: deque = deque()
    a = Session(
        LoopbackTransport(b_to_a, a_to_b, lock),
        frame_buffer=frame_buffer,
        clock_ns=clock_ns,
        same_clock_domain=True,
        heartbeat_ms=heartbeat_ms,
    )
    b = Session(
        LoopbackTransport(a_to_b, b_to_a, lock),
        frame_buffer=frame_buffer,
        clock_ns=clock_ns,
        same_clock_domain=True,
        heartbeat_ms=heartbeat_ms,
    )
    return a, b


class TcpTransport:
    """Client-side socket wrapper: blocking sends, non-blocking drains."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._sock.setblocking(True)

    def send(self, data: bytes) -> None:
        self._sock.sendall(data)

    def recv(self) -> bytes:
        chunks = []
        while True:
            readable, _, _ = select.select([self._sock], [], [], 0)
            if not readable:
                break
            chunk = self._sock.recv(65536)
            if not chunk:
                break
            chunks.append(chunk)
        return b"".join(chunks)

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


def connect_tcp(
    host: str,
    port: int,
    *,
    frame_buffer: int = 8,
    heartbeat_ms: int = 500,
    timeout_s: Optional[float] = 5.0,
) -> Session:
    """Open a client session to a hub; latency comes from heartbeat RTT/2."""
    sock = socket.create_connection((host, port), timeout=timeout_s)
    sock.settimeout(None)
    return Session(TcpTransport(sock), frame_buffer=frame_buffer, heartbeat_ms=heartbeat_ms)
