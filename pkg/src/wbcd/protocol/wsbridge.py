"""WebSocket bridge: the identical wire frames as browser-reachable binary messages.

A deliberately small RFC 6455 server — HTTP upgrade handshake, masked client
frames, ping/pong/close — with every inbound binary message fed to the same
Hub as the TCP peers and every outbound wire frame wrapped in one binary
message. No extensions, no fragmentation support, no TLS.
"""

from __future__ import annotations

import base64
import errno
import hashlib
import selectors
import socket
import struct
from typing import Dict, Optional

from .server import Hub, PeerLink, PortInUse, ProtocolViolation

_WS_GUID = b"258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1(client_key.strip().encode("ascii") + _WS_GUID).digest()
    return base64.b64encode(digest).decode("ascii")


def build_frame(opcode: int, payload: bytes) -> bytes:
    """Server-to-client frame: FIN set, never masked."""
    head = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head += bytes([n])
    elif n < 65536:
        head += bytes([126]) + struct.pack(">H", n)
    else:
        head += bytes([127]) + struct.pack(">Q", n)
    return head + payload


def parse_frame(buf: bytes):
    """Parse one client frame; returns (opcode, payload, consumed) or None if short."""
    if len(buf) < 2:
        return None
    b0, b1 = buf[0], buf[1]
    if not b0 & 0x80:
        raise ProtocolViolation("fragmented WebSocket frames are not supported")
    opcode = b0 & 0x0F
    masked = bool(b1 & 0x80)
    length = b1 & 0x7F
    pos = 2
    if length == 126:
        if len(buf) < pos + 2:
            return None
        length = struct.unpack_from(">H", buf, pos)[0]
        pos += 2
    elif length == 127:
        if len(buf) < pos + 8:
            return None
        length = struct.unpack_from(">Q", buf, pos)[0]
        pos += 8
    if not masked:
        raise ProtocolViolation("client WebSocket frames must be masked")
    if len(buf) < pos + 4 + length:
        return None
    mask = buf[pos : pos + 4]
    pos += 4
    raw = bytearray(buf[pos : pos + length])
    for i in range(len(raw)):
        raw[i] ^= mask[i % 4]
    return opcode, bytes(raw), pos + length


class _WsConn:
    def __init__(self, sock: socket.socket, name: str):
        self.sock = sock
        self.name = name
        self.buf = bytearray()
        self.handshaken = False
        self.peer: Optional[PeerLink] = None


class WebSocketBridge:
    """Serves the hub's frames over WebSocket binary messages."""

    def __init__(self, hub: Hub, host: str = "127.0.0.1", port: int = 7451):
        self.hub = hub
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            self._listener.bind((host, port))
        except OSError as e:
            self._listener.close()
            if e.errno == errno.EADDRINUSE:
                raise PortInUse(f"WebSocket port {port} is already in use") from e
            raise
        self._listener.listen(16)
        self._listener.setblocking(False)
        self.port = self._listener.getsockname()[1]
        self._sel = selectors.DefaultSelector()
        self._sel.register(self._listener, selectors.EVENT_READ, None)
        self._conns: Dict[PeerLink, _WsConn] = {}

    def step(self, timeout: float = 0.0) -> None:
        for key, _ in self._sel.select(timeout):
            if key.data is None:
                self._accept()
            else:
                self._read(key.data)
        self.hub.flush()

    def _accept(self) -> None:
        try:
            sock, addr = self._listener.accept()
        except OSError:
            return
        sock.setblocking(False)
        conn = _WsConn(sock, f"ws:{addr[0]}:{addr[1]}")
        self._sel.register(sock, selectors.EVENT_READ, conn)

    def _read(self, conn: _WsConn) -> None:
        try:
            data = conn.sock.recv(65536)
        except BlockingIOError:
            return
        except OSError:
            data = b""
        if not data:
            self._drop(conn)
            return
        conn.buf += data
        try:
            if not conn.handshaken:
                self._try_handshake(conn)
            if conn.handshaken:
                self._pump_frames(conn)
        except ProtocolViolation:
            self._drop(conn)

    def _try_handshake(self, conn: _WsConn) -> None:
        end = conn.buf.find(b"\r\n\r\n")
        if end < 0:
            return
        head = bytes(conn.buf[:end]).decode("latin-1")
        del conn.buf[: end + 4]
        headers = {}
        for line in head.split("\r\n")[1:]:
            if ":" in line:
                k, v = line.split(":", 1)
                headers[k.strip().lower()] = v.strip()
        key = headers.get("sec-websocket-key")
        if headers.get("upgrade", "").lower() != "websocket" or not key:
            self._send(conn, b"HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\nConnection: close\r\n\r\n")
            self._drop(conn)
            return
        response = (
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept_key(key)}\r\n\r\n"
        )
        self._send(conn, response.encode("ascii"))
        conn.handshaken = True
        peer = self.hub.attach(conn.name, lambda frame, c=conn: self._send(c, build_frame(OP_BINARY, frame)))
        conn.peer = peer
        self._conns[peer] = conn

    def _pump_frames(self, conn: _WsConn) -> None:
        while True:
            parsed = parse_frame(bytes(conn.buf))
            if parsed is None:
                return
            opcode, payload, consumed = parsed
            del conn.buf[:consumed]
            if opcode == OP_BINARY:
                if conn.peer is not None:
                    self.hub.feed(conn.peer, payload)
            elif opcode == OP_PING:
                self._send(conn, build_frame(OP_PONG, payload))
            elif opcode == OP_CLOSE:
                self._send(conn, build_frame(OP_CLOSE, payload[:2]))
                self._drop(conn)
                return
            # text and pong frames are ignored

    def _send(self, conn: _WsConn, data: bytes) -> None:
        conn.sock.setblocking(True)
        try:
            conn.sock.sendall(data)
        except OSError:
            self._drop(conn)
        finally:
            try:
                conn.sock.setblocking(False)
            except OSError:
                pass

    def _drop(self, conn: _WsConn) -> None:
        if conn.peer is not None:
            self.hub.detach(conn.peer)
            self._conns.pop(conn.peer, None)
            conn.peer = None
        try:
            self._sel.unregister(conn.sock)
        except (KeyError, ValueError):
            pass
        conn.sock.close()

    def close(self) -> None:
        for conn in list(self._conns.values()):
            self._drop(conn)
        self._sel.unregister(self._listener)
        self._listener.close()
        self._sel.close()
