"""Stream-socket wire tier: newline-delimited frames in, ack lines out.

A relay connects over TCP, sends one hello line naming the session, then
frame lines; the server persists each batch and answers one cumulative ack
line per frame received. This carries the same contract as the in-process
transport (idempotent ingest, cumulative acks), so a relay can lose the
connection at any point and resend from its buffer without duplicating
anything.
"""

from __future__ import annotations

import json
import socket
import socketserver
import threading
import time

from .relay import TransportDown
from .store import EventStore, UnknownSessionError
from .wire import DecodeError, NotificationFrame, decode_ack, decode_frame, encode_ack


def _now_ms() -> int:
    return int(time.time() * 1000)


class FrameStreamServer:
    """Threaded TCP listener feeding an event store."""

    def __init__(self, store: EventStore, host: str = "127.0.0.1", port: int = 0,
                 default_session: str = "stream"):
        self.store = store
        self.default_session = default_session
        outer = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self):
                session_id = outer.default_session
                try:
                    for raw in self.rfile:
                        line = raw.rstrip(b"\n")
                        if not line:
                            continue
                        try:
                            fields = json.loads(line.decode("utf-8"))
                        except (ValueError, UnicodeDecodeError):
                            self._reject("bad json line")
                            return
                        if isinstance(fields, dict) and "hello" in fields:
                            session_id = str(fields["hello"]) or outer.default_session
                            outer.store.create_session(session_id)
                            continue
                        try:
                            frame = decode_frame(line)
                        except DecodeError as e:
                            self._reject(str(e))
                            return
                        try:
                            acks = outer.store.ingest(session_id, [frame], _now_ms())
                        except UnknownSessionError:
                            outer.store.create_session(session_id)
                            acks = outer.store.ingest(session_id, [frame], _now_ms())
                        self.wfile.write(encode_ack(frame.device_id,
                                                    acks[frame.device_id]))
                        self.wfile.flush()
                except (ConnectionError, OSError):
                    pass  # peer went away; the relay's buffer covers it

            def _reject(self, message: str):
                try:
                    self.wfile.write(json.dumps({"error": message}).encode() + b"\n")
                    self.wfile.flush()
                except OSError:
                    pass

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self._server = Server((host, port), Handler)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def start(self) -> None:
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        name="frame-stream-server", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)


class SocketTransport:
    """Relay-side transport: one ack line expected per frame line sent."""

    def __init__(self, host: str, port: int, session_id: str = "stream",
                 timeout: float = 5.0):
        self.host = host
        self.port = port
        self.session_id = session_id
        self.timeout = timeout
        self._sock: socket.socket | None = None
        self._rfile = None

    @property
    def connected(self) -> bool:
        return self._sock is not None

    def connect(self) -> None:
        if self._sock is not None:
            return
        sock = socket.create_connection((self.host, self.port), self.timeout)
        sock.settimeout(self.timeout)
        self._sock = sock
        self._rfile = sock.makefile("rb")
        self._sock.sendall(json.dumps({"hello": self.session_id}).encode() + b"\n")

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        self._sock = None
        self._rfile = None

    def send(self, frames: list[NotificationFrame], now_ms: int) -> dict[str, int]:
        if self._sock is None:
            raise TransportDown("not connected")
        from .wire import encode_frames
        try:
            self._sock.sendall(encode_frames(frames))
            acks: dict[str, int] = {}
            for _ in frames:
                line = self._rfile.readline()
                if not line:
                    raise TransportDown("connection closed by server")
                if b'"error"' in line:
                    raise TransportDown(f"server rejected frame: {line!r}")
                device_id, ack_seq = decode_ack(line)
                acks[device_id] = ack_seq
            return acks
        except (OSError, DecodeError) as e:
            self.close()
            raise TransportDown(str(e)) from None
