"""Store-and-forward relay between a device and the ingestion service.

Frames are buffered until acknowledged; a connection drop leaves them queued
and a reconnect flushes the backlog in order, so within buffer capacity no
frame is lost and (with idempotent ingestion) none is duplicated. On buffer
overflow the oldest unacknowledged frames are dropped and counted.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Protocol

from .wire import NotificationFrame

DEFAULT_BUFFER_CAPACITY = 10_000


class RelayError(Exception):
    pass


class SeqRegressionError(RelayError):
    pass


class TransportDown(RelayError):
    """Raised by a transport when the link is unavailable."""


class Transport(Protocol):
    def send(self, frames: list[NotificationFrame], now_ms: int) -> dict[str, int]:
        """Deliver frames, returning per-device cumulative acks."""
        ...


@dataclass
class RelayState:
    buffer: deque = field(default_factory=deque)
    connected: bool = False
    reconnect_count: int = 0
    drop_count: int = 0
    last_offered_seq: int = 0
    acked_seq: int = 0


class RelayClient:
    """One relay per device stream, seq numbers strictly increasing."""

    def __init__(self, transport: Transport,
                 capacity: int = DEFAULT_BUFFER_CAPACITY,
                 batch_size: int = 1):
        self.transport = transport
        self.capacity = capacity
        self.batch_size = max(1, batch_size)
        self.state = RelayState()

    @property
    def reconnect_count(self) -> int:
        return self.state.reconnect_count

    @property
    def drop_count(self) -> int:
        return self.state.drop_count

    def offer(self, frame: NotificationFrame, now_ms: int) -> None:
        st = self.state
        if frame.seq <= st.last_offered_seq:
            raise SeqRegressionError(
                f"seq {frame.seq} after {st.last_offered_seq}")
        st.last_offered_seq = frame.seq
        st.buffer.append(frame)
        while len(st.buffer) > self.capacity:
            st.buffer.popleft()
            st.drop_count += 1
        if st.connected:
            self.flush(now_ms)

    def on_connected(self, now_ms: int, initial: bool = False) -> None:
        st = self.state
        if st.connected:
            return
        st.connected = True
        if not initial:
            st.reconnect_count += 1
        self.flush(now_ms)

    def on_disconnected(self) -> None:
        self.state.connected = False

    def flush(self, now_ms: int) -> None:
        """Push buffered frames until empty or the link drops."""
        st = self.state
        while st.connected and st.buffer:
            batch = list(st.buffer)[: self.batch_size]
            try:
                acks = self.transport.send(batch, now_ms)
            except TransportDown:
                st.connected = False
                return
            ack = acks.get(batch[0].device_id, st.acked_seq)
            if ack < st.acked_seq:
                raise RelayError(f"ack regressed from {st.acked_seq} to {ack}")
            st.acked_seq = max(st.acked_seq, ack)
            if ack < batch[-1].seq:
                # Frames were persisted but a gap (earlier drop) holds the
                # cumulative ack back; they are off our hands either way.
                pass
            while st.buffer and st.buffer[0].seq <= batch[-1].seq:
                st.buffer.popleft()


class OutageSchedule:
    """Scripted link availability: down during each (at_ms, outage_ms) window."""

    def __init__(self, outages: list[tuple[int, int]]):
        self.windows = sorted((at, at + dur) for at, dur in outages)
        for (a0, b0), (a1, _b1) in zip(self.windows, self.windows[1:]):
            if a1 < b0:
                raise ValueError("overlapping outage windows")

    def is_up(self, now_ms: int) -> bool:
        return not any(a <= now_ms < b for a, b in self.windows)

    def edges(self) -> list[tuple[int, bool]]:
        """(time, link_up) transition list, in order."""
        out = []
        for a, b in self.windows:
            out.append((a, False))
            out.append((b, True))
        return out


class DirectTransport:
    """In-process transport delivering straight into an ingestion callable.

    `ingest` has the signature of EventStore.ingest bound to a session; the
    optional link predicate simulates outages by raising TransportDown.
    """

    def __init__(self, ingest: Callable[[list[NotificationFrame], int], dict[str, int]],
                 link_up: Callable[[int], bool] | None = None):
        self.ingest = ingest
        self.link_up = link_up

    def send(self, frames: list[NotificationFrame], now_ms: int) -> dict[str, int]:
        if self.link_up is not None and not self.link_up(now_ms):
            raise TransportDown(f"link down at {now_ms}")
        return self.ingest(frames, now_ms)


def deliver_with_outages(
    frames: list[NotificationFrame],
    ingest: Callable[[list[NotificationFrame], int], dict[str, int]],
    outages: list[tuple[int, int]] | None = None,
    capacity: int = DEFAULT_BUFFER_CAPACITY,
    batch_size: int = 1,
    start_ms: int = 0,
) -> RelayClient:
    """Replay a frame log through a relay under a scripted outage schedule.

    Frames are offered at their own timestamps; link edges are interleaved in
    time order. Returns the relay for its counters.
    """
    schedule = OutageSchedule(outages or [])
    relay = RelayClient(
        DirectTransport(ingest, schedule.is_up), capacity=capacity,
        batch_size=batch_size)
    relay.on_connected(start_ms, initial=True)
    timeline: list[tuple[int, int, object]] = []
    for i, f in enumerate(frames):
        timeline.append((f.ts_ms, 1, f))
    for at, up in schedule.edges():
        timeline.append((at, 0, up))
    timeline.sort(key=lambda t: (t[0], t[1]))
    end_ms = start_ms
    for at, tag, item in timeline:
        end_ms = max(end_ms, at)
        if tag == 0:
            if item:
                relay.on_connected(at)
            else:
                relay.on_disconnected()
        else:
            relay.offer(item, at)
    relay.flush(end_ms)
    return relay
