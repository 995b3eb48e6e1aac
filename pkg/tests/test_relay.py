import random

import pytest
from hypothesis import given, settings, strategies as st

from pocketsim.relay import (
    DirectTransport,
    OutageSchedule,
    RelayClient,
    SeqRegressionError,
    deliver_with_outages,
)
from pocketsim.store import EventStore
from pocketsim.wire import NotificationFrame


def frame(seq, ts=None, device="dev"):
    return NotificationFrame(seq, device, seq * 100 if ts is None else ts, -1,
                             "touch" if seq % 2 else "release")


def make_store():
    s = EventStore(":memory:")
    s.create_session("s", created_ms=0)
    return s, lambda frames, now: s.ingest("s", frames, now)


def test_connected_relay_keeps_buffer_drained():
    store, ingest = make_store()
    relay = RelayClient(DirectTransport(ingest))
    relay.on_connected(0, initial=True)
    for i in range(1, 101):
        relay.offer(frame(i), i * 100)
        assert len(relay.state.buffer) == 0
    assert store.count_events("s") == 100
    assert relay.reconnect_count == 0
    assert relay.state.acked_seq == 100


def test_seq_regression_rejected():
    _, ingest = make_store()
    relay = RelayClient(DirectTransport(ingest))
    relay.on_connected(0, initial=True)
    relay.offer(frame(5), 0)
    with pytest.raises(SeqRegressionError):
        relay.offer(frame(5), 1)


def test_outage_buffers_then_reconnect_flushes():
    store, ingest = make_store()
    outages = [(1000, 500)]
    relay = deliver_with_outages(
        [frame(i, ts=i * 300) for i in range(1, 11)], ingest, outages)
    assert relay.reconnect_count == 1
    assert relay.drop_count == 0
    assert store.count_events("s") == 10
    assert store.ack_for("dev") == 10


def test_four_outages_two_hours_all_delivered_exactly_once():
    store, ingest = make_store()
    two_hours = 2 * 3600 * 1000
    outages = [(int(0.4e6), 60_000), (2_000_000, 60_000),
               (4_000_000, 60_000), (6_500_000, 60_000)]
    frames = [frame(i, ts=i * (two_hours // 200)) for i in range(1, 201)]
    relay = deliver_with_outages(frames, ingest, outages)
    assert relay.reconnect_count == 4
    assert relay.drop_count == 0
    records = store.query_events("s")
    assert [r.frame() for r in records] == frames


def test_reconnects_counted_even_without_traffic():
    store, ingest = make_store()
    outages = [(100, 50), (300, 50), (600, 50)]
    relay = deliver_with_outages([frame(1, ts=900)], ingest, outages)
    assert relay.reconnect_count == 3
    assert store.count_events("s") == 1


def test_overflow_drops_oldest_exactly():
    store, ingest = make_store()
    # Outage spans all offers; capacity 10, 25 frames -> 15 oldest dropped.
    frames = [frame(i, ts=1000 + i) for i in range(1, 26)]
    relay = deliver_with_outages(frames, ingest, outages=[(500, 10_000)],
                                 capacity=10)
    assert relay.drop_count == 15
    records = store.query_events("s")
    assert [r.seq for r in records] == list(range(16, 26))
    # Cumulative ack stalls before the gap.
    assert store.ack_for("dev") == 0


def test_batched_transport():
    store, ingest = make_store()
    frames = [frame(i, ts=i) for i in range(1, 51)]
    relay = deliver_with_outages(frames, ingest, outages=[(0, 30)], batch_size=8)
    assert store.count_events("s") == 50
    assert relay.drop_count == 0


def test_overlapping_outages_rejected():
    with pytest.raises(ValueError):
        OutageSchedule([(0, 100), (50, 100)])


@settings(max_examples=50, deadline=None)
@given(
    n_frames=st.integers(1, 120),
    outage_starts=st.lists(st.integers(0, 100), max_size=4, unique=True),
    outage_len=st.integers(1, 40),
    batch=st.integers(1, 7),
)
def test_exactly_once_under_random_outages(n_frames, outage_starts, outage_len, batch):
    # Frames every 10 ms; outages quantized so they never overlap.
    store, ingest = make_store()
    frames = [frame(i, ts=i * 10) for i in range(1, n_frames + 1)]
    outages = []
    last_end = -1
    for s0 in sorted(outage_starts):
        start = s0 * 50
        if start <= last_end:
            continue
        outages.append((start, outage_len * 10))
        last_end = start + outage_len * 10
    relay = deliver_with_outages(frames, ingest, outages, batch_size=batch)
    assert relay.drop_count == 0
    records = store.query_events("s")
    assert [r.frame() for r in records] == frames
    store.close()
