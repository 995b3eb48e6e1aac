import random

import pytest
from hypothesis import given, settings, strategies as st

from pocketsim.store import EventStore, UnknownSessionError
from pocketsim.wire import NotificationFrame


def frame(seq, device="dev", ts=None, plate=-1, event="touch", cap=None):
    return NotificationFrame(seq, device, seq * 10 if ts is None else ts,
                             plate, event, cap)


@pytest.fixture
def store():
    s = EventStore(":memory:")
    s.create_session("s1", created_ms=0)
    yield s
    s.close()


def test_ingest_and_query(store):
    frames = [frame(i) for i in range(1, 6)]
    acks = store.ingest("s1", frames, received_ms=99)
    assert acks == {"dev": 5}
    records = store.query_events("s1")
    assert [r.frame() for r in records] == frames
    assert all(r.server_received_ms == 99 for r in records)
    assert all(r.session_id == "s1" for r in records)


def test_duplicate_batch_ignored(store):
    frames = [frame(i) for i in range(1, 4)]
    store.ingest("s1", frames, 10)
    store.ingest("s1", frames, 20)
    assert store.count_events("s1") == 3
    # First write wins, including the receive stamp.
    assert {r.server_received_ms for r in store.query_events("s1")} == {10}


def test_gap_holds_ack_but_stores_frame(store):
    acks = store.ingest("s1", [frame(1), frame(2), frame(4)], 5)
    assert acks == {"dev": 2}
    assert store.count_events("s1") == 3
    acks = store.ingest("s1", [frame(3)], 6)
    assert acks == {"dev": 4}


def test_per_device_acks_independent(store):
    batch = [frame(1, "a"), frame(1, "b"), frame(2, "a")]
    acks = store.ingest("s1", batch, 5)
    assert acks == {"a": 2, "b": 1}
    assert store.ack_for("a") == 2
    assert store.ack_for("b") == 1


def test_unknown_session_rejected(store):
    with pytest.raises(UnknownSessionError):
        store.ingest("nope", [frame(1)], 0)
    with pytest.raises(UnknownSessionError):
        store.query_events("nope")


def test_query_filters(store):
    frames = [
        frame(1, "a", ts=100, event="touch"),
        frame(2, "a", ts=200, event="release"),
        frame(1, "b", ts=150, event="touch"),
    ]
    store.ingest("s1", frames, 0)
    assert len(store.query_events("s1", from_ms=150)) == 2
    assert len(store.query_events("s1", to_ms=150)) == 2
    assert len(store.query_events("s1", device="a")) == 2
    assert len(store.query_events("s1", kind="touch")) == 2
    assert [r.ts_ms for r in store.query_events("s1")] == [100, 150, 200]


def test_durability_across_restart(tmp_path):
    path = str(tmp_path / "events.db")
    s = EventStore(path)
    s.create_session("sess", created_ms=0)
    acks = s.ingest("sess", [frame(i) for i in range(1, 11)], 1)
    assert acks == {"dev": 10}
    s.update_session_meta("sess", {"reconnects": 4})
    s.close()

    s2 = EventStore(path)
    assert s2.count_events("sess") == 10
    assert s2.ack_for("dev") == 10
    assert s2.session_meta("sess")["reconnects"] == 4
    s2.close()


def test_query_order_is_stable(store):
    rng = random.Random(17)
    frames = [frame(i, ts=rng.randrange(0, 500)) for i in range(1, 201)]
    rng.shuffle(frames)
    for chunk_start in range(0, len(frames), 7):
        store.ingest("s1", frames[chunk_start:chunk_start + 7], 3)
    first = store.query_events("s1")
    second = store.query_events("s1")
    assert first == second
    expected = sorted(frames, key=lambda f: (f.ts_ms, f.seq))
    assert [r.frame() for r in first] == expected


@settings(max_examples=40, deadline=None)
@given(st.lists(
    st.tuples(st.integers(1, 60), st.integers(0, 1000)),
    min_size=1, max_size=60, unique_by=lambda t: t[0]))
def test_query_equals_in_memory_sort(pairs):
    s = EventStore(":memory:")
    s.create_session("x", created_ms=0)
    frames = [frame(seq, ts=ts) for seq, ts in pairs]
    s.ingest("x", frames, 0)
    got = [(r.ts_ms, r.seq) for r in s.query_events("x")]
    assert got == sorted((f.ts_ms, f.seq) for f in frames)
    s.close()


def test_empty_session_queries_empty(store):
    store.create_session("empty", created_ms=1)
    assert store.query_events("empty") == []
