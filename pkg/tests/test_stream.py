import socket

import pytest

from pocketsim.relay import RelayClient, TransportDown
from pocketsim.store import EventStore
from pocketsim.stream import FrameStreamServer, SocketTransport
from pocketsim.wire import NotificationFrame


def frame(seq, device="dev"):
    return NotificationFrame(seq, device, seq * 10, -1,
                             "touch" if seq % 2 else "release")


@pytest.fixture
def stream_server(tmp_path):
    store = EventStore(str(tmp_path / "events.db"))
    server = FrameStreamServer(store, port=0)
    server.start()
    yield server, store
    server.stop()
    store.close()


def test_frames_over_socket_acked_and_stored(stream_server):
    server, store = stream_server
    host, port = server.address
    transport = SocketTransport(host, port, session_id="sock1")
    transport.connect()
    acks = transport.send([frame(1)], 0)
    assert acks == {"dev": 1}
    acks = transport.send([frame(2), frame(3)], 1)
    assert acks == {"dev": 3}
    transport.close()
    assert store.count_events("sock1") == 3


def test_relay_over_socket_with_connection_loss(stream_server):
    server, store = stream_server
    host, port = server.address
    transport = SocketTransport(host, port, session_id="sock2")
    relay = RelayClient(transport, batch_size=2)
    transport.connect()
    relay.on_connected(0, initial=True)

    for i in range(1, 6):
        relay.offer(frame(i), i * 10)
    assert store.count_events("sock2") == 5

    # Drop the link: offers buffer, nothing is lost.
    transport.close()
    relay.on_disconnected()
    for i in range(6, 11):
        relay.offer(frame(i), i * 10)
    assert len(relay.state.buffer) == 5

    transport.connect()
    relay.on_connected(200)
    assert relay.reconnect_count == 1
    assert store.count_events("sock2") == 10
    records = store.query_events("sock2")
    assert [r.seq for r in records] == list(range(1, 11))
    transport.close()


def test_resend_after_mid_stream_kill_is_deduplicated(stream_server):
    server, store = stream_server
    host, port = server.address
    transport = SocketTransport(host, port, session_id="sock3")
    transport.connect()
    transport.send([frame(1), frame(2)], 0)
    # Simulate an ack lost in flight: the relay would resend both frames.
    transport.close()
    transport.connect()
    acks = transport.send([frame(1), frame(2), frame(3)], 1)
    assert acks == {"dev": 3}
    assert store.count_events("sock3") == 3
    transport.close()


def test_send_when_disconnected_raises():
    transport = SocketTransport("127.0.0.1", 1)  # nothing listens here
    with pytest.raises(TransportDown):
        transport.send([frame(1)], 0)


def test_malformed_line_gets_error_reply(stream_server):
    server, store = stream_server
    host, port = server.address
    with socket.create_connection((host, port), 5) as sock:
        sock.sendall(b"this is not a frame\n")
        reply = sock.makefile("rb").readline()
    assert b"error" in reply


def test_sessions_isolated_by_hello(stream_server):
    server, store = stream_server
    host, port = server.address
    for session in ("a", "b"):
        t = SocketTransport(host, port, session_id=session)
        t.connect()
        t.send([frame(1, device=f"dev-{session}")], 0)
        t.close()
    assert store.count_events("a") == 1
    assert store.count_events("b") == 1
