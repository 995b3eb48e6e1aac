"""Persistent event store: a single sqlite file holding sessions and events.

Ingestion is idempotent on (device_id, seq); acks are cumulative per device
(the highest contiguous sequence number stored). Records are persisted before
an ack is computed, so an acked frame survives a process restart.
"""

from __future__ import annotations

import json
import sqlite3
import threading
import time

from .wire import EventRecord, NotificationFrame

_SCHEMA = """
CREATE TABLE IF NOT EXISTS sessions(
    session_id TEXT PRIMARY KEY,
    created_ms INTEGER NOT NULL,
    meta TEXT NOT NULL DEFAULT '{}'
);
CREATE TABLE IF NOT EXISTS events(
    session_id TEXT NOT NULL,
    device_id TEXT NOT NULL,
    seq INTEGER NOT NULL,
    plate INTEGER NOT NULL,
    event TEXT NOT NULL,
    cap REAL,
    ts_ms INTEGER NOT NULL,
    server_received_ms INTEGER NOT NULL,
    UNIQUE(device_id, seq)
);
CREATE INDEX IF NOT EXISTS events_by_session_ts ON events(session_id, ts_ms, seq);
CREATE TABLE IF NOT EXISTS device_acks(
    device_id TEXT PRIMARY KEY,
    ack_seq INTEGER NOT NULL
);
"""


class StoreError(Exception):
    pass


class UnknownSessionError(StoreError):
    pass


class EventStore:
    """Writers are serialized with one process-wide lock per store; queries
    take the same lock, so readers always see a consistent snapshot."""

    def __init__(self, path: str = ":memory:"):
        self.path = path
        self._lock = threading.RLock()
        self._db = sqlite3.connect(path, check_same_thread=False)
        with self._lock:
            self._db.executescript(_SCHEMA)
            self._db.commit()

    def close(self) -> None:
        self._db.close()

    # ------------------------------------------------------------ sessions

    def create_session(self, session_id: str, meta: dict | None = None,
                       created_ms: int | None = None) -> str:
        if created_ms is None:
            created_ms = int(time.time() * 1000)
        with self._lock:
            self._db.execute(
                "INSERT OR IGNORE INTO sessions(session_id, created_ms, meta) VALUES (?,?,?)",
                (session_id, created_ms, json.dumps(meta or {})))
            self._db.commit()
        return session_id

    def session_exists(self, session_id: str) -> bool:
        with self._lock:
            row = self._db.execute(
                "SELECT 1 FROM sessions WHERE session_id=?", (session_id,)).fetchone()
        return row is not None

    def list_sessions(self) -> list[str]:
        with self._lock:
            rows = self._db.execute(
                "SELECT session_id FROM sessions ORDER BY created_ms, session_id").fetchall()
        return [r[0] for r in rows]

    def session_meta(self, session_id: str) -> dict:
        with self._lock:
            row = self._db.execute(
                "SELECT meta FROM sessions WHERE session_id=?", (session_id,)).fetchone()
        if row is None:
            raise UnknownSessionError(session_id)
        return json.loads(row[0])

    def update_session_meta(self, session_id: str, updates: dict) -> None:
        with self._lock:
            meta = self.session_meta(session_id)
            meta.update(updates)
            self._db.execute("UPDATE sessions SET meta=? WHERE session_id=?",
                             (json.dumps(meta), session_id))
            self._db.commit()

    # -------------------------------------------------------------- ingest

    def ingest(self, session_id: str, frames: list[NotificationFrame],
               received_ms: int) -> dict[str, int]:
        """Store a batch and return per-device cumulative acks.

        Duplicate (device_id, seq) pairs are ignored. The whole batch is
        validated before anything is written; a malformed frame rejects it all.
        """
        if not self.session_exists(session_id):
            raise UnknownSessionError(session_id)
        for f in frames:
            if not isinstance(f, NotificationFrame):
                raise StoreError(f"not a frame: {f!r}")
        with self._lock:
            self._ingest_locked(session_id, frames, received_ms)
            acks = {}
            for device_id in sorted({f.device_id for f in frames}):
                acks[device_id] = self._advance_ack(device_id)
            self._db.commit()
        return acks

    def _ingest_locked(self, session_id, frames, received_ms):
        self._db.executemany(
            "INSERT OR IGNORE INTO events"
            "(session_id, device_id, seq, plate, event, cap, ts_ms, server_received_ms)"
            " VALUES (?,?,?,?,?,?,?,?)",
            [(session_id, f.device_id, f.seq, f.plate, f.event, f.cap, f.ts_ms,
              received_ms) for f in frames])
        self._db.commit()

    def _advance_ack(self, device_id: str) -> int:
        row = self._db.execute(
            "SELECT ack_seq FROM device_acks WHERE device_id=?", (device_id,)).fetchone()
        ack = row[0] if row else 0
        seqs = [r[0] for r in self._db.execute(
            "SELECT seq FROM events WHERE device_id=? AND seq>? ORDER BY seq",
            (device_id, ack))]
        for seq in seqs:
            if seq == ack + 1:
                ack = seq
            else:
                break
        self._db.execute(
            "INSERT INTO device_acks(device_id, ack_seq) VALUES (?,?) "
            "ON CONFLICT(device_id) DO UPDATE SET ack_seq=excluded.ack_seq",
            (device_id, ack))
        return ack

    def ack_for(self, device_id: str) -> int:
        with self._lock:
            row = self._db.execute(
                "SELECT ack_seq FROM device_acks WHERE device_id=?",
                (device_id,)).fetchone()
        return row[0] if row else 0

    # --------------------------------------------------------------- query

    def query_events(self, session_id: str, from_ms: int | None = None,
                     to_ms: int | None = None, device: str | None = None,
                     kind: str | None = None) -> list[EventRecord]:
        """Events of a session, totally ordered by (ts_ms, seq)."""
        if not self.session_exists(session_id):
            raise UnknownSessionError(session_id)
        sql = ("SELECT seq, device_id, ts_ms, plate, event, cap, session_id,"
               " server_received_ms FROM events WHERE session_id=?")
        args: list = [session_id]
        if from_ms is not None:
            sql += " AND ts_ms>=?"
            args.append(from_ms)
        if to_ms is not None:
            sql += " AND ts_ms<=?"
            args.append(to_ms)
        if device is not None:
            sql += " AND device_id=?"
            args.append(device)
        if kind is not None:
            sql += " AND event=?"
            args.append(kind)
        sql += " ORDER BY ts_ms, seq, device_id"
        with self._lock:
            rows = self._db.execute(sql, args).fetchall()
        return [EventRecord(*row) for row in rows]

    def count_events(self, session_id: str) -> int:
        with self._lock:
            row = self._db.execute(
                "SELECT COUNT(*) FROM events WHERE session_id=?",
                (session_id,)).fetchone()
        return row[0]
