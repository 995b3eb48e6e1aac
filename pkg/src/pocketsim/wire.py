"""Line-delimited wire format for device notifications.

One frame per line: a canonical JSON object (sorted keys, no spaces), UTF-8,
terminated by a newline. Plate -1 marks a device-level event. Decode failures
report the byte offset of the offending content and never emit a partial
frame.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

DEVICE_LEVEL = -1
EVENT_KINDS = ("touch", "release")


class DecodeError(ValueError):
    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class NotificationFrame:
    seq: int
    device_id: str
    ts_ms: int
    plate: int           # 0..4, or -1 for a fused device-level event
    event: str           # "touch" | "release"
    cap: float | None = None


@dataclass(frozen=True)
class EventRecord:
    seq: int
    device_id: str
    ts_ms: int
    plate: int
    event: str
    cap: float | None
    session_id: str
    server_received_ms: int

    def frame(self) -> NotificationFrame:
        return NotificationFrame(self.seq, self.device_id, self.ts_ms,
                                 self.plate, self.event, self.cap)


def _validate(fields: dict, offset: int) -> NotificationFrame:
    try:
        seq = fields["seq"]
        device_id = fields["device_id"]
        ts_ms = fields["ts_ms"]
        plate = fields["plate"]
        event = fields["event"]
    except KeyError as e:
        raise DecodeError(f"missing field {e.args[0]}", offset) from None
    cap = fields.get("cap")
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 1:
        raise DecodeError(f"seq must be a positive integer, got {seq!r}", offset)
    if not isinstance(device_id, str) or not device_id:
        raise DecodeError("device_id must be a non-empty string", offset)
    if not isinstance(ts_ms, int) or isinstance(ts_ms, bool) or ts_ms < 0:
        raise DecodeError(f"ts_ms must be a non-negative integer, got {ts_ms!r}", offset)
    if not isinstance(plate, int) or isinstance(plate, bool) or not (-1 <= plate <= 4):
        raise DecodeError(f"plate must be -1..4, got {plate!r}", offset)
    if event not in EVENT_KINDS:
        raise DecodeError(f"event must be one of {EVENT_KINDS}, got {event!r}", offset)
    if cap is not None:
        if isinstance(cap, bool) or not isinstance(cap, (int, float)) or not (0 <= cap <= 100):
            raise DecodeError(f"cap must be in 0..100, got {cap!r}", offset)
        cap = float(cap)
    return NotificationFrame(seq, device_id, ts_ms, plate, event, cap)


def encode_frame(frame: NotificationFrame) -> bytes:
    fields = asdict(frame)
    if fields["cap"] is None:
        del fields["cap"]
    return json.dumps(fields, sort_keys=True, separators=(",", ":")).encode() + b"\n"


def decode_frame(data: bytes, offset: int = 0) -> NotificationFrame:
    """Decode a single frame line. `offset` shifts reported error positions."""
    line = data.rstrip(b"\n")
    if not line:
        raise DecodeError("empty frame", offset)
    try:
        text = line.decode("utf-8")
    except UnicodeDecodeError as e:
        raise DecodeError("invalid utf-8", offset + e.start) from None
    try:
        fields = json.loads(text)
    except json.JSONDecodeError as e:
        raise DecodeError(f"bad json: {e.msg}", offset + e.pos) from None
    if not isinstance(fields, dict):
        raise DecodeError("frame must be a json object", offset)
    return _validate(fields, offset)


def encode_frames(frames: list[NotificationFrame]) -> bytes:
    return b"".join(encode_frame(f) for f in frames)


def decode_frames(data: bytes) -> list[NotificationFrame]:
    """Decode a batch; any bad line fails the whole batch."""
    frames = []
    offset = 0
    for raw in data.split(b"\n"):
        if raw:
            frames.append(decode_frame(raw, offset))
        offset += len(raw) + 1
    return frames


def encode_ack(device_id: str, ack_seq: int) -> bytes:
    return json.dumps({"ack_seq": ack_seq, "device_id": device_id},
                      sort_keys=True, separators=(",", ":")).encode() + b"\n"


def decode_ack(data: bytes) -> tuple[str, int]:
    try:
        fields = json.loads(data.decode("utf-8"))
        return str(fields["device_id"]), int(fields["ack_seq"])
    except (ValueError, KeyError, TypeError) as e:
        raise DecodeError(f"bad ack: {e}") from None
