"""Text wire protocol between the session host and its clients.

One JSON object per frame, canonical form (sorted keys, no whitespace).
Every frame carries the protocol version and a per-connection sequence
number.  Unknown payload fields are dropped on decode for forward
compatibility, so decode(encode(m)) == m and canonical re-encoding of a
canonical frame is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

PROTOCOL_VERSION = "duet/1"

# payload fields understood for each message type
MESSAGE_FIELDS: dict[str, frozenset[str]] = {
    "hello": frozenset({"client", "role"}),
    "config": frozenset({"config"}),
    "turn_state": frozenset({"index", "role", "ends_at_ms", "progress_fraction"}),
    "note_on": frozenset({"pitch", "velocity", "t_ms"}),
    "note_off": frozenset({"pitch", "velocity", "t_ms"}),
    "partner_melody": frozenset({"tokens", "tempo_bpm", "start_at_ms"}),
    "rating_submit": frozenset({"form"}),
    "error": frozenset({"code", "message"}),
    "ack": frozenset({"of"}),
}


class ProtocolError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


@dataclass(frozen=True)
class WireMessage:
    type: str
    seq: int
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        known = MESSAGE_FIELDS.get(self.type)
        if known is None:
            raise ProtocolError("bad-type", f"unknown message type {self.type!r}")
        extra = set(self.payload) - known
        if extra:
            raise ProtocolError("bad-field",
                                f"unknown fields for {self.type}: {sorted(extra)}")


def encode_message(msg: WireMessage) -> str:
    frame = {"v": PROTOCOL_VERSION, "seq": msg.seq, "type": msg.type, **msg.payload}
    return json.dumps(frame, sort_keys=True, separators=(",", ":"))


def decode_message(frame: str) -> WireMessage:
    try:
        obj = json.loads(frame)
    except json.JSONDecodeError as exc:
        raise ProtocolError("bad-frame", str(exc)) from exc
    if not isinstance(obj, dict):
        raise ProtocolError("bad-frame", "frame is not an object")
    if obj.get("v") != PROTOCOL_VERSION:
        raise ProtocolError("bad-version", f"expected {PROTOCOL_VERSION}")
    mtype = obj.get("type")
    known = MESSAGE_FIELDS.get(mtype)
    if known is None:
        raise ProtocolError("bad-type", f"unknown message type {mtype!r}")
    seq = obj.get("seq")
    if not isinstance(seq, int):
        raise ProtocolError("bad-frame", "missing integer seq")
    payload = {k: v for k, v in obj.items() if k in known}
    return WireMessage(type=mtype, seq=seq, payload=payload)


class SequenceCounter:
    """Monotone per-connection sequence numbers, with gap detection."""

    def __init__(self):
        self._next_out = 0
        self._last_in: int | None = None

    def next(self) -> int:
        value = self._next_out
        self._next_out += 1
        return value

    def check_incoming(self, seq: int) -> bool:
        """True if the sequence number strictly increased."""
        ok = self._last_in is None or seq > self._last_in
        if ok:
            self._last_in = seq
        return ok
