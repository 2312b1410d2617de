import json

import numpy as np
import pytest

from duet.protocol import (
    MESSAGE_FIELDS,
    PROTOCOL_VERSION,
    ProtocolError,
    SequenceCounter,
    WireMessage,
    decode_message,
    encode_message,
)


def test_round_trip_examples():
    samples = [
        WireMessage("hello", 0, {"client": "web", "role": "player-a"}),
        WireMessage("note_on", 3, {"pitch": 60, "velocity": 100, "t_ms": 1234.5}),
        WireMessage("note_off", 4, {"pitch": 60, "velocity": 0, "t_ms": 1500.0}),
        WireMessage("turn_state", 7, {"index": 1, "role": "partner",
                                      "ends_at_ms": 16000.0,
                                      "progress_fraction": 0.25}),
        WireMessage("partner_melody", 8, {"tokens": [41, 1, 0], "tempo_bpm": 120.0,
                                          "start_at_ms": 8000.0}),
        WireMessage("error", 9, {"code": "bad-seq", "message": "stale"}),
        WireMessage("ack", 10, {"of": 9}),
    ]
    for msg in samples:
        frame = encode_message(msg)
        assert decode_message(frame) == msg


def test_frames_are_canonical():
    msg = WireMessage("note_on", 1, {"velocity": 100, "pitch": 60, "t_ms": 0.0})
    frame = encode_message(msg)
    assert frame == json.dumps(json.loads(frame), sort_keys=True,
                               separators=(",", ":"))
    assert '"v":"duet/1"' in frame


def test_version_constant():
    assert PROTOCOL_VERSION == "duet/1"
    assert set(MESSAGE_FIELDS) == {
        "hello", "config", "turn_state", "note_on", "note_off",
        "partner_melody", "rating_submit", "error", "ack"}


def test_decode_errors():
    with pytest.raises(ProtocolError) as exc:
        decode_message("not json")
    assert exc.value.code == "bad-frame"

    with pytest.raises(ProtocolError) as exc:
        decode_message('{"v":"duet/2","seq":0,"type":"ack","of":1}')
    assert exc.value.code == "bad-version"

    with pytest.raises(ProtocolError) as exc:
        decode_message('{"v":"duet/1","seq":0,"type":"bogus"}')
    assert exc.value.code == "bad-type"

    with pytest.raises(ProtocolError) as exc:
        decode_message('{"v":"duet/1","type":"ack","of":1}')
    assert exc.value.code == "bad-frame"  # missing seq


def test_unknown_payload_fields_dropped():
    frame = ('{"of":3,"seq":5,"type":"ack","v":"duet/1","x_future":true}')
    msg = decode_message(frame)
    assert msg == WireMessage("ack", 5, {"of": 3})


def test_constructor_rejects_unknown_fields():
    with pytest.raises(ProtocolError):
        WireMessage("ack", 0, {"of": 1, "junk": 2})
    with pytest.raises(ProtocolError):
        WireMessage("no-such-type", 0, {})


def _random_message(rng):
    mtype = str(rng.choice(list(MESSAGE_FIELDS)))
    payload = {}
    for name in MESSAGE_FIELDS[mtype]:
        kind = int(rng.integers(0, 4))
        if kind == 0:
            payload[name] = int(rng.integers(-1000, 1000))
        elif kind == 1:
            payload[name] = float(np.round(rng.uniform(-1e6, 1e6), 3))
        elif kind == 2:
            payload[name] = "".join(chr(int(rng.integers(32, 127)))
                                    for _ in range(int(rng.integers(0, 12))))
        else:
            payload[name] = [int(v) for v in rng.integers(0, 90, 5)]
    # drop a random subset so optional fields are exercised too
    keep = [k for k in payload if rng.random() < 0.8]
    return WireMessage(mtype, int(rng.integers(0, 10_000)),
                       {k: payload[k] for k in keep})


def test_fuzz_round_trip_and_canonical_reencode():
    rng = np.random.Generator(np.random.Philox(key=99))
    for _ in range(1000):
        msg = _random_message(rng)
        frame = encode_message(msg)
        decoded = decode_message(frame)
        assert decoded == msg
        assert encode_message(decoded) == frame


def test_sequence_counter():
    counter = SequenceCounter()
    assert [counter.next() for _ in range(3)] == [0, 1, 2]
    assert counter.check_incoming(0)
    assert counter.check_incoming(5)
    assert not counter.check_incoming(5)
    assert not counter.check_incoming(3)
    assert counter.check_incoming(6)
