"""Standard MIDI File parsing, serialization, and note-grid utilities.

The parser handles format 0/1 files with running status and variable-length
deltas, keeping unknown meta/sysex events as opaque payloads so that a
parse -> serialize -> parse cycle is lossless at the event level.  Grid
utilities quantize note spans to a 16th-note grid and reduce arbitrary
input to a monophonic line.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, NamedTuple

VLQ_MAX = 0x0FFFFFFF  # largest delta expressible in 4 VLQ bytes

META_END_OF_TRACK = 0x2F
META_TEMPO = 0x51


class MidiError(Exception):
    pass


class MalformedHeaderError(MidiError):
    pass


class TruncatedFileError(MidiError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class UnsupportedTimingError(MidiError):
    pass


class VlqOverflowError(MidiError):
    pass


@dataclass(frozen=True)
class MidiEvent:
    """One timed event at an absolute tick.

    kind is one of 'note_on', 'note_off', 'tempo', 'end_of_track',
    'meta', 'sysex', 'channel'.  'channel' covers non-note channel
    messages (CC, program change, ...) kept verbatim via status + data.
    """

    tick: int
    kind: str
    channel: int | None = None
    pitch: int | None = None
    velocity: int | None = None
    tempo_us: int | None = None
    meta_type: int | None = None
    status: int | None = None
    data: bytes = b""


@dataclass
class MidiFile:
    format: int
    ticks_per_quarter: int
    tracks: list[list[MidiEvent]]


@dataclass(frozen=True)
class NoteSpan:
    pitch: int
    onset_tick: int
    duration_ticks: int
    velocity: int


@dataclass(frozen=True)
class GridSpan:
    pitch: int
    onset_step: int
    duration_steps: int


# ---------------------------------------------------------------------------
# variable-length quantities

def encode_vlq(value: int) -> bytes:
    if value < 0 or value > VLQ_MAX:
        raise VlqOverflowError(f"delta {value} outside 28-bit VLQ range")
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(out))


def decode_vlq(data: bytes, pos: int) -> tuple[int, int]:
    """Return (value, new_pos); raises TruncatedFileError on short input."""
    value = 0
    for i in range(4):
        if pos >= len(data):
            raise TruncatedFileError("truncated variable-length quantity", pos)
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise MidiError("variable-length quantity longer than 4 bytes")


# ---------------------------------------------------------------------------
# parsing

_CHANNEL_DATA_LEN = {0x80: 2, 0x90: 2, 0xA0: 2, 0xB0: 2, 0xC0: 1, 0xD0: 1, 0xE0: 2}


def parse_midi(data: bytes) -> MidiFile:
    if len(data) < 14 or data[:4] != b"MThd":
        raise MalformedHeaderError("missing MThd header")
    header_len = struct.unpack(">I", data[4:8])[0]
    if header_len < 6:
        raise MalformedHeaderError(f"header chunk too short ({header_len} bytes)")
    fmt, ntracks, division = struct.unpack(">HHH", data[8:14])
    if fmt not in (0, 1):
        raise MalformedHeaderError(f"unsupported SMF format {fmt}")
    if division & 0x8000:
        raise UnsupportedTimingError("SMPTE time division is not supported")
    if division == 0:
        raise MalformedHeaderError("ticks-per-quarter must be positive")

    tracks: list[list[MidiEvent]] = []
    pos = 8 + header_len
    while pos < len(data) and len(tracks) < ntracks:
        if pos + 8 > len(data):
            raise TruncatedFileError("truncated chunk header", pos)
        chunk_type = data[pos:pos + 4]
        chunk_len = struct.unpack(">I", data[pos + 4:pos + 8])[0]
        body_start = pos + 8
        if body_start + chunk_len > len(data):
            raise TruncatedFileError("truncated track chunk", pos)
        if chunk_type == b"MTrk":
            tracks.append(_parse_track(data, body_start, chunk_len))
        pos = body_start + chunk_len
    if len(tracks) < ntracks:
        raise TruncatedFileError(f"expected {ntracks} tracks, found {len(tracks)}", pos)
    return MidiFile(format=fmt, ticks_per_quarter=division, tracks=tracks)


def _parse_track(data: bytes, start: int, length: int) -> list[MidiEvent]:
    end = start + length
    pos = start
    tick = 0
    running: int | None = None
    events: list[MidiEvent] = []
    while pos < end:
        delta, pos = decode_vlq(data, pos)
        tick += delta
        if pos >= end:
            raise TruncatedFileError("event missing after delta", pos)
        status = data[pos]
        if status & 0x80:
            pos += 1
        else:
            if running is None:
                raise MidiError(f"data byte 0x{status:02X} with no running status")
            status = running

        if status == 0xFF:
            running = None
            if pos >= end:
                raise TruncatedFileError("truncated meta event", pos)
            meta_type = data[pos]
            pos += 1
            mlen, pos = decode_vlq(data, pos)
            if pos + mlen > end:
                raise TruncatedFileError("truncated meta payload", pos)
            payload = data[pos:pos + mlen]
            pos += mlen
            if meta_type == META_END_OF_TRACK:
                events.append(MidiEvent(tick=tick, kind="end_of_track"))
                break
            if meta_type == META_TEMPO and mlen == 3:
                tempo_us = int.from_bytes(payload, "big")
                events.append(MidiEvent(tick=tick, kind="tempo", tempo_us=tempo_us))
            else:
                events.append(MidiEvent(tick=tick, kind="meta",
                                        meta_type=meta_type, data=payload))
        elif status in (0xF0, 0xF7):
            running = None
            slen, pos = decode_vlq(data, pos)
            if pos + slen > end:
                raise TruncatedFileError("truncated sysex payload", pos)
            events.append(MidiEvent(tick=tick, kind="sysex", status=status,
                                    data=data[pos:pos + slen]))
            pos += slen
        else:
            running = status
            hi = status & 0xF0
            channel = status & 0x0F
            nbytes = _CHANNEL_DATA_LEN.get(hi)
            if nbytes is None:
                raise MidiError(f"unexpected status byte 0x{status:02X}")
            if pos + nbytes > end:
                raise TruncatedFileError("truncated channel message", pos)
            params = data[pos:pos + nbytes]
            pos += nbytes
            if hi == 0x90:
                events.append(MidiEvent(tick=tick, kind="note_on", channel=channel,
                                        pitch=params[0], velocity=params[1]))
            elif hi == 0x80:
                events.append(MidiEvent(tick=tick, kind="note_off", channel=channel,
                                        pitch=params[0], velocity=params[1]))
            else:
                events.append(MidiEvent(tick=tick, kind="channel",
                                        channel=channel, status=status, data=params))
    if not events or events[-1].kind != "end_of_track":
        events.append(MidiEvent(tick=tick, kind="end_of_track"))
    return events


# ---------------------------------------------------------------------------
# serialization

def serialize_midi(file: MidiFile) -> bytes:
    out = bytearray()
    out += b"MThd" + struct.pack(">IHHH", 6, file.format,
                                 len(file.tracks), file.ticks_per_quarter)
    for track in file.tracks:
        out += _serialize_track(track)
    return bytes(out)


def _serialize_track(events: list[MidiEvent]) -> bytes:
    body = bytearray()
    last_tick = 0
    evs = list(events)
    if not evs or evs[-1].kind != "end_of_track":
        evs.append(MidiEvent(tick=evs[-1].tick if evs else 0, kind="end_of_track"))
    for ev in evs:
        body += encode_vlq(ev.tick - last_tick)
        last_tick = ev.tick
        if ev.kind == "note_on":
            body += bytes([0x90 | ev.channel, ev.pitch, ev.velocity])
        elif ev.kind == "note_off":
            body += bytes([0x80 | ev.channel, ev.pitch, ev.velocity])
        elif ev.kind == "tempo":
            body += bytes([0xFF, META_TEMPO, 3]) + ev.tempo_us.to_bytes(3, "big")
        elif ev.kind == "end_of_track":
            body += bytes([0xFF, META_END_OF_TRACK, 0])
        elif ev.kind == "meta":
            body += bytes([0xFF, ev.meta_type]) + encode_vlq(len(ev.data)) + ev.data
        elif ev.kind == "sysex":
            body += bytes([ev.status]) + encode_vlq(len(ev.data)) + ev.data
        elif ev.kind == "channel":
            body += bytes([ev.status]) + ev.data
        else:
            raise MidiError(f"unknown event kind {ev.kind!r}")
    return b"MTrk" + struct.pack(">I", len(body)) + bytes(body)


# ---------------------------------------------------------------------------
# note spans

class NoteExtraction(NamedTuple):
    spans: list[NoteSpan]
    dangling_count: int


def extract_note_spans(file: MidiFile) -> NoteExtraction:
    """Pair note-ons with note-offs (FIFO per pitch+channel).

    A note-on with velocity 0 counts as a note-off.  Dangling note-ons are
    closed at the track's final tick and counted in dangling_count.
    """
    spans: list[NoteSpan] = []
    dangling = 0
    for track in file.tracks:
        open_notes: dict[tuple[int, int], list[tuple[int, int]]] = {}
        final_tick = track[-1].tick if track else 0
        for ev in track:
            if ev.kind == "note_on" and ev.velocity > 0:
                open_notes.setdefault((ev.channel, ev.pitch), []).append(
                    (ev.tick, ev.velocity))
            elif ev.kind == "note_off" or (ev.kind == "note_on" and ev.velocity == 0):
                queue = open_notes.get((ev.channel, ev.pitch))
                if queue:
                    onset, velocity = queue.pop(0)
                    spans.append(NoteSpan(ev.pitch, onset,
                                          max(1, ev.tick - onset), velocity))
        for (_, pitch), queue in open_notes.items():
            for onset, velocity in queue:
                spans.append(NoteSpan(pitch, onset,
                                      max(1, final_tick - onset), velocity))
                dangling += 1
    spans.sort(key=lambda s: (s.onset_tick, s.pitch))
    return NoteExtraction(spans, dangling)


# ---------------------------------------------------------------------------
# grid quantization and monophony

def _round_half_up(x: Fraction) -> int:
    return (x + Fraction(1, 2)).__floor__()


def quantize_to_grid(spans: Iterable[NoteSpan], ppq: int) -> list[GridSpan]:
    """Snap note spans to the 16th-note grid (step = ppq/4 ticks)."""
    if ppq < 4:
        raise ValueError("ppq must be at least 4")
    step = Fraction(ppq, 4)
    out = []
    for span in spans:
        onset = _round_half_up(Fraction(span.onset_tick) / step)
        duration = max(1, _round_half_up(Fraction(span.duration_ticks) / step))
        out.append(GridSpan(span.pitch, onset, duration))
    out.sort(key=lambda s: (s.onset_step, s.pitch))
    return out


def reduce_monophonic(spans: Iterable[GridSpan]) -> list[GridSpan]:
    """Force non-overlap: a later onset truncates the sounding note, and
    simultaneous onsets keep only the highest pitch."""
    ordered = sorted(spans, key=lambda s: (s.onset_step, -s.pitch))
    out: list[GridSpan] = []
    for span in ordered:
        if out and span.onset_step == out[-1].onset_step:
            continue  # lower pitch of a simultaneous pair
        if out and out[-1].onset_step + out[-1].duration_steps > span.onset_step:
            prev = out[-1]
            out[-1] = replace(prev, duration_steps=span.onset_step - prev.onset_step)
        out.append(span)
    return out
