"""Turn-taking session engine: alternating timed turns on an injectable clock.

The engine owns all session state and is driven through three calls:
capture_event for live notes, advance for clock progress (returns actions
such as "a partner response is needed"), and deliver_response to join a
finished generation back in.  Production drives it from a wall clock;
tests drive it from a simulated clock, which makes every timing invariant
exactly checkable.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .analysis import RatingForm
from .melody import HOLD, REST, STEPS_PER_BAR, MelodySequence, code_to_pitch, tokenize
from .midi import GridSpan, NoteSpan, reduce_monophonic

LOG_VERSION = "duetlog/1"
CHORD_SUPPRESS_MS = 30.0
PLAYBACK_VELOCITY = 80

ROLE_HUMAN_A = "human-A"
ROLE_HUMAN_B = "human-B"
ROLE_PARTNER = "partner"


class SessionError(Exception):
    pass


class LogFormatError(SessionError):
    pass


@dataclass(frozen=True)
class PartnerConfig:
    kind: str  # 'human-relay' | 'vae' | 'markov'
    bars: int | None = None
    temperature: float | None = None
    similarity: float | None = None
    order: int | None = None

    def __post_init__(self):
        if self.kind not in ("human-relay", "vae", "markov"):
            raise ValueError(f"unknown partner kind {self.kind!r}")


@dataclass(frozen=True)
class SessionConfig:
    partner: PartnerConfig
    turn_seconds: float = 8.0
    cycles: int = 7
    tempo_bpm: float = 120.0
    seed: int = 0
    participant_ids: tuple[str, str] = ("A", "B")

    def __post_init__(self):
        if self.turn_seconds <= 0 or self.cycles < 1 or self.tempo_bpm <= 0:
            raise ValueError("invalid session timing parameters")

    @property
    def turn_ms(self) -> float:
        return self.turn_seconds * 1000.0

    @property
    def trial_ms(self) -> float:
        return 2 * self.cycles * self.turn_ms

    @property
    def step_ms(self) -> Fraction:
        """Duration of one 16th-note grid step in milliseconds."""
        return Fraction(60000) / (4 * Fraction(self.tempo_bpm))

    @property
    def turn_steps(self) -> int:
        steps = Fraction(str(self.turn_ms)) / self.step_ms
        if steps.denominator != 1:
            raise ValueError("turn length is not a whole number of 16th steps")
        return int(steps)


@dataclass
class TurnRecord:
    index: int
    role: str
    start_ms: float
    end_ms: float
    events: list[tuple[int, int, str, float]] = field(default_factory=list)
    tokens: MelodySequence | None = None
    compute_ms: float | None = None


@dataclass
class SessionLog:
    config: SessionConfig
    turns: list[TurnRecord]
    ratings: RatingForm | None = None
    created_at: str = ""
    version: str = LOG_VERSION


# ---------------------------------------------------------------------------
# clocks

class WallClock:
    def now_ms(self) -> float:
        return time.monotonic() * 1000.0


class SimulatedClock:
    def __init__(self, t0_ms: float = 0.0):
        self._t = t0_ms

    def now_ms(self) -> float:
        return self._t

    def advance(self, dt_ms: float) -> float:
        self._t += dt_ms
        return self._t

    def set(self, t_ms: float) -> None:
        if t_ms < self._t:
            raise ValueError("simulated clock cannot go backwards")
        self._t = t_ms


# ---------------------------------------------------------------------------
# scheduling

def plan_schedule(config: SessionConfig) -> list[tuple[int, str, float]]:
    """Turn plan: (index, role, start offset in ms); roles strictly alternate,
    starting with the human."""
    if config.partner.kind == "human-relay":
        roles = (ROLE_HUMAN_A, ROLE_HUMAN_B)
    else:
        roles = (ROLE_HUMAN_A, ROLE_PARTNER)
    return [(i, roles[i % 2], i * config.turn_ms)
            for i in range(2 * config.cycles)]


def _round_half_up(x: Fraction) -> int:
    return (x + Fraction(1, 2)).__floor__()


# actions emitted by Session.advance
@dataclass(frozen=True)
class TurnStarted:
    index: int
    role: str


@dataclass(frozen=True)
class PartnerInputReady:
    turn_index: int          # the partner turn awaiting a response
    input_tokens: MelodySequence


@dataclass(frozen=True)
class SessionEnded:
    pass


class Session:
    """Single-owner session actor; all calls must come from one driver."""

    def __init__(self, config: SessionConfig, clock=None):
        self.config = config
        self.clock = clock or WallClock()
        self.schedule = plan_schedule(config)
        self.turns: list[TurnRecord] = []
        self.ratings: RatingForm | None = None
        self.start_ms: float | None = None
        self._started_turns = 0
        self._ended = False
        self._last_accepted_on_ms: float | None = None
        if config.partner.kind in ("vae", "markov"):
            bars = config.partner.bars or 2
            if config.turn_steps % STEPS_PER_BAR != 0:
                raise SessionError("turn length must be a whole number of bars")
            if config.turn_steps < bars * STEPS_PER_BAR:
                raise SessionError("turn is shorter than the model's span")

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        if self.start_ms is not None:
            raise SessionError("session already started")
        self.start_ms = self.clock.now_ms()

    @property
    def running(self) -> bool:
        return self.start_ms is not None and not self._ended

    def _turn_bounds(self, index: int) -> tuple[float, float]:
        start = self.start_ms + index * self.config.turn_ms
        return start, start + self.config.turn_ms

    def advance(self) -> list:
        """Process any turn boundaries passed since the last call."""
        if self.start_ms is None:
            raise SessionError("session not started")
        now = self.clock.now_ms()
        actions: list = []
        total = len(self.schedule)
        while self._started_turns < total:
            index, role, offset = self.schedule[self._started_turns]
            if now < self.start_ms + offset:
                break
            start, end = self._turn_bounds(index)
            self.turns.append(TurnRecord(index=index, role=role,
                                         start_ms=start, end_ms=end))
            actions.append(TurnStarted(index=index, role=role))
            self._started_turns += 1
            self._last_accepted_on_ms = None
            if role == ROLE_PARTNER:
                prev = self.turns[index - 1]
                prev.tokens = self._turn_to_tokens(prev)
                actions.append(PartnerInputReady(turn_index=index,
                                                 input_tokens=prev.tokens))
        if not self._ended and now >= self.start_ms + self.config.trial_ms:
            # close out the final turn's token capture
            if self.turns and self.turns[-1].role != ROLE_PARTNER:
                last = self.turns[-1]
                if last.tokens is None and self.config.partner.kind != "human-relay":
                    last.tokens = self._turn_to_tokens(last)
            self._ended = True
            actions.append(SessionEnded())
        return actions

    # -- input capture -----------------------------------------------------

    def capture_event(self, pitch: int, velocity: int, kind: str, t_ms: float,
                      source: str = "A") -> tuple[str, str | None]:
        """Returns ('accepted', None), ('ignored', reason) or ('rejected', reason)."""
        if kind not in ("on", "off"):
            return "rejected", "bad-kind"
        if not (0 <= pitch <= 127) or not (0 <= velocity <= 127):
            return "rejected", "bad-range"
        if self.start_ms is None or t_ms < self.start_ms:
            return "ignored", "outside-session"
        index = int((t_ms - self.start_ms) // self.config.turn_ms)
        if index >= len(self.schedule):
            return "ignored", "outside-session"
        role = self.schedule[index][1]
        expected_role = ROLE_HUMAN_A if source == "A" else ROLE_HUMAN_B
        if role != expected_role:
            return "ignored", "outside-turn"
        if index >= len(self.turns):
            return "ignored", "outside-turn"  # boundary not yet processed
        turn = self.turns[index]
        if kind == "on":
            last = self._last_accepted_on_ms
            if last is not None and t_ms - last < CHORD_SUPPRESS_MS:
                return "ignored", "chord-suppressed"
            self._last_accepted_on_ms = t_ms
        turn.events.append((pitch, velocity, kind, t_ms))
        return "accepted", None

    # -- tokenization of a finished human turn -----------------------------

    def _turn_to_tokens(self, turn: TurnRecord) -> MelodySequence:
        cfg = self.config
        bars = cfg.partner.bars or 2
        spans = _events_to_note_spans(turn.events, turn.start_ms, cfg.turn_ms)
        step = cfg.step_ms
        grid = []
        for span in spans:
            onset = _round_half_up(Fraction(span.onset_tick) / step)
            dur = max(1, _round_half_up(Fraction(span.duration_ticks) / step))
            grid.append(GridSpan(span.pitch, onset, dur))
        grid.sort(key=lambda s: (s.onset_step, s.pitch))
        mono = reduce_monophonic(grid)
        offset = cfg.turn_steps - bars * STEPS_PER_BAR
        return tokenize(mono, bars, offset_step=offset)

    # -- partner playback --------------------------------------------------

    def deliver_response(self, turn_index: int, melody: MelodySequence,
                         compute_ms: float) -> list[tuple[int, int, str, float]]:
        """Schedule a generated melody into the partner's turn.

        The melody loops end-to-end to fill the turn.  If generation took
        longer than the one-step latency budget, the excess is covered by
        leading rests: missed = ceil((compute_ms - step) / step) steps.
        """
        if turn_index >= len(self.turns):
            raise SessionError("partner turn not started")
        turn = self.turns[turn_index]
        if turn.role != ROLE_PARTNER:
            raise SessionError(f"turn {turn_index} is not a partner turn")
        cfg = self.config
        step = float(cfg.step_ms)
        missed = 0
        if compute_ms > step:
            missed = math.ceil((compute_ms - step) / step)
        codes = list(melody.codes)
        tiled = (codes * math.ceil(cfg.turn_steps / len(codes)))[:cfg.turn_steps]
        for i in range(min(missed, len(tiled))):
            tiled[i] = REST
        _sanitize_holds(tiled)

        events: list[tuple[int, int, str, float]] = []
        for span in _codes_to_spans(tiled):
            on_t = turn.start_ms + span.onset_step * step
            off_t = turn.start_ms + (span.onset_step + span.duration_steps) * step
            off_t = min(off_t, turn.end_ms - 1.0)
            events.append((span.pitch, PLAYBACK_VELOCITY, "on", on_t))
            events.append((span.pitch, 0, "off", off_t))
        events.sort(key=lambda e: e[3])
        turn.events = events
        turn.tokens = melody
        turn.compute_ms = compute_ms
        return events

    # -- results -----------------------------------------------------------

    def submit_ratings(self, form: RatingForm) -> None:
        self.ratings = form

    def log(self) -> SessionLog:
        return SessionLog(config=self.config, turns=self.turns,
                          ratings=self.ratings,
                          created_at=datetime.now(timezone.utc).isoformat())


def _sanitize_holds(codes: list[int]) -> None:
    """Drop HOLDs left orphaned by rest substitution or tiling truncation."""
    for i, c in enumerate(codes):
        if c == HOLD and (i == 0 or codes[i - 1] == REST):
            codes[i] = REST


def _codes_to_spans(codes: Sequence[int]) -> list[GridSpan]:
    spans: list[GridSpan] = []
    onset = pitch = None
    length = 0
    for i, c in enumerate(codes):
        if c == HOLD:
            length += 1
            continue
        if onset is not None:
            spans.append(GridSpan(pitch, onset, length))
            onset = None
        if c != REST:
            onset, pitch, length = i, code_to_pitch(c), 1
    if onset is not None:
        spans.append(GridSpan(pitch, onset, length))
    return spans


def _events_to_note_spans(events, turn_start_ms: float, turn_ms: float) -> list[NoteSpan]:
    """FIFO on/off pairing in the turn-relative millisecond domain."""
    open_notes: dict[int, list[tuple[float, int]]] = {}
    spans: list[NoteSpan] = []
    for pitch, velocity, kind, t_ms in sorted(events, key=lambda e: e[3]):
        rel = t_ms - turn_start_ms
        if kind == "on" and velocity > 0:
            open_notes.setdefault(pitch, []).append((rel, velocity))
        else:
            queue = open_notes.get(pitch)
            if queue:
                onset, vel = queue.pop(0)
                spans.append(NoteSpan(pitch, int(round(onset)),
                                      max(1, int(round(rel - onset))), vel))
    for pitch, queue in open_notes.items():
        for onset, vel in queue:
            spans.append(NoteSpan(pitch, int(round(onset)),
                                  max(1, int(round(turn_ms - onset))), vel))
    spans.sort(key=lambda s: (s.onset_tick, s.pitch))
    return spans


# ---------------------------------------------------------------------------
# scripted driving (tests, demos, latency simulation)

def simulate_session(
    config: SessionConfig,
    responder: Callable[[MelodySequence, np.random.Generator], MelodySequence] | None,
    script: Sequence[tuple[float, int, int, str]] = (),
    gen_latency_ms: float = 0.0,
    ratings: RatingForm | None = None,
) -> SessionLog:
    """Run a full session on a simulated clock.

    script entries are (t_ms, pitch, velocity, kind) human events relative
    to session start.  gen_latency_ms advances the simulated clock inside
    each partner generation, exercising the latency contract.
    """
    clock = SimulatedClock()
    session = Session(config, clock=clock)
    rng = np.random.Generator(np.random.Philox(key=config.seed))
    session.start()
    pending = sorted(script, key=lambda e: e[0])
    boundaries = [off for _, _, off in session.schedule] + [config.trial_ms]
    times = sorted({t for t, *_ in pending} | set(boundaries))
    ei = 0
    for t in times:
        clock.set(t)
        for action in session.advance():
            if isinstance(action, PartnerInputReady):
                if responder is None:
                    raise SessionError("partner turn reached without a responder")
                before = clock.now_ms()
                if gen_latency_ms:
                    clock.advance(gen_latency_ms)
                melody = responder(action.input_tokens, rng)
                session.deliver_response(action.turn_index, melody,
                                         clock.now_ms() - before)
        while ei < len(pending) and pending[ei][0] <= t:
            t_ev, pitch, velocity, kind = pending[ei]
            session.capture_event(pitch, velocity, kind, t_ev)
            ei += 1
    if ratings is not None:
        session.submit_ratings(ratings)
    return session.log()


# ---------------------------------------------------------------------------
# log persistence (JSON lines; header record first)

def _config_to_dict(config: SessionConfig) -> dict:
    d = asdict(config)
    d["participant_ids"] = list(config.participant_ids)
    return d


def _config_from_dict(d: dict) -> SessionConfig:
    partner = PartnerConfig(**d["partner"])
    return SessionConfig(partner=partner,
                         turn_seconds=d["turn_seconds"], cycles=d["cycles"],
                         tempo_bpm=d["tempo_bpm"], seed=d["seed"],
                         participant_ids=tuple(d["participant_ids"]))


def persist_log(log: SessionLog, sink) -> None:
    """Write a session log as JSON lines to a path or open text file."""
    if isinstance(sink, (str, Path)):
        with open(sink, "w") as fh:
            persist_log(log, fh)
        return
    header = {"record": "header", "version": log.version,
              "created_at": log.created_at, "config": _config_to_dict(log.config)}
    sink.write(json.dumps(header, sort_keys=True) + "\n")
    for turn in log.turns:
        rec = {"record": "turn", "index": turn.index, "role": turn.role,
               "start_ms": turn.start_ms, "end_ms": turn.end_ms,
               "events": [list(e) for e in turn.events],
               "tokens": list(turn.tokens.codes) if turn.tokens else None,
               "compute_ms": turn.compute_ms}
        sink.write(json.dumps(rec, sort_keys=True) + "\n")
    if log.ratings is not None:
        sink.write(json.dumps({"record": "ratings", **asdict(log.ratings)},
                              sort_keys=True) + "\n")


def load_log(source) -> SessionLog:
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            return load_log(fh)
    lines = [ln for ln in source.read().splitlines() if ln.strip()]
    if not lines:
        raise LogFormatError("empty log")
    try:
        records = [json.loads(ln) for ln in lines]
    except json.JSONDecodeError as exc:
        raise LogFormatError(f"malformed log line: {exc}") from exc
    header = records[0]
    if header.get("record") != "header":
        raise LogFormatError("first record is not a header")
    if header.get("version") != LOG_VERSION:
        raise LogFormatError(f"unsupported log version {header.get('version')!r}")
    log = SessionLog(config=_config_from_dict(header["config"]), turns=[],
                     created_at=header["created_at"])
    for rec in records[1:]:
        if rec["record"] == "turn":
            tokens = rec["tokens"]
            log.turns.append(TurnRecord(
                index=rec["index"], role=rec["role"],
                start_ms=rec["start_ms"], end_ms=rec["end_ms"],
                events=[(e[0], e[1], e[2], e[3]) for e in rec["events"]],
                tokens=MelodySequence(tuple(tokens)) if tokens else None,
                compute_ms=rec["compute_ms"]))
        elif rec["record"] == "ratings":
            rec = {k: v for k, v in rec.items() if k != "record"}
            rec["sfss_items"] = tuple(rec["sfss_items"])
            log.ratings = RatingForm(**rec)
        else:
            raise LogFormatError(f"unknown record type {rec['record']!r}")
    return log
