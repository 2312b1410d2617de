import io

import pytest

from duet.analysis import RatingForm
from duet.melody import HOLD, REST, MelodySequence, pitch_to_code
from duet.session import (
    CHORD_SUPPRESS_MS,
    LOG_VERSION,
    LogFormatError,
    PartnerConfig,
    PartnerInputReady,
    Session,
    SessionConfig,
    SessionEnded,
    SessionError,
    SimulatedClock,
    TurnStarted,
    load_log,
    persist_log,
    plan_schedule,
    simulate_session,
)

VAE_PARTNER = PartnerConfig(kind="vae", bars=2, temperature=1.0, similarity=0.9)
RELAY = PartnerConfig(kind="human-relay")

FORM = RatingForm(musicality=4, realism=5, ease_to_interact=4,
                  creativity_improvisation=3, enjoyable=6, interesting=5,
                  ios=3, sfss_items=(3,) * 9)


def _echo(tokens, rng):
    return tokens


def _fixed(codes):
    seq = MelodySequence(tuple(codes))
    return lambda tokens, rng: seq


# ---------------------------------------------------------------------------
# scheduling arithmetic

def test_default_schedule():
    cfg = SessionConfig(partner=VAE_PARTNER)
    plan = plan_schedule(cfg)
    assert len(plan) == 14
    assert plan[0] == (0, "human-A", 0.0)
    assert plan[1] == (1, "partner", 8000.0)
    assert plan[-1] == (13, "partner", 104000.0)
    assert cfg.trial_ms == 112000.0
    assert cfg.turn_steps == 64  # 8 s at 120 bpm = 16 beats = 4 bars
    assert float(cfg.step_ms) == 125.0


def test_relay_schedule_alternates_humans():
    plan = plan_schedule(SessionConfig(partner=RELAY, cycles=2))
    assert [role for _, role, _ in plan] == \
        ["human-A", "human-B", "human-A", "human-B"]


def test_turn_must_cover_model_span():
    cfg = SessionConfig(partner=PartnerConfig(kind="vae", bars=4),
                        turn_seconds=4.0)
    with pytest.raises(SessionError):
        Session(cfg, clock=SimulatedClock())


def test_non_integer_turn_steps_rejected():
    cfg = SessionConfig(partner=VAE_PARTNER, tempo_bpm=100.0)
    with pytest.raises(ValueError):
        cfg.turn_steps  # 8 s at 100 bpm is 53.33 sixteenth steps


# ---------------------------------------------------------------------------
# lifecycle and capture

def _started(cfg=None):
    clock = SimulatedClock()
    session = Session(cfg or SessionConfig(partner=VAE_PARTNER), clock=clock)
    session.start()
    session.advance()
    return session, clock


def test_advance_emits_turn_boundaries():
    session, clock = _started()
    clock.set(8000.0)
    actions = session.advance()
    assert TurnStarted(index=1, role="partner") in actions
    ready = [a for a in actions if isinstance(a, PartnerInputReady)]
    assert len(ready) == 1
    assert ready[0].turn_index == 1


def test_empty_human_turn_yields_all_rest_input():
    session, clock = _started()
    clock.set(8000.0)
    (ready,) = [a for a in session.advance()
                if isinstance(a, PartnerInputReady)]
    assert ready.input_tokens == MelodySequence.rest(2)


def test_capture_rules():
    session, clock = _started()
    assert session.capture_event(60, 100, "on", 1000.0) == ("accepted", None)
    assert session.capture_event(60, 0, "off", 1400.0) == ("accepted", None)
    assert session.capture_event(60, 100, "bang", 1500.0) == \
        ("rejected", "bad-kind")
    assert session.capture_event(200, 100, "on", 1500.0) == \
        ("rejected", "bad-range")
    assert session.capture_event(60, 100, "on", -5.0) == \
        ("ignored", "outside-session")
    clock.set(8000.0)
    session.advance()
    assert session.capture_event(60, 100, "on", 8500.0) == \
        ("ignored", "outside-turn")  # partner's turn


def test_chord_suppression_window():
    session, _ = _started()
    assert session.capture_event(60, 100, "on", 1000.0)[0] == "accepted"
    status, reason = session.capture_event(64, 100, "on",
                                           1000.0 + CHORD_SUPPRESS_MS - 1)
    assert (status, reason) == ("ignored", "chord-suppressed")
    assert session.capture_event(64, 100, "on",
                                 1000.0 + CHORD_SUPPRESS_MS)[0] == "accepted"
    # note-offs are never suppressed
    assert session.capture_event(60, 0, "off", 1010.0)[0] == "accepted"


def test_capture_quantizes_into_partner_input():
    session, clock = _started()
    # a 2-bar model hears the last 2 of the turn's 4 bars; play a quarter
    # note on middle C at the start of bar 3 (125 ms per step)
    session.capture_event(60, 100, "on", 4000.0)
    session.capture_event(60, 0, "off", 4500.0)
    clock.set(8000.0)
    (ready,) = [a for a in session.advance()
                if isinstance(a, PartnerInputReady)]
    codes = ready.input_tokens.codes
    assert codes[:5] == (pitch_to_code(60), HOLD, HOLD, HOLD, REST)


def test_session_ends_after_trial():
    session, clock = _started()
    clock.set(112000.0)
    actions = session.advance()
    assert any(isinstance(a, SessionEnded) for a in actions)
    assert not session.running


# ---------------------------------------------------------------------------
# partner playback and latency contract

def test_deliver_response_fills_turn():
    session, clock = _started()
    clock.set(8000.0)
    session.advance()
    melody = MelodySequence(tuple([pitch_to_code(60)] + [REST] * 31))
    events = session.deliver_response(1, melody, compute_ms=50.0)
    ons = [e for e in events if e[2] == "on"]
    assert [e[3] for e in ons] == [8000.0, 12000.0]  # looped once
    assert all(8000.0 <= e[3] < 16000.0 for e in events)


def test_slow_generation_substitutes_leading_rests():
    session, clock = _started()
    clock.set(8000.0)
    session.advance()
    melody = MelodySequence(
        tuple([pitch_to_code(60), HOLD, pitch_to_code(64), HOLD] + [REST] * 28))
    # 300 ms compute at 125 ms per step: ceil((300-125)/125) = 2 missed
    # steps, so the first two steps are silenced and playback resumes at
    # the third step
    events = session.deliver_response(1, melody, compute_ms=300.0)
    first_on = min(e[3] for e in events if e[2] == "on")
    assert first_on == 8000.0 + 2 * 125.0
    assert session.turns[1].compute_ms == 300.0


def test_fast_generation_starts_on_time():
    session, clock = _started()
    clock.set(8000.0)
    session.advance()
    melody = MelodySequence(tuple([pitch_to_code(72)] + [REST] * 31))
    events = session.deliver_response(1, melody, compute_ms=100.0)
    assert min(e[3] for e in events) == 8000.0


def test_deliver_rejects_human_turn():
    session, _ = _started()
    with pytest.raises(SessionError):
        session.deliver_response(0, MelodySequence.rest(2), 0.0)


# ---------------------------------------------------------------------------
# scripted sessions

def _quarter_note_script(turn_starts, pitch=60):
    # place the note at the start of bar 3 so a 2-bar model hears it
    script = []
    for t0 in turn_starts:
        script.append((t0 + 4010.0, pitch, 100, "on"))
        script.append((t0 + 4510.0, pitch, 0, "off"))
    return script


def test_simulated_session_invariants():
    cfg = SessionConfig(partner=VAE_PARTNER, cycles=3)
    human_starts = [i * 8000.0 for i in range(0, 6, 2)]
    log = simulate_session(cfg, _echo, script=_quarter_note_script(human_starts),
                           ratings=FORM)
    assert len(log.turns) == 6
    for turn in log.turns:
        assert turn.end_ms - turn.start_ms == 8000.0
        for _, _, _, t in turn.events:
            assert turn.start_ms <= t < turn.end_ms
    roles = [t.role for t in log.turns]
    assert roles == ["human-A", "partner"] * 3
    # echo partner tokens mirror the quantized human input
    for human, partner in zip(log.turns[::2], log.turns[1::2]):
        assert partner.tokens == human.tokens
        assert partner.tokens.codes[0] == pitch_to_code(60)
    assert log.ratings == FORM


def test_simulated_session_latency_applied():
    cfg = SessionConfig(partner=VAE_PARTNER, cycles=1)
    codes = [pitch_to_code(60), HOLD, pitch_to_code(64), HOLD] + [REST] * 28
    log = simulate_session(cfg, _fixed(codes), gen_latency_ms=300.0)
    partner = log.turns[1]
    first_on = min(t for _, _, kind, t in partner.events if kind == "on")
    assert first_on == partner.start_ms + 2 * 125.0


def test_markov_partner_session_runs():
    cfg = SessionConfig(partner=PartnerConfig(kind="markov", bars=2, order=1),
                        cycles=2)
    log = simulate_session(cfg, _echo,
                           script=_quarter_note_script([0.0, 16000.0]))
    assert len(log.turns) == 4


# ---------------------------------------------------------------------------
# log persistence

def _sample_log():
    cfg = SessionConfig(partner=VAE_PARTNER, cycles=2)
    return simulate_session(cfg, _echo,
                            script=_quarter_note_script([0.0, 16000.0]),
                            ratings=FORM)


def test_log_round_trip(tmp_path):
    log = _sample_log()
    path = tmp_path / "session.duetlog"
    persist_log(log, path)
    loaded = load_log(path)
    assert loaded.version == LOG_VERSION
    assert loaded.config == log.config
    assert len(loaded.turns) == len(log.turns)
    for a, b in zip(loaded.turns, log.turns):
        assert (a.index, a.role, a.start_ms, a.end_ms) == \
            (b.index, b.role, b.start_ms, b.end_ms)
        assert a.events == b.events
        assert a.tokens == b.tokens
        assert a.compute_ms == b.compute_ms
    assert loaded.ratings == log.ratings


def test_log_version_check():
    buf = io.StringIO()
    persist_log(_sample_log(), buf)
    tampered = buf.getvalue().replace(LOG_VERSION, "duetlog/9")
    with pytest.raises(LogFormatError):
        load_log(io.StringIO(tampered))


def test_log_truncation_detected():
    buf = io.StringIO()
    persist_log(_sample_log(), buf)
    lines = buf.getvalue().splitlines()
    truncated = "\n".join(lines[:2])[:-10]
    with pytest.raises(LogFormatError):
        load_log(io.StringIO(truncated))


def test_log_requires_header():
    with pytest.raises(LogFormatError):
        load_log(io.StringIO('{"record": "turn"}\n'))
    with pytest.raises(LogFormatError):
        load_log(io.StringIO(""))
