"""Token representation of monophonic melodies and corpus windowing.

A melody lives on a 16th-note grid as a fixed-length sequence of integer
token codes: REST (0), HOLD (1), or NOTE_ON for one of the 88 piano keys
(codes 2..89, pitch = code + 19).  Sequences span 2 or 4 bars of 4/4,
i.e. 32 or 64 steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .midi import GridSpan

REST = 0
HOLD = 1
VOCAB_SIZE = 90
PITCH_MIN = 21
PITCH_MAX = 108
STEPS_PER_BAR = 16

DATASET_FORMAT = "melodyset/1"


class MelodyError(Exception):
    pass


class InvalidSequenceError(MelodyError):
    pass


class OverlapError(MelodyError):
    pass


def pitch_to_code(pitch: int) -> int:
    if not PITCH_MIN <= pitch <= PITCH_MAX:
        raise ValueError(f"pitch {pitch} outside piano range")
    return pitch - 19


def code_to_pitch(code: int) -> int:
    if not 2 <= code < VOCAB_SIZE:
        raise ValueError(f"code {code} is not a note-on token")
    return code + 19


def fold_pitch(pitch: int) -> int:
    """Transpose by octaves until the pitch lies on the 88-key piano."""
    while pitch < PITCH_MIN:
        pitch += 12
    while pitch > PITCH_MAX:
        pitch -= 12
    return pitch


def validate_codes(codes: Sequence[int]) -> None:
    if len(codes) not in (2 * STEPS_PER_BAR, 4 * STEPS_PER_BAR):
        raise InvalidSequenceError(f"length {len(codes)} is not 32 or 64")
    for i, c in enumerate(codes):
        if not 0 <= c < VOCAB_SIZE:
            raise InvalidSequenceError(f"code {c} at step {i} out of vocabulary")
        if c == HOLD and (i == 0 or codes[i - 1] == REST):
            raise InvalidSequenceError(f"HOLD at step {i} has nothing to extend")


@dataclass(frozen=True)
class MelodySequence:
    codes: tuple[int, ...]

    def __post_init__(self):
        validate_codes(self.codes)

    @property
    def bars(self) -> int:
        return len(self.codes) // STEPS_PER_BAR

    def __len__(self) -> int:
        return len(self.codes)

    @classmethod
    def rest(cls, bars: int) -> "MelodySequence":
        return cls(codes=(REST,) * (bars * STEPS_PER_BAR))


@dataclass
class MelodyDataset:
    bars: int
    sequences: list[MelodySequence]
    rest_threshold_steps: int
    source_counts: dict[str, int] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# span <-> token conversion

def _check_monophonic(spans: Sequence[GridSpan]) -> None:
    for a, b in zip(spans, spans[1:]):
        if a.onset_step + a.duration_steps > b.onset_step:
            raise OverlapError(
                f"spans at steps {a.onset_step} and {b.onset_step} overlap; "
                "call reduce_monophonic first")


def tokenize(spans: Sequence[GridSpan], bars: int, offset_step: int = 0) -> MelodySequence:
    """Render a window of monophonic spans as a token sequence.

    Spans crossing the window start are re-attacked at step 0; pitches
    outside the piano range are octave-folded into it.
    """
    if bars not in (2, 4):
        raise ValueError("bars must be 2 or 4")
    if offset_step % STEPS_PER_BAR != 0 or offset_step < 0:
        raise ValueError("offset_step must be a non-negative bar boundary")
    ordered = sorted(spans, key=lambda s: s.onset_step)
    _check_monophonic(ordered)
    n = bars * STEPS_PER_BAR
    codes = [REST] * n
    for span in ordered:
        start = span.onset_step - offset_step
        end = start + span.duration_steps
        if end <= 0 or start >= n:
            continue
        s = max(start, 0)
        codes[s] = pitch_to_code(fold_pitch(span.pitch))
        for i in range(s + 1, min(end, n)):
            codes[i] = HOLD
    return MelodySequence(tuple(codes))


def detokenize(seq: MelodySequence | Sequence[int]) -> list[GridSpan]:
    """Inverse of tokenize over one window (onsets relative to window start)."""
    codes = seq.codes if isinstance(seq, MelodySequence) else tuple(seq)
    validate_codes(codes)
    spans: list[GridSpan] = []
    onset = None
    pitch = None
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


# ---------------------------------------------------------------------------
# dataset construction

def max_rest_run(codes: Sequence[int]) -> int:
    longest = run = 0
    for c in codes:
        run = run + 1 if c == REST else 0
        longest = max(longest, run)
    return longest


def build_dataset(
    melodies: Iterable[tuple[Sequence[GridSpan], int]],
    bars: int,
    rest_threshold_steps: int = 16,
    source_ids: Sequence[str] | None = None,
) -> MelodyDataset:
    """Window each source melody into overlapping segments (hop = 1 bar).

    Windows containing a contiguous rest longer than rest_threshold_steps
    are dropped, as are exact duplicate sequences.
    """
    if rest_threshold_steps < 1:
        raise ValueError("rest_threshold_steps must be positive")
    sequences: list[MelodySequence] = []
    seen: set[tuple[int, ...]] = set()
    source_counts: dict[str, int] = {}
    window = bars * STEPS_PER_BAR
    for idx, (spans, length_steps) in enumerate(melodies):
        source = source_ids[idx] if source_ids is not None else str(idx)
        count = 0
        for offset in range(0, length_steps - window + 1, STEPS_PER_BAR):
            seq = tokenize(spans, bars, offset)
            if max_rest_run(seq.codes) > rest_threshold_steps:
                continue
            if seq.codes in seen:
                continue
            seen.add(seq.codes)
            sequences.append(seq)
            count += 1
        source_counts[source] = count
    return MelodyDataset(bars=bars, sequences=sequences,
                         rest_threshold_steps=rest_threshold_steps,
                         source_counts=source_counts)


def candidate_window_count(length_steps: int, bars: int) -> int:
    """Number of bar-aligned windows before any exclusion."""
    return max(0, length_steps // STEPS_PER_BAR - bars + 1)


# ---------------------------------------------------------------------------
# dataset file format: one header line, then comma-separated codes per line

def save_dataset(dataset: MelodyDataset, path: str | Path) -> None:
    lines = [f"{DATASET_FORMAT} bars={dataset.bars} vocab={VOCAB_SIZE} "
             f"rest_threshold={dataset.rest_threshold_steps}"]
    for seq in dataset.sequences:
        lines.append(",".join(str(c) for c in seq.codes))
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path: str | Path) -> MelodyDataset:
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MelodyError("empty dataset file")
    header = lines[0].split()
    if not header or header[0] != DATASET_FORMAT:
        raise MelodyError(f"unsupported dataset format: {lines[0]!r}")
    fields = dict(part.split("=", 1) for part in header[1:])
    bars = int(fields["bars"])
    if int(fields["vocab"]) != VOCAB_SIZE:
        raise MelodyError("vocabulary size mismatch")
    sequences = [MelodySequence(tuple(int(c) for c in ln.split(",")))
                 for ln in lines[1:]]
    for seq in sequences:
        if seq.bars != bars:
            raise MelodyError("sequence length does not match header bars")
    return MelodyDataset(bars=bars, sequences=sequences,
                         rest_threshold_steps=int(fields["rest_threshold"]),
                         source_counts={"file": len(sequences)})


# ---------------------------------------------------------------------------
# distance metric used for the imitation sweep

def normalized_edit_distance(a: Sequence[int], b: Sequence[int]) -> float:
    """Levenshtein distance divided by the longer length (0 = identical)."""
    if not a and not b:
        return 0.0
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1,
                           prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1] / max(len(a), len(b))
