"""Rating instruments and condition-contrast estimation.

Post-trial forms collect six 7-point performance items, a 0-6 self-other
integration score, and nine 5-point flow items averaged into one score.
Condition effects versus the human-human baseline are estimated with a
per-participant paired contrast: each participant's human-partner mean is
their baseline, and a condition's effect is the mean of (rating -
baseline) over participants.  This deliberately replaces mixed-effects
fitting with an estimator that is exact on noiseless data; outputs are
labeled contrast estimates.
"""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

PERFORMANCE_ITEMS = (
    "musicality",
    "realism",
    "ease_to_interact",
    "creativity_improvisation",
    "enjoyable",
    "interesting",
)

CONDITIONS = (
    "H",
    "2B-T+S", "2B+T-S", "2B-T-S", "2B+T+S",
    "4B-T+S", "4B+T-S", "4B-T-S", "4B+T+S",
)

BASELINE_CONDITION = "H"


class AnalysisError(Exception):
    pass


@dataclass(frozen=True)
class RatingForm:
    musicality: int
    realism: int
    ease_to_interact: int
    creativity_improvisation: int
    enjoyable: int
    interesting: int
    ios: int
    sfss_items: tuple[int, ...]


@dataclass(frozen=True)
class RatingRow:
    participant_id: str
    condition: str
    measure: str
    value: float

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise AnalysisError(f"unknown condition {self.condition!r}")


@dataclass(frozen=True)
class ConditionEffect:
    condition: str
    estimate: float
    std_error: float | None  # undefined when fewer than 2 participants
    n_participants: int


def score_sfss(items: Sequence[int]) -> float:
    """Average of the nine flow items (each 1-5)."""
    if len(items) != 9:
        raise AnalysisError(f"expected 9 flow items, got {len(items)}")
    for i, v in enumerate(items):
        if not 1 <= v <= 5:
            raise AnalysisError(f"flow item {i} value {v} outside 1-5")
    return sum(items) / 9


def validate_form(form: RatingForm) -> list[str]:
    """Empty list means valid; otherwise each violation names field and bound."""
    violations = []
    for name in PERFORMANCE_ITEMS:
        v = getattr(form, name)
        if v < 1:
            violations.append(f"{name} < 1")
        elif v > 7:
            violations.append(f"{name} > 7")
    if form.ios < 0:
        violations.append("ios < 0")
    elif form.ios > 6:
        violations.append("ios > 6")
    if len(form.sfss_items) != 9:
        violations.append(f"sfss_items count {len(form.sfss_items)} != 9")
    else:
        for i, v in enumerate(form.sfss_items):
            if v < 1:
                violations.append(f"sfss_items[{i}] < 1")
            elif v > 5:
                violations.append(f"sfss_items[{i}] > 5")
    return violations


def form_to_rows(participant_id: str, condition: str, form: RatingForm) -> list[RatingRow]:
    rows = [RatingRow(participant_id, condition, name, float(getattr(form, name)))
            for name in PERFORMANCE_ITEMS]
    rows.append(RatingRow(participant_id, condition, "ios", float(form.ios)))
    rows.append(RatingRow(participant_id, condition, "sfss", score_sfss(form.sfss_items)))
    return rows


def default_exclusions() -> list[str]:
    """Performance items dropped from analysis by default."""
    return ["musicality", "interesting"]


@dataclass(frozen=True)
class EffectTable:
    measure: str
    baseline_mean: float
    effects: list[ConditionEffect]
    excluded_participants: list[str]


def estimate_effects(rows: Iterable[RatingRow], measure: str) -> EffectTable:
    """Paired-contrast estimate of each condition versus the human baseline."""
    relevant = [r for r in rows if r.measure == measure]
    if not relevant:
        raise AnalysisError(f"no rows for measure {measure!r}")

    by_participant: dict[str, list[RatingRow]] = {}
    for r in relevant:
        by_participant.setdefault(r.participant_id, []).append(r)

    baselines: dict[str, float] = {}
    excluded: list[str] = []
    for pid, prows in by_participant.items():
        human = [r.value for r in prows if r.condition == BASELINE_CONDITION]
        if human:
            baselines[pid] = sum(human) / len(human)
        else:
            excluded.append(pid)
    if not baselines:
        raise AnalysisError("no participant has human-baseline rows")

    effects: list[ConditionEffect] = []
    for condition in CONDITIONS[1:]:
        diffs = []
        for pid, base in baselines.items():
            values = [r.value for r in by_participant[pid]
                      if r.condition == condition]
            if values:
                diffs.append(sum(values) / len(values) - base)
        if not diffs:
            continue
        n = len(diffs)
        estimate = sum(diffs) / n
        std_error = statistics.stdev(diffs) / math.sqrt(n) if n >= 2 else None
        effects.append(ConditionEffect(condition=condition, estimate=estimate,
                                       std_error=std_error, n_participants=n))
    baseline_mean = sum(baselines.values()) / len(baselines)
    return EffectTable(measure=measure, baseline_mean=baseline_mean,
                       effects=effects, excluded_participants=sorted(excluded))


def reconstruct_condition_mean(baseline: float, effect: float) -> float:
    return baseline + effect


# ---------------------------------------------------------------------------
# CSV ingestion and report formatting

def load_ratings_csv(path: str | Path) -> list[RatingRow]:
    """Read rows from a `participant,condition,measure,value` CSV.

    Unknown extra columns are allowed and ignored.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"participant", "condition", "measure", "value"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise AnalysisError(
                f"ratings CSV must have columns {sorted(required)}")
        for rec in reader:
            rows.append(RatingRow(participant_id=rec["participant"],
                                  condition=rec["condition"],
                                  measure=rec["measure"],
                                  value=float(rec["value"])))
    return rows


def analyzed_measures(rows: Sequence[RatingRow],
                      exclusions: Sequence[str] | None = None) -> list[str]:
    if exclusions is None:
        exclusions = default_exclusions()
    present = []
    for r in rows:
        if r.measure not in present:
            present.append(r.measure)
    return [m for m in present if m not in exclusions]


def format_effect_table(table: EffectTable) -> str:
    """Aligned text table: baseline row plus one contrast row per condition."""
    lines = [f"Measure: {table.measure}",
             f"{'Condition':<14}{'Estimate':>10}  {'(SE)':>8}  {'n':>3}"]
    lines.append(f"{'Baseline (H)':<14}{table.baseline_mean:>10.3f}")
    for eff in table.effects:
        se = f"({eff.std_error:.3f})" if eff.std_error is not None else "(n/a)"
        lines.append(f"{eff.condition:<14}{eff.estimate:>10.3f}  {se:>8}  "
                     f"{eff.n_participants:>3}")
    if table.excluded_participants:
        lines.append("Excluded (no baseline rows): "
                     + ", ".join(table.excluded_participants))
    return "\n".join(lines)
