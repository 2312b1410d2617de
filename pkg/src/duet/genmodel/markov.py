"""Order-k Markov chain over melody tokens: a model-free fallback partner."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..melody import HOLD, REST, VOCAB_SIZE, MelodyDataset, MelodySequence


@dataclass
class MarkovStats:
    order: int
    counts: dict[tuple[int, ...], np.ndarray] = field(default_factory=dict)

    def context_counts(self, context: tuple[int, ...]) -> np.ndarray:
        found = self.counts.get(context)
        return found if found is not None else np.zeros(VOCAB_SIZE)


def build_markov_stats(dataset: MelodyDataset, order: int) -> MarkovStats:
    if order < 1:
        raise ValueError("order must be >= 1")
    stats = MarkovStats(order=order)
    for seq in dataset.sequences:
        codes = seq.codes
        for i in range(order, len(codes)):
            context = codes[i - order:i]
            row = stats.counts.get(context)
            if row is None:
                row = np.zeros(VOCAB_SIZE)
                stats.counts[context] = row
            row[codes[i]] += 1
    return stats


def transition_probabilities(
    stats: MarkovStats, context: tuple[int, ...], prev_code: int
) -> np.ndarray:
    """Next-token distribution for a context, with invalid HOLDs masked.

    Observed contexts use their raw counts; an unseen context falls back
    to add-one smoothing (uniform over the valid tokens), which keeps the
    support non-empty for any input.
    """
    counts = stats.context_counts(context).copy()
    if prev_code == REST:
        counts[HOLD] = 0.0
    total = counts.sum()
    if total == 0.0:
        counts += 1.0
        if prev_code == REST:
            counts[HOLD] = 0.0
        total = counts.sum()
    return counts / total


def markov_respond(
    input_seq: MelodySequence,
    order: int,
    stats: MarkovStats,
    rng: np.random.Generator,
) -> MelodySequence:
    """Continue from the input's final tokens, one draw per grid step."""
    if stats.order != order:
        raise ValueError("order does not match the provided statistics")
    context = tuple(input_seq.codes[-order:])
    prev = context[-1]
    codes: list[int] = []
    for step in range(len(input_seq.codes)):
        # a leading HOLD would have nothing in the response to extend
        mask_prev = REST if step == 0 else prev
        p = transition_probabilities(stats, context, mask_prev)
        code = int(rng.choice(VOCAB_SIZE, p=p))
        codes.append(code)
        context = context[1:] + (code,) if order > 1 else (code,)
        prev = code
    return MelodySequence(tuple(codes))
