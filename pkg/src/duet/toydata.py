"""Synthetic scale/arpeggio corpus for desk-scale training and demos."""

from __future__ import annotations

import numpy as np

from .melody import STEPS_PER_BAR, MelodyDataset, build_dataset
from .midi import GridSpan

_PATTERNS = {
    "major_scale": (0, 2, 4, 5, 7, 9, 11, 12),
    "minor_scale": (0, 2, 3, 5, 7, 8, 10, 12),
    "major_arp": (0, 4, 7, 12),
    "minor_arp": (0, 3, 7, 12),
}


def toy_melody(rng: np.random.Generator, bars: int = 2) -> list[GridSpan]:
    """One scale or arpeggio run filling `bars` bars of 16th steps."""
    steps = bars * STEPS_PER_BAR
    pattern = list(_PATTERNS[rng.choice(list(_PATTERNS))])
    if rng.random() < 0.5:
        pattern.reverse()
    root = int(rng.integers(40, 76))
    hop = int(rng.choice([2, 4]))
    dur = hop if rng.random() < 0.5 else max(1, hop - 1)
    spans = []
    for i, onset in enumerate(range(0, steps, hop)):
        pitch = root + pattern[i % len(pattern)] + 12 * (i // len(pattern) % 2)
        spans.append(GridSpan(pitch, onset, min(dur, steps - onset)))
    return spans


def toy_corpus(n: int = 500, seed: int = 0, bars: int = 2) -> MelodyDataset:
    """Dataset built from n generated melodies (duplicates removed)."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    melodies = [(toy_melody(rng, bars), bars * STEPS_PER_BAR) for _ in range(n)]
    return build_dataset(melodies, bars=bars)
