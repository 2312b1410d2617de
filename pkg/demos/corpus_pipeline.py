"""
From note spans to a training corpus
====================================

Tokenizes a small melody into the REST/HOLD/NOTE_ON vocabulary, then
windows a longer melody into overlapping 2-bar training segments with
rest-heavy windows excluded and duplicates removed.
"""

from duet.melody import (REST, build_dataset, candidate_window_count,
                         detokenize, save_dataset, tokenize)
from duet.midi import GridSpan

# -- a single 2-bar phrase ---------------------------------------------------
phrase = [GridSpan(60, 0, 4), GridSpan(62, 4, 2), GridSpan(64, 6, 2),
          GridSpan(67, 8, 8), GridSpan(64, 16, 4), GridSpan(60, 20, 12)]
seq = tokenize(phrase, bars=2)
print("token codes (0=rest, 1=hold, 2..89=note-on at pitch-19):")
print(" ", seq.codes)
print("detokenize inverts tokenize:", detokenize(seq) == phrase)

# -- windowing a longer melody ----------------------------------------------
# eight bars, one whole note per bar, with bars 5-6 left silent
spans = [GridSpan(60 + i, i * 16, 16) for i in (0, 1, 2, 3, 6, 7)]
length = 8 * 16

n_candidates = candidate_window_count(length, 2)
dataset = build_dataset([(spans, length)], bars=2, rest_threshold_steps=16)
print(f"\n8-bar melody: {n_candidates} candidate 2-bar windows (hop = 1 bar)")
print(f"kept after rest exclusion and deduplication: {len(dataset.sequences)}")
for s in dataset.sequences:
    rests = sum(1 for c in s.codes if c == REST)
    print(f"  first code {s.codes[0]:2d}, {rests:2d} rest steps")

save_dataset(dataset, "/tmp/demo_corpus.tokens")
print("\nwritten to /tmp/demo_corpus.tokens (text format, one line header)")
with open("/tmp/demo_corpus.tokens") as fh:
    print(" ", fh.readline().strip())
