"""
Parsing and re-serializing a Standard MIDI File
===============================================

Builds a one-track file in memory, serializes it, parses it back, and
shows that the event list survives the trip unchanged.  Then the same
notes are quantized onto the 16th-note grid and reduced to a monophonic
line.
"""

from duet.midi import (MidiEvent, MidiFile, extract_note_spans, parse_midi,
                       quantize_to_grid, reduce_monophonic, serialize_midi)

PPQ = 480

# a C-major arpeggio with one deliberately overlapping extra note
events = []
tick = 0
for pitch in (60, 64, 67, 72):
    events.append(MidiEvent(tick, "note_on", 0, pitch, 100))
    events.append(MidiEvent(tick + PPQ, "note_off", 0, pitch, 0))
    tick += PPQ
events.append(MidiEvent(PPQ // 2, "note_on", 0, 48, 90))
events.append(MidiEvent(2 * PPQ, "note_off", 0, 48, 0))
events.sort(key=lambda e: e.tick)
events.append(MidiEvent(tick, "end_of_track"))

original = MidiFile(format=0, ticks_per_quarter=PPQ, tracks=[events])
data = serialize_midi(original)
print(f"serialized to {len(data)} bytes")

reparsed = parse_midi(data)
print(f"round-trip preserved all events: {reparsed.tracks == original.tracks}")

spans, dangling = extract_note_spans(reparsed)
print(f"\n{len(spans)} note spans ({dangling} dangling):")
for s in spans:
    print(f"  pitch {s.pitch:3d}  onset {s.onset_tick:5d}  "
          f"duration {s.duration_ticks:5d} ticks")

grid = quantize_to_grid(spans, PPQ)
mono = reduce_monophonic(grid)
print(f"\nafter grid quantization and monophonic reduction "
      f"({len(grid)} -> {len(mono)} spans):")
for g in mono:
    print(f"  pitch {g.pitch:3d}  step {g.onset_step:3d}  "
          f"length {g.duration_steps} steps")
