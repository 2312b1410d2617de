/**
 * Client-side view of the token vocabulary: enough to turn a
 * partner_melody frame into timed notes for playback and the roll.
 */

export const REST = 0;
export const HOLD = 1;
export const PITCH_OFFSET = 19; // NOTE_ON code 2 is piano A0 (pitch 21)

export interface TimedNote {
  pitch: number;
  startMs: number;
  endMs: number;
}

export function stepMs(tempoBpm: number): number {
  return 60000 / (4 * tempoBpm);
}

/** Expands REST/HOLD/NOTE_ON codes into absolute note times. */
export function tokensToNotes(
  tokens: readonly number[],
  tempoBpm: number,
  startAtMs: number,
): TimedNote[] {
  const step = stepMs(tempoBpm);
  const notes: TimedNote[] = [];
  let open: TimedNote | null = null;
  tokens.forEach((code, i) => {
    if (code === HOLD && open) {
      open.endMs += step;
      return;
    }
    if (open) {
      notes.push(open);
      open = null;
    }
    if (code !== REST && code !== HOLD) {
      const t = startAtMs + i * step;
      open = { pitch: code + PITCH_OFFSET, startMs: t, endMs: t + step };
    }
  });
  if (open) notes.push(open);
  return notes;
}
