/**
 * Layout for the upward-scrolling piano roll.
 *
 * Notes are colored boxes that enter at the bottom of the viewport when
 * played and drift upward as they age; anything older than the visible
 * window is culled.  The layout is pure geometry — rendering happens
 * elsewhere.
 */

export const LANE_COUNT = 88;
export const LOWEST_PITCH = 21; // piano A0

export type NoteSource = "human" | "partner";

export interface RollNote {
  pitch: number;
  startMs: number;
  /** undefined while the key is still held */
  endMs?: number;
  source: NoteSource;
}

export interface RollRect {
  lane: number;
  /** normalized viewport coordinates: 0 = top edge, 1 = bottom edge */
  yTop: number;
  yBottom: number;
  colorClass: string;
}

function laneFor(pitch: number): number {
  const lane = pitch - LOWEST_PITCH;
  return Math.min(LANE_COUNT - 1, Math.max(0, lane));
}

/**
 * Maps notes into normalized viewport rectangles.  A timestamp t sits at
 * y = 1 − (now − t)/window, so "just played" is the bottom edge and age
 * pushes a box upward until it leaves at y = 0.
 */
export function rollLayout(
  notes: readonly RollNote[],
  nowMs: number,
  windowMs: number,
): RollRect[] {
  if (windowMs <= 0) {
    throw new RangeError("windowMs must be positive");
  }
  const rects: RollRect[] = [];
  for (const note of notes) {
    const endMs = note.endMs ?? nowMs;
    if (nowMs - endMs > windowMs) continue; // fully aged out
    if (note.startMs > nowMs) continue; // not played yet
    rects.push({
      lane: laneFor(note.pitch),
      yTop: Math.max(0, 1 - (nowMs - note.startMs) / windowMs),
      yBottom: Math.min(1, 1 - (nowMs - endMs) / windowMs),
      colorClass: note.source === "partner" ? "note-partner" : "note-human",
    });
  }
  return rects;
}
