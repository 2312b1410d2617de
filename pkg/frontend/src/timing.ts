/** Turn-countdown arithmetic for the per-player progress bars. */

/**
 * Remaining fraction of the current turn: 1 at the turn start, 0 at its
 * end, clamped so clock jitter around the boundaries never escapes [0, 1].
 */
export function progressFraction(
  nowMs: number,
  turnStartMs: number,
  turnSeconds: number,
): number {
  const fraction = 1 - (nowMs - turnStartMs) / (1000 * turnSeconds);
  return Math.min(1, Math.max(0, fraction));
}
