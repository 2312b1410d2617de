/**
 * Post-trial questionnaire: six 7-point performance items, the two-circle
 * 0-6 closeness (IOS) scale, and nine 5-point flow items.
 *
 * Validation mirrors the server's rules exactly, violation strings
 * included, so nothing the client accepts can bounce server-side.
 */

import { WireMessage } from "./protocol.js";

export const PERFORMANCE_ITEMS = [
  "musicality",
  "realism",
  "ease_to_interact",
  "creativity_improvisation",
  "enjoyable",
  "interesting",
] as const;

export type PerformanceItem = (typeof PERFORMANCE_ITEMS)[number];

export const SFSS_ITEM_COUNT = 9;

export interface RatingForm {
  musicality: number;
  realism: number;
  ease_to_interact: number;
  creativity_improvisation: number;
  enjoyable: number;
  interesting: number;
  ios: number;
  sfss_items: number[];
}

/** Empty array means valid; strings match the server's validate_form. */
export function validateForm(form: RatingForm): string[] {
  const violations: string[] = [];
  for (const name of PERFORMANCE_ITEMS) {
    const v = form[name];
    if (v < 1) violations.push(`${name} < 1`);
    else if (v > 7) violations.push(`${name} > 7`);
  }
  if (form.ios < 0) violations.push("ios < 0");
  else if (form.ios > 6) violations.push("ios > 6");
  if (form.sfss_items.length !== SFSS_ITEM_COUNT) {
    violations.push(`sfss_items count ${form.sfss_items.length} != 9`);
  } else {
    form.sfss_items.forEach((v, i) => {
      if (v < 1) violations.push(`sfss_items[${i}] < 1`);
      else if (v > 5) violations.push(`sfss_items[${i}] > 5`);
    });
  }
  return violations;
}

export class FormValidationError extends Error {
  constructor(public violations: string[]) {
    super(violations.join("; "));
  }
}

/** Builds the rating_submit frame, refusing forms the server would reject. */
export function questionnaireSubmit(form: RatingForm, seq: number): WireMessage {
  const violations = validateForm(form);
  if (violations.length > 0) {
    throw new FormValidationError(violations);
  }
  return { type: "rating_submit", seq, payload: { form } };
}
