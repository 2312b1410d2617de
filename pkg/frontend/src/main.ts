/**
 * Application entry point: connects to the server, renders the scrolling
 * roll and progress bars on a canvas, wires keyboard/MIDI input, and
 * shows the questionnaire when the session ends.
 */

import { DuetClient, SessionInfo, TurnState } from "./client.js";
import { tokensToNotes } from "./melody.js";
import { progressFraction } from "./timing.js";
import { LANE_COUNT, RollNote, rollLayout } from "./roll.js";
import {
  PERFORMANCE_ITEMS,
  RatingForm,
  SFSS_ITEM_COUNT,
  validateForm,
} from "./questionnaire.js";
import { Synth } from "./synth.js";

const ROLL_WINDOW_MS = 12000;
const KEY_ROW = "awsedftgyhujkolp;"; // two octaves from C4 on a qwerty row

interface AppState {
  info: SessionInfo | null;
  turn: TurnState | null;
  notes: RollNote[];
  openByPitch: Map<number, RollNote>;
  status: string;
}

const state: AppState = {
  info: null,
  turn: null,
  notes: [],
  openByPitch: new Map(),
  status: "connecting…",
};

const synth = new Synth();
const canvas = document.getElementById("roll") as HTMLCanvasElement;
const statusEl = document.getElementById("status") as HTMLElement;
const barMine = document.getElementById("bar-mine") as HTMLElement;
const barOther = document.getElementById("bar-other") as HTMLElement;

const socket = new WebSocket(`ws://${location.host}/ws`);
const client = new DuetClient(socket, {
  onConfig(info) {
    state.info = info;
    state.status = `joined as ${info.role}`;
  },
  onTurnState(turn) {
    state.turn = turn;
  },
  onPartnerMelody(melody) {
    for (const n of tokensToNotes(melody.tokens, melody.tempo_bpm,
                                  melody.start_at_ms)) {
      const delay = Math.max(0, n.startMs - performance.now());
      setTimeout(() => {
        synth.noteOn(n.pitch, 80);
        addNote(n.pitch, "partner");
        setTimeout(() => {
          synth.noteOff(n.pitch);
          closeNote(n.pitch);
        }, n.endMs - n.startMs);
      }, delay);
    }
  },
  onError(code, message) {
    state.status = `${code}: ${message}`;
  },
});
socket.addEventListener("open", () => client.hello("web"));
socket.addEventListener("close", () => {
  state.status = "disconnected";
  showQuestionnaire();
});

function addNote(pitch: number, source: "human" | "partner"): void {
  const note: RollNote = { pitch, startMs: performance.now(), source };
  state.notes.push(note);
  if (source === "human") state.openByPitch.set(pitch, note);
}

function closeNote(pitch: number): void {
  const open = state.openByPitch.get(pitch);
  if (open) {
    open.endMs = performance.now();
    state.openByPitch.delete(pitch);
  } else {
    // partner notes are closed by their scheduled timeout
    const candidates = state.notes.filter(
      (n) => n.pitch === pitch && n.endMs === undefined);
    if (candidates.length) candidates[0].endMs = performance.now();
  }
}

// -- input ------------------------------------------------------------------

const down = new Set<number>();

function press(pitch: number): void {
  if (down.has(pitch)) return;
  down.add(pitch);
  client.noteOn(pitch, 100);
  synth.noteOn(pitch, 100);
  addNote(pitch, "human");
}

function release(pitch: number): void {
  if (!down.delete(pitch)) return;
  client.noteOff(pitch);
  synth.noteOff(pitch);
  closeNote(pitch);
}

document.addEventListener("keydown", (e) => {
  const i = KEY_ROW.indexOf(e.key);
  if (i >= 0 && !e.repeat) press(60 + i);
});
document.addEventListener("keyup", (e) => {
  const i = KEY_ROW.indexOf(e.key);
  if (i >= 0) release(60 + i);
});

const nav = navigator as Navigator & {
  requestMIDIAccess?: () => Promise<{
    inputs: Map<string, {
      onmidimessage: ((e: { data: Uint8Array | null }) => void) | null;
    }>;
  }>;
};
nav.requestMIDIAccess?.().then((access) => {
  for (const input of access.inputs.values()) {
    input.onmidimessage = (e) => {
      if (!e.data || e.data.length < 3) return;
      const [statusByte, pitch, velocity] = [e.data[0], e.data[1], e.data[2]];
      const kind = statusByte & 0xf0;
      if (kind === 0x90 && velocity > 0) press(pitch);
      else if (kind === 0x80 || (kind === 0x90 && velocity === 0)) release(pitch);
    };
  }
}).catch(() => undefined);

// -- rendering --------------------------------------------------------------

function draw(): void {
  const ctx = canvas.getContext("2d")!;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const laneWidth = width / LANE_COUNT;
  const now = performance.now();
  for (const rect of rollLayout(state.notes, now, ROLL_WINDOW_MS)) {
    ctx.fillStyle = rect.colorClass === "note-partner" ? "#e07a3f" : "#3f7ae0";
    const h = Math.max(2, (rect.yBottom - rect.yTop) * height);
    ctx.fillRect(rect.lane * laneWidth, rect.yTop * height,
                 Math.max(2, laneWidth - 1), h);
  }
  // prune notes that scrolled away so the arrays stay small
  state.notes = state.notes.filter(
    (n) => n.endMs === undefined || now - n.endMs <= ROLL_WINDOW_MS);

  if (state.turn && state.info) {
    const startMs = state.turn.ends_at_ms - state.info.turn_seconds * 1000;
    const frac = progressFraction(now, startMs, state.info.turn_seconds);
    const mine = state.turn.role.startsWith("human");
    (mine ? barMine : barOther).style.width = `${100 * frac}%`;
    (mine ? barOther : barMine).style.width = "0%";
    state.status = mine
      ? `your turn — ${Math.ceil(frac * state.info.turn_seconds)} s`
      : `partner's turn (turn ${state.turn.index + 1})`;
  }
  statusEl.textContent = state.status;
  requestAnimationFrame(draw);
}
requestAnimationFrame(draw);

// -- questionnaire ----------------------------------------------------------

function showQuestionnaire(): void {
  const panel = document.getElementById("questionnaire") as HTMLElement;
  if (!panel || panel.dataset.built) return;
  panel.dataset.built = "1";
  panel.hidden = false;

  const scale = (name: string, max: number, labels?: string) => `
    <label class="item">${name.replace(/_/g, " ")}${labels ?? ""}
      <input type="range" name="${name}" min="${max === 6 ? 0 : 1}"
             max="${max}" step="1" value="${Math.ceil(max / 2)}">
    </label>`;

  panel.innerHTML = `
    <h2>How was the performance?</h2>
    ${PERFORMANCE_ITEMS.map((n) => scale(n, 7)).join("")}
    <h2>Closeness</h2>
    ${scale("ios", 6)}
    <h2>Flow</h2>
    ${Array.from({ length: SFSS_ITEM_COUNT },
                 (_, i) => scale(`sfss_${i}`, 5)).join("")}
    <button id="submit">Submit</button>
    <p id="form-errors" class="errors"></p>`;

  panel.querySelector("#submit")!.addEventListener("click", () => {
    const value = (name: string) =>
      Number((panel.querySelector(`[name="${name}"]`) as HTMLInputElement).value);
    const form: RatingForm = {
      musicality: value("musicality"),
      realism: value("realism"),
      ease_to_interact: value("ease_to_interact"),
      creativity_improvisation: value("creativity_improvisation"),
      enjoyable: value("enjoyable"),
      interesting: value("interesting"),
      ios: value("ios"),
      sfss_items: Array.from({ length: SFSS_ITEM_COUNT },
                             (_, i) => value(`sfss_${i}`)),
    };
    const violations = validateForm(form);
    const errors = panel.querySelector("#form-errors") as HTMLElement;
    if (violations.length) {
      errors.textContent = violations.join("; ");
      return;
    }
    errors.textContent = "";
    client.submitRatings(form);
    state.status = "ratings submitted — thank you";
  });
}

// the server keeps the socket open after the trial; surface the form once
// the final turn_state has been and gone
setInterval(() => {
  if (state.turn && state.info &&
      performance.now() > state.turn.ends_at_ms &&
      state.turn.index === 2 * state.info.cycles - 1) {
    showQuestionnaire();
  }
}, 500);
