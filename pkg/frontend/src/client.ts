/**
 * Websocket client for the session server.
 *
 * Owns the sequence counter, decodes incoming frames, and fans them out
 * to typed handlers.  Note events are stamped client-side with monotone
 * timestamps and sent in input order.
 */

import {
  decodeMessage,
  encodeMessage,
  SequenceCounter,
  WireMessage,
} from "./protocol.js";
import { RatingForm, questionnaireSubmit } from "./questionnaire.js";

export interface SessionInfo {
  role: string;
  turn_seconds: number;
  cycles: number;
  tempo_bpm: number;
  partner: string;
  bars: number | null;
}

export interface TurnState {
  index: number;
  role: string;
  ends_at_ms: number;
  progress_fraction: number;
}

export interface PartnerMelody {
  tokens: number[];
  tempo_bpm: number;
  start_at_ms: number;
}

export interface ClientHandlers {
  onConfig?: (config: SessionInfo) => void;
  onTurnState?: (state: TurnState) => void;
  onPartnerMelody?: (melody: PartnerMelody) => void;
  onError?: (code: string, message: string) => void;
  onAck?: (of: number) => void;
}

export class DuetClient {
  private seq = new SequenceCounter();
  private lastSentMs = -Infinity;

  constructor(
    private socket: WebSocket,
    private handlers: ClientHandlers = {},
    private now: () => number = () => performance.now(),
  ) {
    socket.addEventListener("message", (event) =>
      this.receive(String(event.data)));
  }

  hello(client: string, role?: string): void {
    const payload: Record<string, unknown> = { client };
    if (role) payload.role = role;
    this.send({ type: "hello", seq: this.seq.next(), payload });
  }

  /** Timestamps are forced monotone so reordered input never goes stale. */
  noteOn(pitch: number, velocity: number): void {
    const t = Math.max(this.now(), this.lastSentMs + 0.001);
    this.lastSentMs = t;
    this.send({
      type: "note_on",
      seq: this.seq.next(),
      payload: { pitch, velocity, t_ms: t },
    });
  }

  noteOff(pitch: number): void {
    const t = Math.max(this.now(), this.lastSentMs + 0.001);
    this.lastSentMs = t;
    this.send({
      type: "note_off",
      seq: this.seq.next(),
      payload: { pitch, velocity: 0, t_ms: t },
    });
  }

  submitRatings(form: RatingForm): number {
    const msg = questionnaireSubmit(form, this.seq.next());
    this.send(msg);
    return msg.seq;
  }

  private send(msg: WireMessage): void {
    this.socket.send(encodeMessage(msg));
  }

  private receive(frame: string): void {
    let msg: WireMessage;
    try {
      msg = decodeMessage(frame);
    } catch {
      return; // a malformed broadcast is not worth tearing the session down
    }
    if (!this.seq.checkIncoming(msg.seq)) return;
    const h = this.handlers;
    switch (msg.type) {
      case "config":
        h.onConfig?.(msg.payload.config as SessionInfo);
        break;
      case "turn_state":
        h.onTurnState?.(msg.payload as unknown as TurnState);
        break;
      case "partner_melody":
        h.onPartnerMelody?.(msg.payload as unknown as PartnerMelody);
        break;
      case "error":
        h.onError?.(String(msg.payload.code), String(msg.payload.message));
        break;
      case "ack":
        h.onAck?.(Number(msg.payload.of));
        break;
    }
  }
}
