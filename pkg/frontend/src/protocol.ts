/**
 * Wire protocol frames exchanged with the session server.
 *
 * One JSON object per frame in canonical form: keys sorted, no
 * whitespace, `v` carrying the protocol version and `seq` a
 * per-connection monotone counter.  Unknown payload fields are dropped
 * on decode for forward compatibility.
 */

export const PROTOCOL_VERSION = "duet/1";

export type MessageType =
  | "hello"
  | "config"
  | "turn_state"
  | "note_on"
  | "note_off"
  | "partner_melody"
  | "rating_submit"
  | "error"
  | "ack";

export const MESSAGE_FIELDS: Record<MessageType, readonly string[]> = {
  hello: ["client", "role"],
  config: ["config"],
  turn_state: ["index", "role", "ends_at_ms", "progress_fraction"],
  note_on: ["pitch", "velocity", "t_ms"],
  note_off: ["pitch", "velocity", "t_ms"],
  partner_melody: ["tokens", "tempo_bpm", "start_at_ms"],
  rating_submit: ["form"],
  error: ["code", "message"],
  ack: ["of"],
};

export interface WireMessage {
  type: MessageType;
  seq: number;
  payload: Record<string, unknown>;
}

export class ProtocolError extends Error {
  constructor(public code: string, message: string) {
    super(`${code}: ${message}`);
  }
}

/** JSON.stringify with object keys sorted at every depth. */
function canonicalJson(value: unknown): string {
  if (Array.isArray(value)) {
    return `[${value.map(canonicalJson).join(",")}]`;
  }
  if (value !== null && typeof value === "object") {
    const entries = Object.keys(value as Record<string, unknown>)
      .sort()
      .map((k) => `${JSON.stringify(k)}:` +
        canonicalJson((value as Record<string, unknown>)[k]));
    return `{${entries.join(",")}}`;
  }
  return JSON.stringify(value);
}

export function encodeMessage(msg: WireMessage): string {
  const known = MESSAGE_FIELDS[msg.type];
  if (!known) {
    throw new ProtocolError("bad-type", `unknown message type ${msg.type}`);
  }
  const frame: Record<string, unknown> = {
    v: PROTOCOL_VERSION,
    seq: msg.seq,
    type: msg.type,
  };
  for (const key of Object.keys(msg.payload)) {
    if (!known.includes(key)) {
      throw new ProtocolError("bad-field",
        `unknown field ${key} for ${msg.type}`);
    }
    frame[key] = msg.payload[key];
  }
  return canonicalJson(frame);
}

export function decodeMessage(frame: string): WireMessage {
  let obj: unknown;
  try {
    obj = JSON.parse(frame);
  } catch (exc) {
    throw new ProtocolError("bad-frame", String(exc));
  }
  if (obj === null || typeof obj !== "object" || Array.isArray(obj)) {
    throw new ProtocolError("bad-frame", "frame is not an object");
  }
  const record = obj as Record<string, unknown>;
  if (record.v !== PROTOCOL_VERSION) {
    throw new ProtocolError("bad-version", `expected ${PROTOCOL_VERSION}`);
  }
  const type = record.type as MessageType;
  const known = MESSAGE_FIELDS[type];
  if (!known) {
    throw new ProtocolError("bad-type", `unknown message type ${record.type}`);
  }
  if (typeof record.seq !== "number" || !Number.isInteger(record.seq)) {
    throw new ProtocolError("bad-frame", "missing integer seq");
  }
  const payload: Record<string, unknown> = {};
  for (const key of known) {
    if (key in record) payload[key] = record[key];
  }
  return { type, seq: record.seq, payload };
}

/** Monotone outgoing sequence numbers with incoming gap detection. */
export class SequenceCounter {
  private nextOut = 0;
  private lastIn: number | null = null;

  next(): number {
    return this.nextOut++;
  }

  checkIncoming(seq: number): boolean {
    const ok = this.lastIn === null || seq > this.lastIn;
    if (ok) this.lastIn = seq;
    return ok;
  }
}
