import { describe, expect, it } from "vitest";

import {
  decodeMessage,
  encodeMessage,
  ProtocolError,
  SequenceCounter,
  WireMessage,
} from "../src/protocol.js";

describe("wire protocol", () => {
  it("round-trips typical frames", () => {
    const samples: WireMessage[] = [
      { type: "hello", seq: 0, payload: { client: "web", role: "viewer" } },
      { type: "note_on", seq: 1, payload: { pitch: 60, velocity: 100, t_ms: 12.5 } },
      { type: "partner_melody", seq: 2,
        payload: { tokens: [41, 1, 0], tempo_bpm: 120, start_at_ms: 8000 } },
      { type: "ack", seq: 3, payload: { of: 2 } },
    ];
    for (const msg of samples) {
      expect(decodeMessage(encodeMessage(msg))).toEqual(msg);
    }
  });

  it("encodes canonically: sorted keys, no whitespace", () => {
    const frame = encodeMessage({
      type: "note_on", seq: 7,
      payload: { velocity: 100, t_ms: 1.5, pitch: 60 },
    });
    expect(frame).toBe(
      '{"pitch":60,"seq":7,"t_ms":1.5,"type":"note_on","v":"duet/1","velocity":100}');
  });

  it("drops unknown payload fields on decode", () => {
    const msg = decodeMessage(
      '{"of":3,"seq":5,"type":"ack","v":"duet/1","x_future":true}');
    expect(msg).toEqual({ type: "ack", seq: 5, payload: { of: 3 } });
  });

  it("rejects bad frames, versions and types", () => {
    expect(() => decodeMessage("not json")).toThrow(ProtocolError);
    expect(() => decodeMessage('{"v":"duet/2","seq":0,"type":"ack"}'))
      .toThrow(/bad-version/);
    expect(() => decodeMessage('{"v":"duet/1","seq":0,"type":"bogus"}'))
      .toThrow(/bad-type/);
    expect(() => decodeMessage('{"v":"duet/1","type":"ack"}'))
      .toThrow(/bad-frame/);
    expect(() => encodeMessage({
      type: "ack", seq: 0, payload: { junk: 1 },
    })).toThrow(/bad-field/);
  });

  it("re-encoding a decoded frame is byte-identical", () => {
    for (let i = 0; i < 200; i += 1) {
      const msg: WireMessage = {
        type: "turn_state",
        seq: i,
        payload: {
          index: i % 14,
          role: i % 2 ? "partner" : "human-A",
          ends_at_ms: i * 8000,
          progress_fraction: Math.round(1000 * Math.random()) / 1000,
        },
      };
      const frame = encodeMessage(msg);
      expect(encodeMessage(decodeMessage(frame))).toBe(frame);
    }
  });
});

describe("SequenceCounter", () => {
  it("counts out from zero and detects stale incoming numbers", () => {
    const counter = new SequenceCounter();
    expect([counter.next(), counter.next(), counter.next()]).toEqual([0, 1, 2]);
    expect(counter.checkIncoming(0)).toBe(true);
    expect(counter.checkIncoming(5)).toBe(true);
    expect(counter.checkIncoming(5)).toBe(false);
    expect(counter.checkIncoming(3)).toBe(false);
    expect(counter.checkIncoming(6)).toBe(true);
  });
});
