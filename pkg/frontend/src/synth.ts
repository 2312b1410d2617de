/**
 * Minimal local piano voice.  Both the human's own keys and the
 * partner's melody render through this one path so the two sound
 * identical.
 */

export class Synth {
  private ctx: AudioContext | null = null;
  private active = new Map<number, { osc: OscillatorNode; gain: GainNode }>();

  private ensure(): AudioContext {
    if (!this.ctx) this.ctx = new AudioContext();
    return this.ctx;
  }

  noteOn(pitch: number, velocity: number): void {
    const ctx = this.ensure();
    this.noteOff(pitch);
    const osc = ctx.createOscillator();
    const gain = ctx.createGain();
    osc.type = "triangle";
    osc.frequency.value = 440 * Math.pow(2, (pitch - 69) / 12);
    const level = 0.25 * (velocity / 127);
    gain.gain.setValueAtTime(level, ctx.currentTime);
    gain.gain.exponentialRampToValueAtTime(level * 0.3, ctx.currentTime + 1.5);
    osc.connect(gain).connect(ctx.destination);
    osc.start();
    this.active.set(pitch, { osc, gain });
  }

  noteOff(pitch: number): void {
    const voice = this.active.get(pitch);
    if (!voice || !this.ctx) return;
    this.active.delete(pitch);
    const t = this.ctx.currentTime;
    voice.gain.gain.cancelScheduledValues(t);
    voice.gain.gain.setTargetAtTime(0.0001, t, 0.05);
    voice.osc.stop(t + 0.3);
  }
}
