// A scripted stand-in for the live service, honoring its documented
// contract and timing: snapshots at a fixed rate of simulated time,
// spectral window emissions once per second, and eyes-state changes that
// reach the displayed alpha value with the pipeline's window latency
// (partially after one emission, settled by the second).

import type { SocketLike } from "../client.js";
import type { Command } from "../types.js";

const SNAPSHOT_DT = 0.25;
const EMISSION_DT = 1.0;

export class MockSocket implements SocketLike {
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  onmessage: ((event: { data: string }) => void) | null = null;
  sent: string[] = [];
  failNextSends = 0;

  constructor(private readonly onSend: (text: string) => void) {}

  send(data: string): void {
    if (this.failNextSends > 0) {
      this.failNextSends -= 1;
      throw new Error("socket not ready");
    }
    this.sent.push(data);
    this.onSend(data);
  }

  close(): void {
    this.onclose?.();
  }

  deliver(msg: unknown): void {
    this.onmessage?.({ data: JSON.stringify(msg) });
  }
}

export class MockService {
  readonly socket: MockSocket;
  now = 0;
  eyes: "open" | "closed" = "open";
  alphaGain = 2.55;
  override: number | null = null;
  private eyesChangedAt = -10;
  private prevAPsd = 0;
  private aPsd = 0;
  private duty = 0;
  private nextEmission = EMISSION_DT;
  private nextSnapshot = SNAPSHOT_DT;
  private runActive = false;

  constructor() {
    this.socket = new MockSocket((text) => this.handle(text));
  }

  open(): void {
    this.socket.onopen?.();
  }

  private handle(text: string): void {
    const cmd = JSON.parse(text) as Command;
    switch (cmd.type) {
      case "start":
        this.runActive = true;
        this.socket.deliver({ type: "ack", cmd: "start", run_id: 1 });
        return;
      case "set_eyes":
        this.eyes = cmd.eyes;
        this.eyesChangedAt = this.now;
        this.prevAPsd = this.aPsd;
        this.socket.deliver({ type: "ack", cmd: "set_eyes" });
        return;
      case "override_alpha":
        this.override = cmd.value;
        this.socket.deliver({ type: "ack", cmd: "override_alpha" });
        return;
      case "clear_override":
        this.override = null;
        this.socket.deliver({ type: "ack", cmd: "clear_override" });
        return;
      case "set_param":
        if (cmd.name === "beta_gain" && cmd.value < 0) {
          this.socket.deliver({ type: "rejected", cmd: "set_param",
                                reason: "need p_min < p_max" });
          return;
        }
        if (cmd.name === "alpha_gain") this.alphaGain = cmd.value;
        this.socket.deliver({ type: "ack", cmd: "set_param" });
        return;
      default:
        this.socket.deliver({ type: "ack", cmd: cmd.type });
    }
  }

  /** Advance simulated time, emitting snapshots (and emissions) in order. */
  advance(dt: number): void {
    const end = this.now + dt;
    while (true) {
      const next = Math.min(this.nextEmission, this.nextSnapshot);
      if (next > end + 1e-9) break;
      this.now = next;
      if (Math.abs(next - this.nextEmission) < 1e-9) {
        this.emitReading();
        this.nextEmission += EMISSION_DT;
      }
      if (Math.abs(next - this.nextSnapshot) < 1e-9) {
        this.socket.deliver(this.snapshot());
        this.nextSnapshot += SNAPSHOT_DT;
      }
    }
    this.now = end;
  }

  private emitReading(): void {
    // window latency: one emission sees a half-and-half window, the
    // second sees the new state alone
    const held = this.now - this.eyesChangedAt;
    const target = this.eyes === "closed" ? 90 : 0;
    if (held >= 2 - 1e-9) {
      this.aPsd = target;
    } else if (held >= 1 - 1e-9) {
      this.aPsd = (target + this.prevAPsd) / 2;
    }
    const effective = this.override ?? this.aPsd;
    this.duty = Math.min(255, Math.round(this.alphaGain * effective));
  }

  private snapshot(): Record<string, unknown> {
    return {
      type: "snapshot",
      run_active: this.runActive,
      run_id: this.runActive ? 1 : null,
      t_s: Number(this.now.toFixed(3)),
      eyes: this.eyes,
      a_psd: this.override ?? this.aPsd,
      gated: (this.override ?? this.aPsd) > 0,
      override_alpha: this.override,
      spectrum: { f_start_hz: 6.0, df_hz: 0.5, psd: new Array(29).fill(0.1) },
      character: { duty: this.duty, dance_freq_hz: this.duty / 255,
                   amplitude: this.duty / 255 },
      flower: { setpoint_kpa: 120 + 0.15 * (this.override ?? this.aPsd),
                p_filt_kpa: 120.0, valve_open: false, phase: "inflating",
                remaining_s: 1.0 },
      params: { alpha_gain: this.alphaGain, beta_gain: 0.15, gamma_gain: 0.02,
                p_ref: 37.0, threshold: 9.25, guard: true },
    };
  }
}
