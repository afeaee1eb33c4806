// DOM rendering. Snapshots arrive faster than frames are worth painting;
// the renderer keeps only the latest state and paints once per rAF.

import type { UiState } from "./state.js";
import { TraceBuffer } from "./traces.js";
import { aPsdFraction, dutyFraction, petalOpenFraction, pressureGauge,
         readouts, spectrumBars, PRESSURE_MIN, PRESSURE_MAX } from "./viewmodel.js";

const byId = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

export class Renderer {
  private dirty = false;

  constructor(private readonly state: UiState) {}

  markDirty(): void {
    if (this.dirty) return;
    this.dirty = true;
    requestAnimationFrame(() => {
      this.dirty = false;
      this.paint();
    });
  }

  paint(): void {
    const state = this.state;
    const banner = byId("connection-banner");
    banner.textContent = state.connection === "open"
      ? "connected" : state.connection === "connecting"
      ? "connecting..." : "disconnected - retrying";
    banner.className = `banner ${state.connection}`;
    document.querySelectorAll<HTMLButtonElement | HTMLInputElement>(".control")
      .forEach((el) => { el.disabled = !state.controlsEnabled; });

    const pendingEl = byId("pending");
    pendingEl.textContent = state.pendingCommands > 0
      ? `${state.pendingCommands} command(s) in flight` : "";
    const rejectionEl = byId("rejection");
    rejectionEl.textContent = state.lastRejection
      ? `rejected: ${state.lastRejection.reason}`
      : state.lastError ?? "";

    const snap = state.latest;
    const text = readouts(snap);
    byId("run-state").textContent = text.runState;
    byId("a-psd-value").textContent = text.aPsd;
    byId("gated-value").textContent = text.gated;
    byId("eyes-value").textContent = text.eyes;
    byId("duty-value").textContent = text.duty;
    byId("dance-freq-value").textContent = text.danceFreq;
    byId("pressure-value").textContent = text.pressure;
    byId("setpoint-value").textContent = text.setpoint;
    byId("phase-value").textContent = text.phase;

    if (snap) {
      byId("a-psd-bar").style.width = `${100 * aPsdFraction(snap.a_psd)}%`;
      if (snap.character) {
        byId("duty-bar").style.width = `${100 * dutyFraction(snap.character.duty)}%`;
      }
      if (snap.flower && snap.flower.p_filt_kpa !== null) {
        byId("pressure-needle").style.left =
          `${100 * pressureGauge(snap.flower.p_filt_kpa)}%`;
        this.paintPetals(snap.flower.p_filt_kpa, snap.flower.phase);
      }
      if (snap.flower && snap.flower.setpoint_kpa !== null) {
        byId("setpoint-marker").style.left =
          `${100 * pressureGauge(snap.flower.setpoint_kpa)}%`;
      }
      this.paintSpectrum();
      const params = snap.params;
      byId("active-params").textContent =
        `alpha=${params.alpha_gain} beta=${params.beta_gain.toFixed(4)} ` +
        `gamma=${params.gamma_gain.toFixed(4)} thr=${params.threshold ?? "-"} ` +
        `p_ref=${params.p_ref ?? "-"} guard=${params.guard ? "on" : "off"}`;
    }
    this.paintTrace("trace-a-psd", state.aPsdTrace, 0, 100);
    this.paintTrace("trace-duty", state.dutyTrace, 0, 255);
    this.paintTrace("trace-pressure", state.pressureTrace, 112, 138,
                    [PRESSURE_MIN, PRESSURE_MAX]);
  }

  private paintSpectrum(): void {
    const snap = this.state.latest;
    const canvas = byId<HTMLCanvasElement>("spectrum");
    const ctx = canvas.getContext("2d");
    if (!ctx || !snap) return;
    const { width, height } = canvas;
    ctx.clearRect(0, 0, width, height);
    const bars = spectrumBars(snap);
    if (!bars.length) return;
    const barW = width / bars.length;
    bars.forEach((bar, i) => {
      if (bar.inAlphaBand) {
        ctx.fillStyle = "rgba(120, 170, 255, 0.25)";
        ctx.fillRect(i * barW, 0, barW, height);
      }
      ctx.fillStyle = bar.inAlphaBand ? "#78aaff" : "#9a9a9a";
      const h = bar.height * (height - 12);
      ctx.fillRect(i * barW + 1, height - h, barW - 2, h);
    });
    ctx.fillStyle = "#ccc";
    ctx.font = "10px sans-serif";
    ctx.fillText("6 Hz", 2, 10);
    ctx.fillText("20 Hz", width - 34, 10);
  }

  private paintPetals(pressure: number, phase: string): void {
    const canvas = byId<HTMLCanvasElement>("flower-widget");
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = canvas;
    ctx.clearRect(0, 0, width, height);
    const cx = width / 2;
    const cy = height / 2;
    const open = petalOpenFraction(pressure);
    const petals = 6;
    for (let i = 0; i < petals; i++) {
      const angle = (i / petals) * 2 * Math.PI;
      const reach = 12 + open * (Math.min(cx, cy) - 16);
      const px = cx + Math.cos(angle) * reach;
      const py = cy + Math.sin(angle) * reach;
      ctx.beginPath();
      ctx.ellipse(px, py, 10 + 6 * open, 7 + 3 * open, angle, 0, 2 * Math.PI);
      ctx.fillStyle = phase === "inflating" ? "#ff8fb2" : "#e06c9a";
      ctx.fill();
    }
    ctx.beginPath();
    ctx.arc(cx, cy, 9, 0, 2 * Math.PI);
    ctx.fillStyle = "#ffd23f";
    ctx.fill();
  }

  private paintTrace(id: string, trace: TraceBuffer, lo: number, hi: number,
                     band?: [number, number]): void {
    const canvas = byId<HTMLCanvasElement>(id);
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = canvas;
    ctx.clearRect(0, 0, width, height);
    const points = trace.points();
    const yOf = (v: number) => height - ((v - lo) / (hi - lo)) * height;
    if (band) {
      ctx.fillStyle = "rgba(120, 255, 160, 0.12)";
      ctx.fillRect(0, yOf(band[1]), width, yOf(band[0]) - yOf(band[1]));
    }
    if (points.length < 2) return;
    const t1 = points[points.length - 1].t;
    const t0 = t1 - trace.horizonS;
    ctx.beginPath();
    points.forEach((p, i) => {
      const x = ((p.t - t0) / trace.horizonS) * width;
      const y = yOf(p.v);
      if (i === 0) ctx.moveTo(x, y); else ctx.lineTo(x, y);
    });
    ctx.strokeStyle = "#6fd3ff";
    ctx.lineWidth = 1.5;
    ctx.stroke();
  }
}
