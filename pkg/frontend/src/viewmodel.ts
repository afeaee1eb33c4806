// Pure display computations, kept DOM-free so they are unit-testable.

import type { Snapshot } from "./types.js";

export const PRESSURE_MIN = 120;
export const PRESSURE_MAX = 135;

const clamp01 = (x: number) => Math.min(1, Math.max(0, x));

/** Animated petal opening: 0 at the 120 kPa baseline, 1 fully pressurized. */
export function petalOpenFraction(pressureKpa: number): number {
  return clamp01((pressureKpa - PRESSURE_MIN) / (PRESSURE_MAX - PRESSURE_MIN));
}

export function aPsdFraction(aPsd: number | null): number {
  return aPsd === null ? 0 : clamp01(aPsd / 100);
}

export function dutyFraction(duty: number): number {
  return clamp01(duty / 255);
}

/** Gauge position of a pressure value over a 115..140 kPa display range. */
export function pressureGauge(pressureKpa: number): number {
  return clamp01((pressureKpa - 115) / (140 - 115));
}

export interface SpectrumBar {
  freqHz: number;
  height: number; // 0..1, log-scaled
  inAlphaBand: boolean;
}

/** Bars for the 6-20 Hz strip; the 8-13 Hz band is marked for shading. */
export function spectrumBars(snap: Snapshot): SpectrumBar[] {
  if (!snap.spectrum) return [];
  const { f_start_hz, df_hz, psd } = snap.spectrum;
  const max = Math.max(...psd, 1e-12);
  return psd.map((value, i) => {
    const freqHz = f_start_hz + i * df_hz;
    // log scale over 4 decades keeps the noise floor visible
    const db = 10 * Math.log10(Math.max(value, 1e-12) / max);
    return {
      freqHz,
      height: clamp01(1 + db / 40),
      inAlphaBand: freqHz >= 8 && freqHz <= 13,
    };
  });
}

export interface Readouts {
  aPsd: string;
  gated: string;
  eyes: string;
  duty: string;
  danceFreq: string;
  pressure: string;
  setpoint: string;
  phase: string;
  runState: string;
}

export function readouts(snap: Snapshot | null): Readouts {
  if (!snap) {
    return { aPsd: "--", gated: "--", eyes: "--", duty: "--", danceFreq: "--",
             pressure: "--", setpoint: "--", phase: "--", runState: "no data" };
  }
  const fl = snap.flower;
  const ch = snap.character;
  return {
    aPsd: snap.a_psd === null ? "--" : snap.a_psd.toFixed(1),
    gated: snap.gated ? "alpha" : "-",
    eyes: snap.eyes ?? "--",
    duty: ch ? String(ch.duty) : "--",
    danceFreq: ch ? `${ch.dance_freq_hz.toFixed(2)} Hz` : "--",
    pressure: fl && fl.p_filt_kpa !== null ? `${fl.p_filt_kpa.toFixed(1)} kPa` : "--",
    setpoint: fl && fl.setpoint_kpa !== null ? `${fl.setpoint_kpa.toFixed(1)} kPa` : "--",
    phase: fl ? fl.phase : "--",
    runState: snap.run_active ? `run #${snap.run_id} @ ${snap.t_s.toFixed(1)} s` : "idle",
  };
}
