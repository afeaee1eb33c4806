import { describe, expect, it } from "vitest";

import type { Snapshot } from "./types.js";
import { aPsdFraction, dutyFraction, petalOpenFraction, pressureGauge,
         readouts, spectrumBars } from "./viewmodel.js";

function snapshotAt(aPsd: number, duty: number, setpoint: number): Snapshot {
  return {
    type: "snapshot", run_active: true, run_id: 1, t_s: 5.0, eyes: "closed",
    a_psd: aPsd, gated: aPsd > 0, override_alpha: null,
    spectrum: { f_start_hz: 6.0, df_hz: 0.5, psd: new Array(29).fill(1) },
    character: { duty, dance_freq_hz: 0.5, amplitude: duty / 255 },
    flower: { setpoint_kpa: setpoint, p_filt_kpa: setpoint, valve_open: false,
              phase: "inflating", remaining_s: 2.0 },
    params: { alpha_gain: 2.55, beta_gain: 0.15, gamma_gain: 0.02,
              p_ref: 37, threshold: 9.25, guard: true },
  };
}

describe("petalOpenFraction", () => {
  it("is closed at the 120 kPa baseline and open at 135", () => {
    expect(petalOpenFraction(120)).toBe(0);
    expect(petalOpenFraction(135)).toBe(1);
    expect(petalOpenFraction(127.5)).toBeCloseTo(0.5);
  });

  it("clamps outside the rated band", () => {
    expect(petalOpenFraction(101.3)).toBe(0);
    expect(petalOpenFraction(150)).toBe(1);
  });
});

describe("gauges", () => {
  it("full-scale alpha drives full gauges and 135 kPa marker", () => {
    // displayed values come straight from the snapshot, never recomputed
    const snap = snapshotAt(100, 255, 135);
    expect(aPsdFraction(snap.a_psd)).toBe(1);
    expect(dutyFraction(snap.character!.duty)).toBe(1);
    expect(pressureGauge(snap.flower!.setpoint_kpa!)).toBeCloseTo(0.8);
  });

  it("zero alpha sits at the lower endpoints", () => {
    const snap = snapshotAt(0, 0, 120);
    expect(aPsdFraction(snap.a_psd)).toBe(0);
    expect(dutyFraction(snap.character!.duty)).toBe(0);
    expect(pressureGauge(snap.flower!.setpoint_kpa!)).toBeCloseTo(0.2);
  });

  it("handles missing readings", () => {
    expect(aPsdFraction(null)).toBe(0);
  });
});

describe("spectrumBars", () => {
  it("shades exactly the 8-13 Hz band", () => {
    const bars = spectrumBars(snapshotAt(50, 128, 127.5));
    expect(bars).toHaveLength(29);
    const shaded = bars.filter((b) => b.inAlphaBand).map((b) => b.freqHz);
    expect(shaded[0]).toBe(8);
    expect(shaded[shaded.length - 1]).toBe(13);
    expect(shaded).toHaveLength(11);
  });

  it("returns no bars without a spectrum", () => {
    const snap = { ...snapshotAt(0, 0, 120), spectrum: null };
    expect(spectrumBars(snap)).toEqual([]);
  });
});

describe("readouts", () => {
  it("formats a live snapshot", () => {
    const text = readouts(snapshotAt(91.4, 233, 133.7));
    expect(text.aPsd).toBe("91.4");
    expect(text.duty).toBe("233");
    expect(text.phase).toBe("inflating");
    expect(text.runState).toContain("run #1");
  });

  it("shows placeholders with no data", () => {
    expect(readouts(null).aPsd).toBe("--");
  });
});
