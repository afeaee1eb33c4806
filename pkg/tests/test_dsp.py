import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal as sig

from alphasoft.dsp import (HOP, N_BINS, WINDOW_LEN, AlphaPipeline,
                           BandpassFilter, Calibration, RollingWindower,
                           SpectrumFrame, WindowFrame, calibrate, compute_psd,
                           detect_alpha, normalize)
from alphasoft.errors import (CalibrationError, ContractViolation,
                              SignalIntegrityError)
from alphasoft.sources import AlphaWaveSynth, Eyes, ScenarioSegment, SynthParams

from conftest import measure_gain, naive_dft_psd, sinusoid_samples


class TestBandpassFilter:
    def test_dc_step_rejected_after_settling(self):
        filt = BandpassFilter()
        out = 0.0
        for _ in range(2500):  # 10 s of constant 1.0
            out = filt.step(1.0)
        assert abs(out) < 0.05

    def test_passband_gain_at_10hz(self):
        gain = measure_gain(10.0)
        assert 0.9 <= gain <= 1.0 + 1e-6

    def test_stopband_at_50hz(self):
        assert measure_gain(50.0) <= 0.1

    def test_stopband_at_0p2hz(self):
        ratio = measure_gain(0.2) / measure_gain(10.0)
        assert 20.0 * math.log10(1.0 / ratio) >= 20.0

    def test_streaming_matches_designed_response(self):
        # independent oracle: evaluate the designed sos transfer function
        filt = BandpassFilter()
        for freq in (5.0, 10.0, 25.0, 50.0):
            w, h = sig.sosfreqz(filt.sos, worN=[freq], fs=250.0)
            assert measure_gain(freq) == pytest.approx(abs(h[0]), abs=2e-3)

    def test_causality(self):
        filt = BandpassFilter()
        out = [filt.step(v) for v in [0.0] * 100 + [1.0] + [0.0] * 50]
        assert all(v == 0.0 for v in out[:100])
        assert any(v != 0.0 for v in out[100:])

    def test_non_finite_sample_rejected(self):
        filt = BandpassFilter()
        for bad in (float("nan"), float("inf"), float("-inf")):
            with pytest.raises(SignalIntegrityError):
                filt.step(bad)

    def test_batch_equals_streaming(self):
        rng = np.random.default_rng(5)
        values = rng.normal(size=1000)
        a = BandpassFilter().process(values)
        filt = BandpassFilter()
        b = np.array([filt.step(float(v)) for v in values])
        assert np.array_equal(a, b)

    def test_invalid_design_rejected(self):
        with pytest.raises(ContractViolation):
            BandpassFilter(low_cut=40.0, high_cut=1.0)
        with pytest.raises(ContractViolation):
            BandpassFilter(high_cut=200.0)
        with pytest.raises(ContractViolation):
            BandpassFilter(order=3)


class TestRollingWindower:
    def push_n(self, n):
        w = RollingWindower()
        frames = []
        for s in sinusoid_samples(10.0, 1.0, n):
            frame = w.push(s)
            if frame is not None:
                frames.append(frame)
        return frames

    def test_no_frame_below_window_length(self):
        assert self.push_n(499) == []

    def test_first_frame_after_500(self):
        frames = self.push_n(500)
        assert len(frames) == 1
        assert frames[0].frame_idx == 0
        assert frames[0].t_end == pytest.approx(499 / 250.0)

    def test_three_frames_after_1000(self):
        frames = self.push_n(1000)
        assert len(frames) == 3
        ends = [f.t_end for f in frames]
        assert ends == pytest.approx([499 / 250, 749 / 250, 999 / 250])

    def test_frame_contents_are_hop_shifted_slices(self):
        values = np.arange(1000, dtype=float)
        w = RollingWindower()
        frames = []
        for k, v in enumerate(values):
            frame = w.push(type("S", (), {"v": v, "t": k / 250.0})())
            if frame:
                frames.append(frame.values)
        assert np.array_equal(frames[0], values[0:500])
        assert np.array_equal(frames[1], values[250:750])
        assert np.array_equal(frames[2], values[500:1000])


class TestComputePsd:
    def frame_of(self, values):
        return WindowFrame(0, 2.0, np.asarray(values, dtype=float))

    def test_all_zero_frame(self):
        spec = compute_psd(self.frame_of(np.zeros(500)))
        assert np.all(spec.psd == 0.0)
        assert len(spec.freq) == N_BINS and len(spec.psd) == N_BINS

    def test_frequency_grid_is_half_hz(self):
        spec = compute_psd(self.frame_of(np.zeros(500)))
        assert np.array_equal(spec.freq, np.arange(251) * 0.5)

    def test_wrong_length_rejected(self):
        with pytest.raises(ContractViolation):
            WindowFrame(0, 1.0, np.zeros(499))

    def test_10hz_sinusoid_peaks_at_bin_20(self):
        values = [s.v for s in sinusoid_samples(10.0, 1.0, 500)]
        spec = compute_psd(self.frame_of(values))
        assert int(np.argmax(spec.psd)) == 20
        assert spec.freq[20] == 10.0

    def test_matches_naive_dft_oracle(self, rng):
        for _ in range(20):
            frame = rng.normal(size=500)
            psd = compute_psd(self.frame_of(frame)).psd
            oracle = naive_dft_psd(frame)
            assert np.allclose(psd, oracle, rtol=1e-9, atol=1e-15)

    def test_parseval(self, rng):
        for _ in range(20):
            frame = rng.normal(size=500) * rng.uniform(0.1, 30.0)
            psd = compute_psd(self.frame_of(frame)).psd
            total = float(np.sum(psd) * 0.5)
            msq = float(np.mean(frame * frame))
            assert total == pytest.approx(msq, rel=1e-9)

    def test_hann_window_also_peaks_correctly(self):
        values = [s.v for s in sinusoid_samples(10.0, 1.0, 500)]
        spec = compute_psd(self.frame_of(values), window="hann")
        assert int(np.argmax(spec.psd)) == 20

    def test_unknown_window_rejected(self):
        with pytest.raises(ContractViolation):
            compute_psd(self.frame_of(np.zeros(500)), window="blackman")


def spectrum_with(psd_values: dict[float, float]) -> SpectrumFrame:
    freq = np.arange(251) * 0.5
    psd = np.zeros(251)
    for f_hz, value in psd_values.items():
        psd[int(round(f_hz / 0.5))] = value
    return SpectrumFrame(0, 2.0, freq, psd)


class TestDetectAlpha:
    def test_peak_at_10hz_gates_and_band_means(self):
        # band 8..13 Hz is bins 16..26; hand-computed mean of the band
        spec = spectrum_with({10.0: 22.0, 9.0: 11.0})
        cal = Calibration(p_ref=10.0, threshold=1.0)
        reading = detect_alpha(spec, cal)
        assert reading.gated
        assert reading.p_alpha == pytest.approx((22.0 + 11.0) / 11.0)
        assert reading.a_psd == pytest.approx(100.0 * min(1.0, reading.p_alpha / 10.0))

    def test_peak_at_15hz_fails_gate_despite_band_power(self):
        spec = spectrum_with({15.0: 50.0, 10.0: 40.0, 9.0: 40.0})
        reading = detect_alpha(spec, Calibration(p_ref=10.0, threshold=0.0))
        assert not reading.gated
        assert reading.p_alpha == 0.0
        assert reading.a_psd == 0.0

    def test_all_zero_spectrum_fails_via_tie_break(self):
        # argmax ties resolve to 6 Hz, outside the alpha band
        reading = detect_alpha(spectrum_with({}), Calibration(p_ref=1.0, threshold=0.0))
        assert not reading.gated and reading.a_psd == 0.0

    def test_peak_below_threshold_fails(self):
        spec = spectrum_with({10.0: 0.5})
        reading = detect_alpha(spec, Calibration(p_ref=1.0, threshold=1.0))
        assert not reading.gated

    def test_band_edges_inclusive(self):
        for f_hz in (8.0, 13.0):
            spec = spectrum_with({f_hz: 5.0})
            assert detect_alpha(spec, Calibration(1.0, 0.0)).gated
        for f_hz in (7.5, 13.5):
            spec = spectrum_with({f_hz: 5.0})
            assert not detect_alpha(spec, Calibration(1.0, 0.0)).gated

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(min_value=0.0, max_value=1e6), min_size=251, max_size=251),
           st.floats(min_value=1e-6, max_value=1e3),
           st.floats(min_value=0.0, max_value=1e3))
    def test_gate_soundness_property(self, psd_list, p_ref, threshold):
        freq = np.arange(251) * 0.5
        spec = SpectrumFrame(0, 1.0, freq, np.array(psd_list))
        reading = detect_alpha(spec, Calibration(p_ref, threshold))
        assert 0.0 <= reading.a_psd <= 100.0
        search = spec.psd[12:41]
        k_star = 12 + int(np.argmax(search))
        if reading.gated:
            assert 8.0 <= freq[k_star] <= 13.0
            assert spec.psd[k_star] >= threshold
        else:
            assert reading.p_alpha == 0.0 and reading.a_psd == 0.0


class TestNormalize:
    def test_zero(self):
        assert normalize(0.0, Calibration(10.0, 0.0)) == 0.0

    def test_clamps_at_reference(self):
        assert normalize(10.0, Calibration(10.0, 0.0)) == 100.0
        assert normalize(25.0, Calibration(10.0, 0.0)) == 100.0

    def test_half_reference_is_50(self):
        assert normalize(5.0, Calibration(10.0, 0.0)) == pytest.approx(50.0)

    def test_monotone_in_band_power(self):
        cal = Calibration(10.0, 0.0)
        values = [normalize(p, cal) for p in np.linspace(0, 20, 100)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_calibration_invariants(self):
        with pytest.raises(ContractViolation):
            Calibration(0.0, 0.0)
        with pytest.raises(ContractViolation):
            Calibration(1.0, -0.1)


def closed_stream(n, seed=11, noise=4.0):
    params = SynthParams(rng_seed=seed, noise_amp=noise)
    return AlphaWaveSynth(params, [ScenarioSegment(Eyes.CLOSED, 600.0)]).take(n)


class TestCalibrate:
    def test_produces_positive_reference_and_quarter_threshold(self):
        cal = calibrate(closed_stream(2500))
        assert cal.p_ref > 0
        assert cal.threshold == cal.p_ref * 0.25

    def test_too_short_recording_rejected(self):
        with pytest.raises(CalibrationError):
            calibrate(closed_stream(999))

    def test_deterministic(self):
        assert calibrate(closed_stream(2500)) == calibrate(closed_stream(2500))

    def test_recording_without_alpha_rejected(self):
        flat = [s._replace(v=0.0) for s in closed_stream(1500)]
        with pytest.raises(CalibrationError):
            calibrate(flat)


class TestStreamingBatchEquivalence:
    def test_streaming_equals_offline_windowing(self):
        samples = closed_stream(2600, seed=3)
        cal = Calibration(p_ref=30.0, threshold=2.0)

        pipe = AlphaPipeline(cal)
        streamed = pipe.process(samples)

        offline_filter = BandpassFilter()
        filtered = offline_filter.process([s.v for s in samples])
        expected = []
        start = 0
        while start + WINDOW_LEN <= len(filtered):
            frame = WindowFrame(len(expected),
                                samples[start + WINDOW_LEN - 1].t,
                                filtered[start:start + WINDOW_LEN].copy())
            expected.append(detect_alpha(compute_psd(frame), cal))
            start += HOP

        assert len(streamed) == len(expected)
        for a, b in zip(streamed, expected):
            assert a == b  # bit-identical: same numeric path
