"""Streaming signal chain: causal bandpass, rolling-window PSD, gated alpha power.

The chain mirrors a real-time BCI front end at 250 Hz: every incoming
sample is bandpass filtered, windows of 500 samples (2 s) with 50%
overlap are transformed to a one-sided power spectral density on a
0.5 Hz grid, and a reading is emitted per window: the 8-13 Hz band mean,
gated on the 6-20 Hz spectral peak falling inside the alpha band and
exceeding a calibrated threshold, normalized to 0-100.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np
from scipy import signal as _sig

from .errors import CalibrationError, ContractViolation, SignalIntegrityError
from .sources import SAMPLE_RATE_HZ, EegSample

WINDOW_LEN = 500
HOP = 250
N_BINS = WINDOW_LEN // 2 + 1          # 251
FREQ_RESOLUTION_HZ = SAMPLE_RATE_HZ / WINDOW_LEN  # 0.5

PEAK_SEARCH_BAND_HZ = (6.0, 20.0)
ALPHA_BAND_HZ = (8.0, 13.0)

# Number of cascaded biquad sections of the default bandpass. The band is
# 1-40 Hz; 10 sections put the stopband attenuation at 0.2 and 50 Hz
# beyond 20 dB while leaving the passband flat.
DEFAULT_FILTER_ORDER = 10


class BandpassFilter:
    """Causal Butterworth bandpass run as a cascade of biquads.

    Coefficients come from scipy's design routine; the per-sample
    recursion (direct form II transposed) is run here so that streaming
    and batch paths share one numeric code path and stay bit-identical.
    """

    def __init__(self, low_cut: float = 1.0, high_cut: float = 40.0,
                 order: int = DEFAULT_FILTER_ORDER, fs: float = SAMPLE_RATE_HZ):
        nyquist = fs / 2.0
        if not (0.0 < low_cut < high_cut < nyquist):
            raise ContractViolation(
                f"cutoffs must satisfy 0 < {low_cut} < {high_cut} < {nyquist}")
        if order < 2 or order % 2:
            raise ContractViolation(f"order must be an even integer >= 2, got {order}")
        self.low_cut = low_cut
        self.high_cut = high_cut
        self.order = order
        self.fs = fs
        self.sos = _sig.butter(order, [low_cut, high_cut], btype="bandpass",
                               fs=fs, output="sos")
        self._sections = [tuple(row) for row in self.sos]  # (b0,b1,b2,1,a1,a2)
        self.reset()

    def reset(self):
        self._state = [[0.0, 0.0] for _ in self._sections]

    def step(self, v: float) -> float:
        """Filter one sample; output depends only on samples seen so far."""
        if not math.isfinite(v):
            raise SignalIntegrityError(f"non-finite sample {v!r}")
        x = v
        for (b0, b1, b2, _, a1, a2), z in zip(self._sections, self._state):
            y = b0 * x + z[0]
            z[0] = b1 * x - a1 * y + z[1]
            z[1] = b2 * x - a2 * y
            x = y
        return x

    def step_sample(self, sample: EegSample) -> EegSample:
        return EegSample(sample.t, self.step(sample.v))

    def process(self, values: Iterable[float]) -> np.ndarray:
        """Filter a block of samples through the same per-sample recursion."""
        return np.array([self.step(float(v)) for v in values])


@dataclass
class WindowFrame:
    """One 500-sample analysis window, ready for the spectral stage."""
    frame_idx: int
    t_end: float  # time of the window's last sample
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != WINDOW_LEN:
            raise ContractViolation(
                f"frame must hold {WINDOW_LEN} samples, got {len(self.values)}")


class RollingWindower:
    """Collects samples into 500-sample frames with a 250-sample hop."""

    def __init__(self, window_len: int = WINDOW_LEN, hop: int = HOP):
        self.window_len = window_len
        self.hop = hop
        self._buf: list[float] = []
        self._frame_idx = 0

    def push(self, sample: EegSample) -> Optional[WindowFrame]:
        self._buf.append(sample.v)
        if len(self._buf) < self.window_len:
            return None
        frame = WindowFrame(self._frame_idx, sample.t, np.array(self._buf))
        self._frame_idx += 1
        del self._buf[:self.hop]
        return frame


@dataclass
class SpectrumFrame:
    frame_idx: int
    t_end: float
    freq: np.ndarray  # Hz, 0 .. 125 in 0.5 Hz steps
    psd: np.ndarray   # µV²/Hz, one-sided


_WINDOW_CACHE: dict[tuple[str, int], tuple[Optional[np.ndarray], float]] = {}


def _analysis_window(name: str, n: int) -> tuple[Optional[np.ndarray], float]:
    key = (name, n)
    if key not in _WINDOW_CACHE:
        if name == "rectangular":
            _WINDOW_CACHE[key] = (None, float(n))
        elif name == "hann":
            w = _sig.windows.hann(n, sym=False)
            _WINDOW_CACHE[key] = (w, float(np.sum(w * w)))
        else:
            raise ContractViolation(f"unknown analysis window {name!r}")
    return _WINDOW_CACHE[key]


def compute_psd(frame: WindowFrame, window: str = "rectangular",
                fs: float = SAMPLE_RATE_HZ) -> SpectrumFrame:
    """One-sided periodogram of a 500-sample frame.

    Interior bins are scaled by 2/(fs*sum(w^2)), DC and Nyquist by half
    that, so the PSD integrates back to the frame's mean square
    (Parseval) with the default rectangular window.
    """
    x = frame.values
    if len(x) != WINDOW_LEN:
        raise ContractViolation(f"expected {WINDOW_LEN}-sample frame, got {len(x)}")
    w, sum_w2 = _analysis_window(window, WINDOW_LEN)
    xw = x if w is None else x * w
    spectrum = np.fft.rfft(xw)
    psd = (np.abs(spectrum) ** 2) * (2.0 / (fs * sum_w2))
    psd[0] *= 0.5
    psd[-1] *= 0.5
    freq = np.fft.rfftfreq(WINDOW_LEN, d=1.0 / fs)
    return SpectrumFrame(frame.frame_idx, frame.t_end, freq, psd)


@dataclass(frozen=True)
class Calibration:
    """Normalization reference and detection threshold, both in µV²/Hz."""
    p_ref: float
    threshold: float

    def __post_init__(self):
        if not (self.p_ref > 0):
            raise ContractViolation(f"p_ref must be > 0, got {self.p_ref}")
        if self.threshold < 0:
            raise ContractViolation(f"threshold must be >= 0, got {self.threshold}")


class AlphaReading(NamedTuple):
    t: float
    p_alpha: float  # gated 8-13 Hz band mean, 0 when the gate fails
    a_psd: float    # normalized 0-100
    gated: bool


def normalize(p_alpha: float, cal: Calibration) -> float:
    """Linear clamp of band power against the calibrated reference."""
    return 100.0 * min(1.0, max(0.0, p_alpha / cal.p_ref))


def detect_alpha(spectrum: SpectrumFrame, cal: Calibration) -> AlphaReading:
    """Gate on the 6-20 Hz peak and return the normalized alpha reading.

    The peak must fall inside 8-13 Hz and clear the threshold; ties in
    the peak search resolve to the lowest frequency.
    """
    f, psd = spectrum.freq, spectrum.psd
    search = np.flatnonzero((f >= PEAK_SEARCH_BAND_HZ[0]) & (f <= PEAK_SEARCH_BAND_HZ[1]))
    k_star = search[int(np.argmax(psd[search]))]  # argmax takes the first max
    alpha = np.flatnonzero((f >= ALPHA_BAND_HZ[0]) & (f <= ALPHA_BAND_HZ[1]))
    in_band = ALPHA_BAND_HZ[0] <= f[k_star] <= ALPHA_BAND_HZ[1]
    if in_band and psd[k_star] >= cal.threshold:
        p_alpha = float(np.mean(psd[alpha]))
        return AlphaReading(spectrum.t_end, p_alpha, normalize(p_alpha, cal), True)
    return AlphaReading(spectrum.t_end, 0.0, 0.0, False)


MIN_CALIBRATION_SAMPLES = 1000  # 4 s at 250 Hz: one full window plus hops


def calibrate(recording: Sequence[EegSample] | Iterable[EegSample],
              percentile: float = 95.0,
              threshold_ratio: float = 0.25,
              filter_order: int = DEFAULT_FILTER_ORDER,
              window: str = "rectangular") -> Calibration:
    """Derive Calibration from an eyes-closed recording.

    Runs the full chain and takes p_ref as the given percentile of the
    alpha band means over frames whose 6-20 Hz peak already lies in
    8-13 Hz (the threshold cannot be applied while it is being derived).
    """
    samples = list(recording)
    if len(samples) < MIN_CALIBRATION_SAMPLES:
        raise CalibrationError(
            f"calibration needs >= {MIN_CALIBRATION_SAMPLES} samples "
            f"(4 s), got {len(samples)}")
    filt = BandpassFilter(order=filter_order)
    windower = RollingWindower()
    eligible: list[float] = []
    zero_cal = Calibration(1.0, 0.0)
    for s in samples:
        frame = windower.push(filt.step_sample(s))
        if frame is None:
            continue
        reading = detect_alpha(compute_psd(frame, window=window), zero_cal)
        if reading.gated:
            eligible.append(reading.p_alpha)
    if not eligible:
        raise CalibrationError("no frames with an 8-13 Hz spectral peak; "
                               "cannot calibrate on this recording")
    p_ref = float(np.percentile(eligible, percentile))
    if p_ref <= 0:
        raise CalibrationError("alpha band power is zero throughout the recording")
    return Calibration(p_ref=p_ref, threshold=threshold_ratio * p_ref)


class AlphaPipeline:
    """Convenience wrapper chaining filter -> windower -> PSD -> detector."""

    def __init__(self, cal: Calibration, filter_order: int = DEFAULT_FILTER_ORDER,
                 window: str = "rectangular"):
        self.cal = cal
        self.window = window
        self.filter = BandpassFilter(order=filter_order)
        self.windower = RollingWindower()
        self.latest_spectrum: Optional[SpectrumFrame] = None

    def step(self, sample: EegSample) -> Optional[AlphaReading]:
        frame = self.windower.push(self.filter.step_sample(sample))
        if frame is None:
            return None
        self.latest_spectrum = compute_psd(frame, window=self.window)
        return detect_alpha(self.latest_spectrum, self.cal)

    def process(self, samples: Iterable[EegSample]) -> list[AlphaReading]:
        readings = []
        for s in samples:
            reading = self.step(s)
            if reading is not None:
                readings.append(reading)
        return readings
