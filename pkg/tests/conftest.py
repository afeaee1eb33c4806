import math

import numpy as np
import pytest

from alphasoft.dsp import BandpassFilter
from alphasoft.sources import SAMPLE_DT, EegSample


def sinusoid_samples(freq_hz: float, amp: float, n: int,
                     phase: float = 0.0) -> list[EegSample]:
    """A bare sinusoid stream at 250 Hz, bypassing SynthParams validation."""
    return [EegSample(k * SAMPLE_DT,
                      amp * math.sin(2.0 * math.pi * freq_hz * k * SAMPLE_DT + phase))
            for k in range(n)]


def measure_gain(freq_hz: float, feed_s: float = 15.0, tail_s: float = 5.0) -> float:
    """Steady-state amplitude of the streaming filter for a unit sinusoid.

    The tail window is 5 s so every grid frequency (including 0.2 Hz)
    covers an integer number of cycles.
    """
    filt = BandpassFilter()
    n = int(feed_s * 250)
    out = [filt.step(s.v) for s in sinusoid_samples(freq_hz, 1.0, n)]
    tail = np.array(out[-int(tail_s * 250):])
    return float(np.sqrt(2.0 * np.mean(tail * tail)))


def naive_dft_psd(frame: np.ndarray, fs: float = 250.0) -> np.ndarray:
    """O(n^2) periodogram oracle: explicit DFT matrix, one-sided scaling.

    Kept independent of the rfft-based implementation under test.
    """
    n = len(frame)
    k = np.arange(n // 2 + 1)
    angles = -2.0j * np.pi * np.outer(k, np.arange(n)) / n
    spectrum = np.exp(angles) @ frame
    psd = (np.abs(spectrum) ** 2) * (2.0 / (fs * n))
    psd[0] *= 0.5
    psd[-1] *= 0.5
    return psd


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
