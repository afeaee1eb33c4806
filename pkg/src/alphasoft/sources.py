"""EEG sample sources: a scripted alpha-wave synthesizer and a CSV replay reader.

Both produce the same stream type: one microvolt sample every 1/250 s.
The synthesizer models eyes-open/eyes-closed alpha blocking as a sinusoid
whose envelope relaxes between two amplitudes, on top of pink background
noise. The replay source reads the raw-EEG CSV format written by the
orchestrator (header ``t_s,eeg_uV``, 250 Hz implied).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigError, ReplayParseError

SAMPLE_RATE_HZ = 250.0
SAMPLE_DT = 1.0 / SAMPLE_RATE_HZ


class EegSample(NamedTuple):
    t: float  # seconds since stream start
    v: float  # microvolts


class Eyes(enum.Enum):
    OPEN = "open"
    CLOSED = "closed"


@dataclass(frozen=True)
class ScenarioSegment:
    eyes: Eyes
    duration: float  # seconds

    def __post_init__(self):
        if not (self.duration > 0):
            raise ConfigError(f"segment duration must be > 0, got {self.duration}")


def default_scenario() -> list[ScenarioSegment]:
    """The built-in 70 s protocol: alternating open/closed starting with open."""
    return [
        ScenarioSegment(Eyes.OPEN, 10.0),
        ScenarioSegment(Eyes.CLOSED, 20.0),
        ScenarioSegment(Eyes.OPEN, 10.0),
        ScenarioSegment(Eyes.CLOSED, 20.0),
        ScenarioSegment(Eyes.OPEN, 10.0),
    ]


def scenario_duration(segments: Sequence[ScenarioSegment]) -> float:
    return sum(s.duration for s in segments)


def eyes_at(segments: Sequence[ScenarioSegment], t: float) -> Eyes:
    """Eyes state at time t; past the end the final segment's state holds."""
    if not segments:
        raise ConfigError("scenario must contain at least one segment")
    start = 0.0
    for seg in segments:
        if t < start + seg.duration:
            return seg.eyes
        start += seg.duration
    return segments[-1].eyes


def parse_scenario(text: str) -> list[ScenarioSegment]:
    """Parse the scenario file format: one ``open|closed,<duration_s>`` per line."""
    segments = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise ConfigError(f"scenario line {line_no}: expected 'open|closed,<seconds>'")
        state, dur_s = parts
        if state.lower() not in ("open", "closed"):
            raise ConfigError(f"scenario line {line_no}: unknown eyes state {state!r}")
        try:
            duration = float(dur_s)
        except ValueError:
            raise ConfigError(f"scenario line {line_no}: bad duration {dur_s!r}") from None
        segments.append(ScenarioSegment(Eyes(state.lower()), duration))
    if not segments:
        raise ConfigError("scenario file contains no segments")
    return segments


def load_scenario(path: str | Path) -> list[ScenarioSegment]:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class SynthParams:
    """Parameters of the synthetic alpha generator.

    Defaults are chosen so that the detector's auto-calibrated threshold
    separates the two eyes states robustly.
    """

    alpha_freq: float = 10.0        # Hz, must lie in the 8-13 Hz alpha band
    alpha_amp_closed: float = 20.0  # microvolts
    alpha_amp_open: float = 2.0     # microvolts
    noise_amp: float = 4.0          # microvolts RMS of the pink background
    transition_tau: float = 0.5     # seconds, envelope relaxation constant
    rng_seed: int = 0

    def __post_init__(self):
        if not (8.0 <= self.alpha_freq <= 13.0):
            raise ConfigError(f"alpha_freq must be in [8, 13] Hz, got {self.alpha_freq}")
        if not (self.alpha_amp_open < self.alpha_amp_closed):
            raise ConfigError("alpha_amp_open must be < alpha_amp_closed (alpha blocking)")
        if min(self.alpha_amp_open, self.alpha_amp_closed, self.noise_amp) < 0:
            raise ConfigError("amplitudes must be non-negative")
        if self.transition_tau < 0:
            raise ConfigError("transition_tau must be >= 0")


# Output scale that gives the 3-pole pink filter below unit RMS for
# unit-variance white input (measured over 4e5 samples).
_PINK_GAIN = 1.0 / 2.969


class _PinkNoise:
    """Paul Kellet's economy 1/f filter, driven by a seeded Gaussian source."""

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._b0 = self._b1 = self._b2 = 0.0

    def next(self) -> float:
        w = self._rng.standard_normal()
        self._b0 = 0.99765 * self._b0 + w * 0.0990460
        self._b1 = 0.96300 * self._b1 + w * 0.2965164
        self._b2 = 0.57000 * self._b2 + w * 1.0526913
        return (self._b0 + self._b1 + self._b2 + w * 0.1848) * _PINK_GAIN


class AlphaWaveSynth:
    """Deterministic eyes-open/eyes-closed EEG generator.

    The envelope A(t) relaxes exponentially (time constant
    ``transition_tau``) toward the amplitude of the current eyes state,
    which comes from the scenario script unless a live override is set.
    A scenario that runs out holds its final state indefinitely.
    """

    def __init__(self, params: SynthParams,
                 scenario: Optional[Sequence[ScenarioSegment]] = None,
                 initial_eyes: Eyes = Eyes.OPEN):
        self.params = params
        self.scenario = list(scenario) if scenario else None
        self._initial_eyes = initial_eyes
        self._override: Optional[Eyes] = None
        self._k = 0
        self._pink = _PinkNoise(np.random.default_rng(params.rng_seed))
        self._amp = self._target_amp(self.eyes_state_at(0.0))

    def _target_amp(self, eyes: Eyes) -> float:
        return (self.params.alpha_amp_closed if eyes is Eyes.CLOSED
                else self.params.alpha_amp_open)

    def eyes_state_at(self, t: float) -> Eyes:
        if self._override is not None:
            return self._override
        if self.scenario:
            return eyes_at(self.scenario, t)
        return self._initial_eyes

    def set_eyes(self, eyes: Optional[Eyes]):
        """Live steering: force an eyes state, or None to resume the script."""
        self._override = eyes

    def next_sample(self) -> EegSample:
        t = self._k * SAMPLE_DT
        target = self._target_amp(self.eyes_state_at(t))
        if self._k > 0:  # the stream starts settled in its initial state
            tau = self.params.transition_tau
            if tau > 0:
                self._amp = target + (self._amp - target) * math.exp(-SAMPLE_DT / tau)
            else:
                self._amp = target
        v = self._amp * math.sin(2.0 * math.pi * self.params.alpha_freq * t)
        if self.params.noise_amp > 0:
            v += self.params.noise_amp * self._pink.next()
        self._k += 1
        return EegSample(t, v)

    def take(self, n: int) -> list[EegSample]:
        return [self.next_sample() for _ in range(n)]


class CsvReplaySource:
    """Deterministic replay of a raw-EEG CSV file.

    Timestamps are reconstructed from the row index at 250 Hz; the file's
    own t_s column is only used to detect a sample-rate mismatch.
    """

    HEADER = "t_s,eeg_uV"

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._values = self._parse(self.path.read_text(encoding="utf-8"))
        self._k = 0

    @classmethod
    def _parse(cls, text: str) -> list[float]:
        lines = text.splitlines()
        if not lines or lines[0].strip() != cls.HEADER:
            raise ConfigError(
                f"replay file must start with header {cls.HEADER!r}, "
                f"got {lines[0].strip()!r}" if lines else "replay file is empty")
        values = []
        t_prev = None
        for line_no, raw in enumerate(lines[1:], start=2):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ReplayParseError(line_no, f"expected 2 fields, got {len(parts)}")
            try:
                t_s = float(parts[0])
                v = float(parts[1])
            except ValueError:
                raise ReplayParseError(line_no, f"non-numeric row {line!r}") from None
            if t_prev is not None and len(values) == 1:
                dt = t_s - t_prev
                if dt > 0 and abs(dt - SAMPLE_DT) > 0.01 * SAMPLE_DT:
                    raise ConfigError(
                        f"replay timestamps imply {1.0 / dt:.1f} Hz, expected 250 Hz")
            t_prev = t_s
            values.append(v)
        return values

    @property
    def n_samples(self) -> int:
        return len(self._values)

    def next_sample(self) -> Optional[EegSample]:
        """Next sample in file order, or None at end of stream."""
        if self._k >= len(self._values):
            return None
        sample = EegSample(self._k * SAMPLE_DT, self._values[self._k])
        self._k += 1
        return sample

    def __iter__(self) -> Iterator[EegSample]:
        while (s := self.next_sample()) is not None:
            yield s
