"""Actuator mappings: normalized alpha power to duty cycle and flower command.

The duty map is duty = round(2.55 * a_psd) clamped to 0-255. The flower
maps are affine, anchored so the endpoints land exactly on the plant's
rated extremes: 120-135 kPa setpoint, 0.8-2.8 s inflation, deflation
always 0.5 s longer than inflation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ContractViolation
from .util import clamp, round_half_away

DUTY_MAX = 255


@dataclass(frozen=True)
class MappingParams:
    """Gains and endpoints of both actuator maps.

    beta_gain and gamma_gain are derived from the pressure and timing
    endpoints so the consistency constraints (gain = span / 100) hold by
    construction; tune the endpoints, not the gains.
    """

    alpha_gain: float = 2.55     # duty counts per A_PSD unit
    p_min: float = 120.0         # kPa, flower setpoint at A_PSD = 0
    p_max: float = 135.0         # kPa, flower setpoint at A_PSD = 100
    t_inf_min: float = 0.8       # s, inflation time at A_PSD = 0
    t_inf_max: float = 2.8       # s, inflation time at A_PSD = 100
    deflate_offset: float = 0.5  # s, added to inflation to get deflation

    def __post_init__(self):
        if self.alpha_gain < 0:
            raise ContractViolation(f"alpha_gain must be >= 0, got {self.alpha_gain}")
        if not (self.p_min < self.p_max):
            raise ContractViolation(f"need p_min < p_max, got {self.p_min} >= {self.p_max}")
        if not (self.t_inf_min < self.t_inf_max):
            raise ContractViolation(
                f"need t_inf_min < t_inf_max, got {self.t_inf_min} >= {self.t_inf_max}")
        if self.t_inf_min < 0:
            raise ContractViolation("inflation time must be non-negative")
        if self.deflate_offset < 0:
            raise ContractViolation("deflate_offset must be non-negative")

    @property
    def beta_gain(self) -> float:
        """kPa of setpoint per A_PSD unit: (p_max - p_min) / 100."""
        return (self.p_max - self.p_min) / 100.0

    @property
    def gamma_gain(self) -> float:
        """Seconds of inflation per A_PSD unit: (t_inf_max - t_inf_min) / 100."""
        return (self.t_inf_max - self.t_inf_min) / 100.0

    def with_param(self, name: str, value: float) -> "MappingParams":
        """New params with one field changed; gain names adjust their endpoint.

        Setting beta_gain moves p_max (keeping p_min), setting gamma_gain
        moves t_inf_max, so the consistency constraints stay intact.
        Raises ContractViolation if the result is invalid.
        """
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise ContractViolation(f"parameter {name!r} needs a number, got {value!r}") from None
        if name == "beta_gain":
            return replace(self, p_max=self.p_min + 100.0 * value)
        if name == "gamma_gain":
            return replace(self, t_inf_max=self.t_inf_min + 100.0 * value)
        if name in ("alpha_gain", "p_min", "p_max", "t_inf_min", "t_inf_max",
                    "deflate_offset"):
            return replace(self, **{name: value})
        raise ContractViolation(f"unknown mapping parameter {name!r}")


@dataclass(frozen=True)
class CharacterCommand:
    duty: int  # PWM duty, 0-255

    def __post_init__(self):
        if not (0 <= self.duty <= DUTY_MAX):
            raise ContractViolation(f"duty must be in [0, {DUTY_MAX}], got {self.duty}")


@dataclass(frozen=True)
class FlowerCommand:
    setpoint: float     # kPa
    t_inflation: float  # s
    t_deflation: float  # s

    def __post_init__(self):
        if not (self.t_deflation >= self.t_inflation):
            raise ContractViolation("deflation must not be shorter than inflation")


def _check_a_psd(a_psd: float):
    if not (isinstance(a_psd, (int, float)) and math.isfinite(a_psd)):
        raise ContractViolation(f"a_psd must be a finite number, got {a_psd!r}")
    if not (0.0 <= a_psd <= 100.0):
        raise ContractViolation(f"a_psd must be in [0, 100], got {a_psd}")


def to_duty(a_psd: float, params: MappingParams = MappingParams()) -> CharacterCommand:
    """Duty cycle command: round(alpha_gain * a_psd), half away from zero."""
    _check_a_psd(a_psd)
    duty = round_half_away(params.alpha_gain * a_psd)
    return CharacterCommand(int(clamp(duty, 0, DUTY_MAX)))


def to_flower_command(a_psd: float,
                      params: MappingParams = MappingParams()) -> FlowerCommand:
    """Pressure setpoint and cycle times for the flower.

    Values are snapped to a 1 ns decimal grid so the endpoints compare
    bit-exactly against their rated values (135.0, 2.8, 3.3, ...).
    """
    _check_a_psd(a_psd)
    frac = a_psd / 100.0
    setpoint = round(params.p_min + (params.p_max - params.p_min) * frac, 9)
    t_inflation = round(params.t_inf_min + (params.t_inf_max - params.t_inf_min) * frac, 9)
    t_deflation = round(t_inflation + params.deflate_offset, 9)
    return FlowerCommand(setpoint, t_inflation, t_deflation)
