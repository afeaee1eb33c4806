"""Simulated soft embodiments.

Flower: a first-order pneumatic chamber driven by a pump (toward the
supply pressure) and vented by a solenoid valve (toward ambient), sensed
at 100 Hz by a noisy absolute-pressure sensor with a 10-sample moving
average, regulated by PID during timed inflation phases, and cycled
through inflate/deflate periods by a scheduler that latches commands at
cycle boundaries. A low-pressure guard can keep the valve shut whenever
the filtered pressure is at or below the 120 kPa baseline.

Character: a duty-driven motor whose speed sets the dancing frequency.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import ContractViolation, SimulationFault
from .mapping import FlowerCommand
from .util import clamp

CONTROL_RATE_HZ = 100.0
CONTROL_DT = 1.0 / CONTROL_RATE_HZ
_TIMER_EPS = 1e-9


class FlowerPlant:
    """True chamber pressure with pump and vent paths, Euler-integrated."""

    def __init__(self, p_init: float = 120.0, p_ambient: float = 101.3,
                 p_supply: float = 150.0, k_pump: float = 0.28,
                 k_vent: float = 0.30):
        if not (p_ambient <= p_init <= p_supply):
            raise ContractViolation(
                f"initial pressure {p_init} outside [{p_ambient}, {p_supply}]")
        self.p = p_init
        self.p_ambient = p_ambient
        self.p_supply = p_supply
        self.k_pump = k_pump
        self.k_vent = k_vent
        self.valve_open = False
        self.pump_effort = 0.0

    def step(self, dt: float):
        if not (0.0 < dt <= CONTROL_DT + _TIMER_EPS):
            raise ContractViolation(f"dt must be in (0, {CONTROL_DT}], got {dt}")
        dp = self.k_pump * self.pump_effort * (self.p_supply - self.p)
        if self.valve_open:
            dp -= self.k_vent * (self.p - self.p_ambient)
        self.p = clamp(self.p + dt * dp, self.p_ambient, self.p_supply)
        if not math.isfinite(self.p):
            raise SimulationFault(f"pressure became non-finite: {self.p!r}")


class PressureSensor:
    """100 Hz absolute-pressure readings: Gaussian noise into a 10-sample MA."""

    def __init__(self, noise_sigma: float = 0.2, ma_window: int = 10,
                 rng_seed: int = 0):
        self.noise_sigma = noise_sigma
        self.ma_window = ma_window
        self._rng = np.random.default_rng(rng_seed)
        self._ring: deque[float] = deque(maxlen=ma_window)

    def read(self, p_true: float) -> tuple[float, float]:
        """Returns (raw, filtered); the filter averages the last <=10 raws."""
        raw = p_true
        if self.noise_sigma > 0:
            raw += float(self._rng.normal(0.0, self.noise_sigma))
        self._ring.append(raw)
        return raw, sum(self._ring) / len(self._ring)

    def reset(self):
        self._ring.clear()


class PidController:
    """PID with output clamped to [0, 1] and anti-windup on the integral.

    The integral is hard-clamped to +-windup_limit and additionally held
    whenever the output is saturated in the direction the error would
    push it further; without the conditional hold, a full 120->135 kPa
    step overshoots past the settling band.
    """

    def __init__(self, kp: float = 0.4, ki: float = 0.2, kd: float = 0.02,
                 windup_limit: float = 5.0, out_min: float = 0.0,
                 out_max: float = 1.0):
        self.kp, self.ki, self.kd = kp, ki, kd
        self.windup_limit = windup_limit
        self.out_min, self.out_max = out_min, out_max
        self.integral = 0.0
        self.prev_error: Optional[float] = None

    def step(self, setpoint: float, measurement: float, dt: float) -> float:
        e = setpoint - measurement
        d = 0.0 if self.prev_error is None else (e - self.prev_error) / dt
        unsat = self.kp * e + self.ki * self.integral + self.kd * d
        saturating = (unsat > self.out_max and e > 0) or (unsat < self.out_min and e < 0)
        if not saturating:
            self.integral = clamp(self.integral + e * dt,
                                  -self.windup_limit, self.windup_limit)
        self.prev_error = e
        return clamp(self.kp * e + self.ki * self.integral + self.kd * d,
                     self.out_min, self.out_max)

    def reset(self):
        self.integral = 0.0
        self.prev_error = None


class Phase(enum.Enum):
    IDLE = "idle"
    INFLATING = "inflating"
    DEFLATING = "deflating"


class CycleScheduler:
    """Inflate/deflate phase machine with cycle-boundary command latching.

    The valve is closed while inflating (PID active toward the latched
    setpoint) and open while deflating (pump off) -- except that with the
    guard enabled, once the filtered pressure drops to the low-pressure
    floor the valve stays closed for the remainder of the phase. A newly
    submitted command never preempts the running cycle; the most recent
    one is latched when the next inflation begins.
    """

    def __init__(self, guard_enabled: bool = True, guard_floor_kpa: float = 120.0):
        self.guard_enabled = guard_enabled
        self.guard_floor_kpa = guard_floor_kpa
        self.phase = Phase.IDLE
        self.remaining_s = 0.0
        self.latched: Optional[FlowerCommand] = None
        self._pending: Optional[FlowerCommand] = None
        self._guard_latched = False
        self.cycle_started = False  # True on the tick a new inflation begins

    def submit(self, command: FlowerCommand):
        self._pending = command  # latest wins

    def step(self, dt: float, filtered_pressure: float) -> tuple[bool, Optional[float]]:
        """Advance the phase clock by dt; return (valve_open, pid_setpoint)."""
        self.cycle_started = False
        if self.phase is not Phase.IDLE:
            self.remaining_s -= dt
            while self.remaining_s <= _TIMER_EPS:
                if self.phase is Phase.INFLATING:
                    self.phase = Phase.DEFLATING
                    self.remaining_s += self.latched.t_deflation
                    self._guard_latched = False
                else:
                    self._begin_inflation(carry=self.remaining_s)
        elif self._pending is not None:
            self._begin_inflation(carry=0.0)

        if self.phase is Phase.INFLATING:
            return False, self.latched.setpoint
        if self.phase is Phase.DEFLATING:
            if self.guard_enabled and (self._guard_latched
                                       or filtered_pressure <= self.guard_floor_kpa):
                self._guard_latched = True
                return False, None
            return True, None
        return False, None

    def _begin_inflation(self, carry: float):
        if self._pending is not None:
            self.latched = self._pending
        self.phase = Phase.INFLATING
        self.remaining_s = carry + self.latched.t_inflation
        self._guard_latched = False
        self.cycle_started = True


class FlowerState(NamedTuple):
    p_true: float
    p_raw: float
    p_filt: float
    valve_open: bool
    pump_effort: float
    phase: str
    remaining_s: float
    setpoint: Optional[float]


class FlowerRig:
    """One 100 Hz control tick: integrate, sense, schedule, regulate.

    The plant integrates each interval under the actuation decided at the
    interval's start (zero-order hold); the new sensor reading then feeds
    the scheduler and PID to produce the actuation for the next interval.
    """

    def __init__(self, plant: Optional[FlowerPlant] = None,
                 sensor: Optional[PressureSensor] = None,
                 pid: Optional[PidController] = None,
                 guard_enabled: bool = True, guard_floor_kpa: float = 120.0):
        self.plant = plant or FlowerPlant()
        self.sensor = sensor or PressureSensor()
        self.pid = pid or PidController()
        self.scheduler = CycleScheduler(guard_enabled, guard_floor_kpa)

    def submit(self, command: FlowerCommand):
        self.scheduler.submit(command)

    def tick(self, dt: float = CONTROL_DT) -> FlowerState:
        self.plant.step(dt)
        raw, filt = self.sensor.read(self.plant.p)
        valve, setpoint = self.scheduler.step(dt, filt)
        if self.scheduler.cycle_started:
            self.pid.reset()
        effort = 0.0 if setpoint is None else self.pid.step(setpoint, filt, dt)
        self.plant.valve_open = valve
        self.plant.pump_effort = effort
        latched = self.scheduler.latched
        return FlowerState(self.plant.p, raw, filt, valve, effort,
                           self.scheduler.phase.value, max(self.scheduler.remaining_s, 0.0),
                           latched.setpoint if latched else None)


@dataclass
class CharacterPlant:
    """Duty-driven motor: speed relaxes to the duty fraction of omega_max."""

    omega_max: float = 30.0   # rad/s at full duty
    motor_tau: float = 0.3    # s, first-order speed response
    wobble_gain: float = 0.2  # dance phase advance per motor radian
    omega: float = 0.0
    wobble_phase: float = 0.0
    duty: int = 0

    def set_duty(self, duty: int):
        if not (0 <= duty <= 255):
            raise ContractViolation(f"duty must be in [0, 255], got {duty}")
        self.duty = int(duty)

    def step(self, dt: float = CONTROL_DT):
        target = self.omega_max * self.duty / 255.0
        if self.motor_tau > 0:
            self.omega = target + (self.omega - target) * math.exp(-dt / self.motor_tau)
        else:
            self.omega = target
        self.wobble_phase = (self.wobble_phase + self.wobble_gain * self.omega * dt) \
            % (2.0 * math.pi)

    @property
    def amplitude(self) -> float:
        """Normalized dance amplitude; equals duty/255 once the motor settles."""
        return self.omega / self.omega_max

    @property
    def dance_freq_hz(self) -> float:
        return self.wobble_gain * self.omega / (2.0 * math.pi)
