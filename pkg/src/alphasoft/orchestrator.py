"""End-to-end runs: source -> dsp -> wire -> mapping -> embodiments on one clock.

The master clock ticks at 500 Hz (the least common multiple of the
250 Hz EEG stream and the 100 Hz control loop). Within a tick the order
is: apply queued operator commands, advance the plants over the interval
that just ended, process the EEG sample due at the tick, then let the
per-embodiment pacers emit wire frames. A command issued at time t
therefore takes effect from the next control interval, and every logged
timestamp lies on the same grid.

Runs are deterministic for a fixed seed: the synth stream, the flower
sensor noise, and the auto-calibration recording each use a seed derived
from the run seed by a fixed offset.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from . import dsp, link, mapping
from .embodiment import CharacterPlant, FlowerPlant, FlowerRig, PidController, \
    PressureSensor
from .errors import ConfigError
from .sources import AlphaWaveSynth, CsvReplaySource, Eyes, ScenarioSegment, \
    SynthParams, default_scenario, load_scenario, scenario_duration

MASTER_RATE_HZ = 500
EEG_EVERY = 2    # master ticks between EEG samples (250 Hz)
PLANT_EVERY = 5  # master ticks between control-loop ticks (100 Hz)

SENSOR_SEED_OFFSET = 1
CALIBRATION_SEED_OFFSET = 2

EMBODIMENTS = ("character", "flower", "both")


@dataclass(frozen=True)
class FlowerSetup:
    """Flower plant, sensor, and PID overrides."""
    k_pump: float = 0.28
    k_vent: float = 0.30
    p_ambient: float = 101.3
    p_supply: float = 150.0
    p_init: float = 120.0
    noise_sigma: float = 0.2
    kp: float = 0.4
    ki: float = 0.2
    kd: float = 0.02
    windup_limit: float = 5.0


@dataclass(frozen=True)
class CharacterSetup:
    omega_max: float = 30.0
    motor_tau: float = 0.3
    wobble_gain: float = 0.2


@dataclass(frozen=True)
class RunConfig:
    embodiment: str = "both"
    synth: SynthParams = SynthParams()
    scenario: tuple[ScenarioSegment, ...] = field(
        default_factory=lambda: tuple(default_scenario()))
    replay_path: Optional[Path] = None
    duration_s: Optional[float] = None     # None: scenario total / replay length
    calibration: Optional[dsp.Calibration] = None  # None: auto-calibrate
    calibration_duration_s: float = 10.0
    mapping: mapping.MappingParams = mapping.MappingParams()
    flower: FlowerSetup = FlowerSetup()
    character: CharacterSetup = CharacterSetup()
    cadence_character_s: float = 1.0
    cadence_flower_s: float = 5.0
    guard_enabled: bool = True
    seed: int = 0
    realtime: bool = False
    filter_order: int = dsp.DEFAULT_FILTER_ORDER
    analysis_window: str = "rectangular"

    def validate(self) -> "RunConfig":
        if self.embodiment not in EMBODIMENTS:
            raise ConfigError(f"embodiment must be one of {EMBODIMENTS}, "
                              f"got {self.embodiment!r}")
        if self.replay_path is not None and not Path(self.replay_path).exists():
            raise ConfigError(f"replay file not found: {self.replay_path}")
        if not self.scenario and self.replay_path is None:
            raise ConfigError("a synth run needs a non-empty scenario")
        if self.duration_s is not None and not (self.duration_s > 0):
            raise ConfigError(f"duration_s must be > 0, got {self.duration_s}")
        for name, cadence in (("cadence_character_s", self.cadence_character_s),
                              ("cadence_flower_s", self.cadence_flower_s)):
            ticks = cadence * MASTER_RATE_HZ
            if not (cadence > 0) or abs(ticks - round(ticks)) > 1e-6:
                raise ConfigError(f"{name} must be a positive multiple of "
                                  f"{1 / MASTER_RATE_HZ} s, got {cadence}")
        if self.calibration_duration_s * 250 < dsp.MIN_CALIBRATION_SAMPLES:
            raise ConfigError("calibration_duration_s must be at least 4 s")
        return self

    def resolved_duration(self) -> float:
        if self.duration_s is not None:
            return self.duration_s
        if self.replay_path is not None:
            return CsvReplaySource(self.replay_path).n_samples / 250.0
        return scenario_duration(self.scenario)


# Flat key=value config file support. Every key mirrors a RunConfig field.
_CONFIG_KEYS = {
    "embodiment": str, "seed": int, "duration_s": float, "realtime": bool,
    "guard": bool, "scenario": str, "replay": str,
    "alpha_freq": float, "alpha_amp_closed": float, "alpha_amp_open": float,
    "noise_amp": float, "transition_tau": float,
    "p_ref": float, "threshold": float, "calibration_duration_s": float,
    "alpha_gain": float, "p_min": float, "p_max": float,
    "t_inf_min": float, "t_inf_max": float, "deflate_offset": float,
    "k_pump": float, "k_vent": float, "p_ambient": float, "p_supply": float,
    "p_init": float, "noise_sigma": float,
    "kp": float, "ki": float, "kd": float, "windup_limit": float,
    "omega_max": float, "motor_tau": float, "wobble_gain": float,
    "cadence_character_s": float, "cadence_flower_s": float,
    "filter_order": int, "analysis_window": str,
}

_TRUE_WORDS = {"1", "true", "yes", "on"}
_FALSE_WORDS = {"0", "false", "no", "off"}


def parse_config_text(text: str) -> dict:
    """Parse the flat key=value config format ('#' starts a comment)."""
    values = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {line_no}: expected key = value")
        key, _, val = (p.strip() for p in line.partition("="))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"config line {line_no}: unknown key {key!r}")
        kind = _CONFIG_KEYS[key]
        try:
            if kind is bool:
                low = val.lower()
                if low in _TRUE_WORDS:
                    values[key] = True
                elif low in _FALSE_WORDS:
                    values[key] = False
                else:
                    raise ValueError
            else:
                values[key] = kind(val)
        except ValueError:
            raise ConfigError(
                f"config line {line_no}: bad {kind.__name__} value {val!r} "
                f"for {key}") from None
    return values


def build_config(values: dict, base: Optional[RunConfig] = None) -> RunConfig:
    """Apply flat config keys on top of a base RunConfig."""
    cfg = base or RunConfig()
    synth = cfg.synth
    for key, attr in (("alpha_freq", "alpha_freq"),
                      ("alpha_amp_closed", "alpha_amp_closed"),
                      ("alpha_amp_open", "alpha_amp_open"),
                      ("noise_amp", "noise_amp"),
                      ("transition_tau", "transition_tau")):
        if key in values:
            synth = dataclasses.replace(synth, **{attr: values[key]})
    mapping_params = cfg.mapping
    for key in ("alpha_gain", "p_min", "p_max", "t_inf_min", "t_inf_max",
                "deflate_offset"):
        if key in values:
            mapping_params = mapping_params.with_param(key, values[key])
    flower = cfg.flower
    for key in ("k_pump", "k_vent", "p_ambient", "p_supply", "p_init",
                "noise_sigma", "kp", "ki", "kd", "windup_limit"):
        if key in values:
            flower = dataclasses.replace(flower, **{key: values[key]})
    character = cfg.character
    for key in ("omega_max", "motor_tau", "wobble_gain"):
        if key in values:
            character = dataclasses.replace(character, **{key: values[key]})
    calibration = cfg.calibration
    if "p_ref" in values or "threshold" in values:
        if not ("p_ref" in values and "threshold" in values):
            raise ConfigError("p_ref and threshold must be given together")
        calibration = dsp.Calibration(values["p_ref"], values["threshold"])
    scenario = cfg.scenario
    if "scenario" in values:
        scenario = tuple(load_scenario(values["scenario"]))
    top = {}
    for key in ("embodiment", "seed", "duration_s", "realtime",
                "calibration_duration_s", "cadence_character_s",
                "cadence_flower_s", "filter_order", "analysis_window"):
        if key in values:
            top[key] = values[key]
    if "guard" in values:
        top["guard_enabled"] = values["guard"]
    if "replay" in values:
        top["replay_path"] = Path(values["replay"])
    return dataclasses.replace(cfg, synth=synth, mapping=mapping_params,
                               flower=flower, character=character,
                               calibration=calibration, scenario=scenario,
                               **top).validate()


def load_config(path: str | Path, base: Optional[RunConfig] = None) -> RunConfig:
    return build_config(parse_config_text(Path(path).read_text(encoding="utf-8")),
                        base)


def auto_calibrate(config: RunConfig) -> dsp.Calibration:
    """Calibration from the run's own eyes-closed baseline.

    Synth runs generate a dedicated eyes-closed stream with a derived
    seed; replay runs calibrate on the replay recording itself.
    """
    if config.replay_path is not None:
        samples = list(CsvReplaySource(config.replay_path))
    else:
        params = dataclasses.replace(
            config.synth, rng_seed=config.seed + CALIBRATION_SEED_OFFSET)
        synth = AlphaWaveSynth(
            params, [ScenarioSegment(Eyes.CLOSED, config.calibration_duration_s)])
        samples = synth.take(int(round(config.calibration_duration_s * 250)))
    return dsp.calibrate(samples, filter_order=config.filter_order,
                         window=config.analysis_window)


class _Sink:
    """One output CSV: header row, LF endings, row counting."""

    def __init__(self, path: Path, header: str):
        self.path = path
        self.rows = 0
        self._fh = open(path, "w", encoding="utf-8", newline="\n")
        self._fh.write(header + "\n")

    def write(self, row: str):
        self._fh.write(row + "\n")
        self.rows += 1

    def close(self):
        self._fh.close()


@dataclass
class RunReport:
    duration_s: float
    seed: int
    embodiment: str
    frames_emitted: int
    alpha_events: int
    calibration: dict
    segments: list[dict]
    character: Optional[dict]
    flower: Optional[dict]
    wire_errors: int
    files: dict[str, dict]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


class Engine:
    """State and master loop of one run; the service drives it live.

    ``command_source`` is drained at each tick boundary and its callables
    applied to the engine before anything else happens in the tick, so
    operator edits are atomic with respect to a tick. ``on_tick`` runs
    after the tick's processing (the service publishes snapshots there);
    ``pace_fn`` may sleep to hold the loop to wall-clock time.
    """

    def __init__(self, config: RunConfig, cal: dsp.Calibration):
        config.validate()
        self.config = config
        self.cal = cal
        self.mapping_params = config.mapping
        self.override_alpha: Optional[int] = None
        self.stop_requested = False

        if config.replay_path is not None:
            self.source: AlphaWaveSynth | CsvReplaySource = \
                CsvReplaySource(config.replay_path)
            self.synth = None
        else:
            self.synth = AlphaWaveSynth(
                dataclasses.replace(config.synth, rng_seed=config.seed),
                config.scenario)
            self.source = self.synth

        self.duration_s = config.resolved_duration()
        self.n_ticks = int(round(self.duration_s * MASTER_RATE_HZ))
        self.n_samples = self.n_ticks // EEG_EVERY
        if isinstance(self.source, CsvReplaySource):
            self.n_samples = min(self.n_samples, self.source.n_samples)

        self.pipeline = dsp.AlphaPipeline(cal, filter_order=config.filter_order,
                                          window=config.analysis_window)
        self.character_on = config.embodiment in ("character", "both")
        self.flower_on = config.embodiment in ("flower", "both")

        fl = config.flower
        self.flower_rig = FlowerRig(
            plant=FlowerPlant(fl.p_init, fl.p_ambient, fl.p_supply,
                              fl.k_pump, fl.k_vent),
            sensor=PressureSensor(fl.noise_sigma,
                                  rng_seed=config.seed + SENSOR_SEED_OFFSET),
            pid=PidController(fl.kp, fl.ki, fl.kd, fl.windup_limit),
            guard_enabled=config.guard_enabled,
            guard_floor_kpa=config.mapping.p_min) if self.flower_on else None
        ch = config.character
        self.character_plant = CharacterPlant(
            omega_max=ch.omega_max, motor_tau=ch.motor_tau,
            wobble_gain=ch.wobble_gain) if self.character_on else None

        self.char_pacer = link.FramePacer(config.cadence_character_s)
        self.flower_pacer = link.FramePacer(config.cadence_flower_s)
        self.char_decoder = link.FrameDecoder()
        self.flower_decoder = link.FrameDecoder()
        self._char_ticks = round(config.cadence_character_s * MASTER_RATE_HZ)
        self._flower_ticks = round(config.cadence_flower_s * MASTER_RATE_HZ)

        self.t_now = 0.0
        self.latest_reading: Optional[dsp.AlphaReading] = None
        self.latest_flower_state = None
        self.latest_duty = 0

    # -- live steering hooks (called between ticks via command_source) --

    def set_eyes(self, eyes: Optional[Eyes]):
        if self.synth is None:
            raise ConfigError("eyes steering requires the synthetic source")
        self.synth.set_eyes(eyes)

    def set_override_alpha(self, value: Optional[int]):
        if value is not None and not (0 <= int(value) <= 100):
            raise ConfigError(f"override must be in 0..100, got {value}")
        self.override_alpha = None if value is None else int(value)

    def set_mapping_params(self, params: mapping.MappingParams):
        self.mapping_params = params
        if self.flower_rig is not None:
            self.flower_rig.scheduler.guard_floor_kpa = params.p_min

    def set_calibration(self, cal: dsp.Calibration):
        self.cal = cal
        self.pipeline.cal = cal

    def set_guard(self, enabled: bool):
        if self.flower_rig is not None:
            self.flower_rig.scheduler.guard_enabled = bool(enabled)
        self._guard_state = bool(enabled)

    @property
    def guard_enabled(self) -> bool:
        if self.flower_rig is not None:
            return self.flower_rig.scheduler.guard_enabled
        return getattr(self, "_guard_state", self.config.guard_enabled)

    def eyes_now(self) -> Optional[Eyes]:
        return self.synth.eyes_state_at(self.t_now) if self.synth else None

    def snapshot(self) -> dict:
        """JSON-ready immutable view of the pipeline and plants."""
        reading = self.latest_reading
        spectrum = self.pipeline.latest_spectrum
        band = None
        if spectrum is not None:
            lo, hi = dsp.PEAK_SEARCH_BAND_HZ
            sel = (spectrum.freq >= lo) & (spectrum.freq <= hi)
            band = {"f_start_hz": lo, "df_hz": dsp.FREQ_RESOLUTION_HZ,
                    "psd": [round(float(v), 6) for v in spectrum.psd[sel]]}
        eyes = self.eyes_now()
        char = None
        if self.character_plant is not None:
            char = {"duty": self.character_plant.duty,
                    "dance_freq_hz": round(self.character_plant.dance_freq_hz, 4),
                    "amplitude": round(self.character_plant.amplitude, 4)}
        flower = None
        if self.flower_rig is not None:
            st = self.latest_flower_state
            latched = self.flower_rig.scheduler.latched
            flower = {"setpoint_kpa": latched.setpoint if latched else None,
                      "p_filt_kpa": round(st.p_filt, 3) if st else None,
                      "valve_open": st.valve_open if st else False,
                      "phase": self.flower_rig.scheduler.phase.value,
                      "remaining_s": round(max(self.flower_rig.scheduler.remaining_s, 0.0), 3)}
        return {
            "t_s": round(self.t_now, 3),
            "eyes": eyes.value if eyes else None,
            "a_psd": round(reading.a_psd, 3) if reading else None,
            "gated": bool(reading.gated) if reading else False,
            "override_alpha": self.override_alpha,
            "spectrum": band,
            "character": char,
            "flower": flower,
            "params": {"alpha_gain": self.mapping_params.alpha_gain,
                       "beta_gain": self.mapping_params.beta_gain,
                       "gamma_gain": self.mapping_params.gamma_gain,
                       "p_ref": self.cal.p_ref,
                       "threshold": self.cal.threshold,
                       "guard": self.guard_enabled},
        }

    # -- the master loop --

    def run(self, out_dir: Path,
            command_source: Optional[Callable[[], list]] = None,
            on_tick: Optional[Callable[["Engine", int, float], None]] = None,
            pace_fn: Optional[Callable[[float], None]] = None) -> RunReport:
        out_dir = Path(out_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output dir {out_dir}: {exc}") from exc

        sinks: dict[str, _Sink] = {}

        def sink(name: str, header: str) -> _Sink:
            sinks[name] = _Sink(out_dir / name, header)
            return sinks[name]

        eeg_csv = sink("eeg_raw.csv", "t_s,eeg_uV")
        psd_csv = sink("psd.csv", "frame_idx,t_end_s,f_hz,psd")
        alpha_csv = sink("alpha.csv", "t_s,p_alpha,a_psd,gated")
        char_cmd_csv = char_trace_csv = flower_cmd_csv = pressure_csv = None
        if self.character_on:
            char_cmd_csv = sink("character_commands.csv", "t_s,a_psd,duty")
            char_trace_csv = sink("character_trace.csv",
                                  "t_s,duty,omega,dance_freq_hz,amplitude")
        if self.flower_on:
            flower_cmd_csv = sink(
                "flower_commands.csv",
                "t_s,a_psd,setpoint_kpa,t_inflation_s,t_deflation_s")
            pressure_csv = sink(
                "pressure_trace.csv",
                "t_s,p_true_kpa,p_meas_kpa,p_filt_kpa,valve,pump_effort,phase")

        seg_stats = [{"eyes": s.eyes.value, "n_readings": 0, "a_psd_sum": 0.0,
                      "n_commands": 0, "duty_sum": 0}
                     for s in self.config.scenario] if self.synth else []
        seg_bounds = []
        start = 0.0
        for s in self.config.scenario if self.synth else ():
            seg_bounds.append((start, start + s.duration))
            start += s.duration

        def seg_index(t: float) -> Optional[int]:
            if not seg_bounds:
                return None
            for i, (lo, hi) in enumerate(seg_bounds):
                if lo <= t < hi:
                    return i
            return len(seg_bounds) - 1

        frames = 0
        alpha_events = 0
        duty_values: list[int] = []
        pressure_min = math.inf
        pressure_max = -math.inf
        pressure_sum = 0.0

        try:
            for m in range(self.n_ticks + 1):
                if command_source is not None:
                    for apply_cmd in command_source():
                        apply_cmd(self)
                t = m / MASTER_RATE_HZ
                self.t_now = t

                if m > 0 and m % PLANT_EVERY == 0:
                    if self.flower_rig is not None:
                        st = self.flower_rig.tick()
                        self.latest_flower_state = st
                        pressure_csv.write(
                            f"{t:.2f},{st.p_true:.6f},{st.p_raw:.6f},"
                            f"{st.p_filt:.6f},{int(st.valve_open)},"
                            f"{st.pump_effort:.6f},{st.phase}")
                        pressure_min = min(pressure_min, st.p_true)
                        pressure_max = max(pressure_max, st.p_true)
                        pressure_sum += st.p_true
                    if self.character_plant is not None:
                        cp = self.character_plant
                        cp.step()
                        char_trace_csv.write(
                            f"{t:.2f},{cp.duty},{cp.omega:.6f},"
                            f"{cp.dance_freq_hz:.6f},{cp.amplitude:.6f}")

                if m % EEG_EVERY == 0 and m // EEG_EVERY < self.n_samples:
                    sample = self.source.next_sample()
                    if sample is None:
                        break
                    # shortest round-trip repr so a replay of this file is bit-exact
                    eeg_csv.write(f"{sample.t:.3f},{sample.v!r}")
                    reading = self.pipeline.step(sample)
                    if reading is not None:
                        if self.override_alpha is not None:
                            reading = dsp.AlphaReading(
                                reading.t, reading.p_alpha,
                                float(self.override_alpha), True)
                        self.latest_reading = reading
                        frames += 1
                        alpha_events += int(reading.gated)
                        spectrum = self.pipeline.latest_spectrum
                        for f_hz, p in zip(spectrum.freq, spectrum.psd):
                            psd_csv.write(f"{spectrum.frame_idx},"
                                          f"{spectrum.t_end:.3f},{f_hz:.1f},{p:.9e}")
                        alpha_csv.write(f"{reading.t:.3f},{reading.p_alpha:.9e},"
                                        f"{reading.a_psd:.6f},{int(reading.gated)}")
                        idx = seg_index(reading.t)
                        if idx is not None:
                            seg_stats[idx]["n_readings"] += 1
                            seg_stats[idx]["a_psd_sum"] += reading.a_psd
                        self.char_pacer.submit(reading)
                        self.flower_pacer.submit(reading)

                if m > 0 and self.character_on and m % self._char_ticks == 0:
                    reading = self.char_pacer.poll(t)
                    if reading is not None:
                        decoded = self.char_decoder.feed(
                            link.encode_frame(link.quantize(reading.a_psd)))
                        for a_int in decoded:
                            cmd = mapping.to_duty(a_int, self.mapping_params)
                            self.character_plant.set_duty(cmd.duty)
                            self.latest_duty = cmd.duty
                            char_cmd_csv.write(f"{t:.3f},{a_int},{cmd.duty}")
                            duty_values.append(cmd.duty)
                            idx = seg_index(t)
                            if idx is not None:
                                seg_stats[idx]["n_commands"] += 1
                                seg_stats[idx]["duty_sum"] += cmd.duty

                if m > 0 and self.flower_on and m % self._flower_ticks == 0:
                    reading = self.flower_pacer.poll(t)
                    if reading is not None:
                        decoded = self.flower_decoder.feed(
                            link.encode_frame(link.quantize(reading.a_psd)))
                        for a_int in decoded:
                            cmd = mapping.to_flower_command(a_int, self.mapping_params)
                            self.flower_rig.submit(cmd)
                            flower_cmd_csv.write(
                                f"{t:.3f},{a_int},{cmd.setpoint:.6f},"
                                f"{cmd.t_inflation:.6f},{cmd.t_deflation:.6f}")

                if on_tick is not None:
                    on_tick(self, m, t)
                if pace_fn is not None:
                    pace_fn(t)
                if self.stop_requested:
                    break
        finally:
            for s in sinks.values():
                s.close()

        segments = []
        for (lo, hi), st in zip(seg_bounds, seg_stats):
            entry = {"eyes": st["eyes"], "t_start": lo, "t_end": hi,
                     "n_readings": st["n_readings"],
                     "mean_a_psd": (st["a_psd_sum"] / st["n_readings"]
                                    if st["n_readings"] else 0.0)}
            if self.character_on:
                entry["n_commands"] = st["n_commands"]
                entry["mean_duty"] = (st["duty_sum"] / st["n_commands"]
                                      if st["n_commands"] else 0.0)
            segments.append(entry)

        character = None
        if self.character_on:
            character = {"n_commands": char_cmd_csv.rows,
                         "trace_rows": char_trace_csv.rows,
                         "duty_min": min(duty_values, default=0),
                         "duty_max": max(duty_values, default=0),
                         "duty_mean": (sum(duty_values) / len(duty_values)
                                       if duty_values else 0.0)}
        flower = None
        if self.flower_on:
            n = pressure_csv.rows
            flower = {"n_commands": flower_cmd_csv.rows, "trace_rows": n,
                      "p_true_min": pressure_min if n else None,
                      "p_true_max": pressure_max if n else None,
                      "p_true_mean": pressure_sum / n if n else None}

        files = {}
        for name, s in sinks.items():
            size = s.path.stat().st_size
            if s.rows == 0 and size == 0:
                raise OSError(f"output file {name} is unexpectedly empty")
            files[name] = {"rows": s.rows, "bytes": size}

        report = RunReport(
            duration_s=self.duration_s, seed=self.config.seed,
            embodiment=self.config.embodiment, frames_emitted=frames,
            alpha_events=alpha_events,
            calibration={"p_ref": self.cal.p_ref, "threshold": self.cal.threshold},
            segments=segments, character=character, flower=flower,
            wire_errors=self.char_decoder.error_count + self.flower_decoder.error_count,
            files=files)
        with open(out_dir / "report.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
        return report


def _wall_clock_pacer(time_scale: float = 1.0) -> Callable[[float], None]:
    import time
    start = time.monotonic()

    def pace(t_sim: float):
        target = start + t_sim / time_scale
        delay = target - time.monotonic()
        if delay > 0:
            time.sleep(delay)

    return pace


def run(config: RunConfig, out_dir: str | Path) -> RunReport:
    """Execute one full run and write all telemetry CSVs plus report.json."""
    config.validate()
    cal = config.calibration or auto_calibrate(config)
    engine = Engine(config, cal)
    pace_fn = _wall_clock_pacer() if config.realtime else None
    return engine.run(Path(out_dir), pace_fn=pace_fn)


def calibrate_cmd(config: RunConfig, out_dir: str | Path) -> dsp.Calibration:
    """Run calibration alone and persist it as calibration.json."""
    config.validate()
    cal = auto_calibrate(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "calibration.json", "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump({"p_ref": cal.p_ref, "threshold": cal.threshold}, fh, indent=2)
        fh.write("\n")
    return cal


def _load_report(run_dir: Path) -> dict:
    report_path = run_dir / "report.json"
    if not report_path.exists():
        raise ConfigError(f"not a run directory (missing {report_path})")
    return json.loads(report_path.read_text(encoding="utf-8"))


def _segment_label(segments: list[dict], t: float) -> str:
    if not segments:
        return "replay"
    for seg in segments:
        if seg["t_start"] <= t < seg["t_end"]:
            return seg["eyes"]
    return segments[-1]["eyes"]


def export_figures(run_dir: str | Path) -> list[Path]:
    """Emit tidy figure-data CSVs from a completed run's outputs.

    fig5b: duty vs time with eyes-state markers; fig6b: filtered pressure
    vs time with markers; fig5a/fig6a: the PSD frame current at each
    instant a wire frame was sent.
    """
    run_dir = Path(run_dir)
    report = _load_report(run_dir)
    segments = report.get("segments", [])
    written: list[Path] = []

    def read_rows(name: str) -> list[list[str]]:
        path = run_dir / name
        if not path.exists():
            raise ConfigError(f"missing run output: {path}")
        lines = path.read_text(encoding="utf-8").splitlines()
        return [line.split(",") for line in lines[1:]]

    psd_by_frame: dict[int, list[list[str]]] = {}
    frame_times: list[tuple[float, int]] = []
    for row in read_rows("psd.csv"):
        idx = int(row[0])
        if idx not in psd_by_frame:
            psd_by_frame[idx] = []
            frame_times.append((float(row[1]), idx))
        psd_by_frame[idx].append(row)

    def frame_at(t: float) -> Optional[int]:
        current = None
        for t_end, idx in frame_times:
            if t_end <= t + 1e-9:
                current = idx
            else:
                break
        return current

    def write_csv(name: str, header: str, rows: list[str]) -> Path:
        path = run_dir / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(row + "\n")
        written.append(path)
        return path

    def psd_snapshot_rows(command_rows: list[list[str]]) -> list[str]:
        rows = []
        for instant, cmd in enumerate(command_rows, start=1):
            t = float(cmd[0])
            idx = frame_at(t)
            if idx is None:
                continue
            for frame_row in psd_by_frame[idx]:
                rows.append(f"{instant},{cmd[0]},{frame_row[2]},{frame_row[3]}")
        return rows

    if (run_dir / "character_commands.csv").exists():
        cmds = read_rows("character_commands.csv")
        write_csv("fig5b_duty.csv", "t_s,duty,segment",
                  [f"{r[0]},{r[2]},{_segment_label(segments, float(r[0]))}"
                   for r in cmds])
        write_csv("fig5a_psd.csv", "instant,t_s,f_hz,psd", psd_snapshot_rows(cmds))

    if (run_dir / "pressure_trace.csv").exists():
        trace = read_rows("pressure_trace.csv")
        write_csv("fig6b_pressure.csv", "t_s,p_filt_kpa,segment",
                  [f"{r[0]},{r[3]},{_segment_label(segments, float(r[0]))}"
                   for r in trace])
        cmds = read_rows("flower_commands.csv")
        write_csv("fig6a_psd.csv", "instant,t_s,f_hz,psd", psd_snapshot_rows(cmds))

    if not written:
        raise ConfigError(f"no command or trace CSVs found in {run_dir}")
    return written
