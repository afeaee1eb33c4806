"""Alpha-wave BCI pipeline driving two simulated soft embodiments."""

from .dsp import (AlphaPipeline, AlphaReading, BandpassFilter, Calibration,
                  RollingWindower, SpectrumFrame, calibrate, compute_psd,
                  detect_alpha, normalize)
from .embodiment import (CharacterPlant, CycleScheduler, FlowerPlant,
                         FlowerRig, Phase, PidController, PressureSensor)
from .errors import (AlphasoftError, CalibrationError, ConfigError,
                     ContractViolation, ReplayParseError, SignalIntegrityError,
                     SimulationFault)
from .link import FrameDecoder, FramePacer, encode_frame, pace_frames, quantize
from .mapping import (CharacterCommand, FlowerCommand, MappingParams, to_duty,
                      to_flower_command)
from .orchestrator import (Engine, RunConfig, RunReport, calibrate_cmd,
                           export_figures, load_config, run)
from .sources import (AlphaWaveSynth, CsvReplaySource, EegSample, Eyes,
                      ScenarioSegment, SynthParams, default_scenario,
                      load_scenario, parse_scenario)

__version__ = "0.1.0"
