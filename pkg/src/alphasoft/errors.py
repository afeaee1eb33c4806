"""Exception types shared across the pipeline stages."""


class AlphasoftError(Exception):
    """Base class for all package errors."""


class ConfigError(AlphasoftError):
    """Invalid run configuration, scenario file, or replay header."""


class ContractViolation(AlphasoftError):
    """An operation was called outside its documented preconditions."""


class SignalIntegrityError(AlphasoftError):
    """A non-finite or otherwise corrupt sample entered the chain."""


class ReplayParseError(AlphasoftError):
    """A replay CSV row could not be parsed; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class CalibrationError(AlphasoftError):
    """Calibration input too short or produced no usable alpha frames."""


class SimulationFault(AlphasoftError):
    """The plant state became non-finite or an integration step was invalid."""
