"""Wire codec for the BCI-to-microcontroller serial channel.

Frames are the normalized alpha value as ASCII decimal (0-100), one per
line, LF terminated: the same bytes work against a serial monitor, the
real microcontroller, or the simulator. The decoder tolerates arbitrary
chunking, drops corrupt frames, and resynchronizes at the next LF.

Hardware profile: 115200 baud, 8N1. The simulator treats the link as
instantaneous; the pacer below provides the per-embodiment send cadence
(1 s for the character, 5 s for the flower).
"""

from __future__ import annotations

from typing import Optional

from .dsp import AlphaReading
from .errors import ContractViolation
from .util import round_half_away

MAX_FRAME_BYTES = 16  # payloads are 1-3 digits; anything longer is garbage


def quantize(a_psd: float) -> int:
    """Round a real-valued reading to the integer wire value, half away from zero."""
    value = round_half_away(a_psd)
    if not (0 <= value <= 100):
        raise ContractViolation(f"a_psd {a_psd} quantizes outside 0..100")
    return value


def encode_frame(a_psd: int) -> bytes:
    """ASCII digits without leading zeros, terminated by a single LF."""
    if not isinstance(a_psd, int) or isinstance(a_psd, bool):
        raise ContractViolation(f"encode_frame takes an int, got {a_psd!r}")
    if not (0 <= a_psd <= 100):
        raise ContractViolation(f"frame value must be in 0..100, got {a_psd}")
    return b"%d\n" % a_psd


class FrameDecoder:
    """Incremental decoder; frames may arrive split across arbitrary chunks.

    A frame is valid when it is 1-3 ASCII digits with no leading zero
    (except "0" itself) and parses to 0..100. Anything else increments
    ``error_count`` and is discarded; decoding resumes at the next LF.
    """

    def __init__(self):
        self._buf = bytearray()
        self._discarding = False
        self.error_count = 0

    def feed(self, chunk: bytes) -> list[int]:
        values = []
        for byte in chunk:
            if byte == 0x0A:  # LF closes a frame (or ends a discarded run)
                if self._discarding:
                    self._discarding = False
                    self.error_count += 1
                else:
                    value = self._validate(bytes(self._buf))
                    if value is None:
                        self.error_count += 1
                    else:
                        values.append(value)
                self._buf.clear()
                continue
            if self._discarding:
                continue
            self._buf.append(byte)
            if len(self._buf) > MAX_FRAME_BYTES:
                self._buf.clear()
                self._discarding = True
        return values

    @staticmethod
    def _validate(payload: bytes) -> Optional[int]:
        if not (1 <= len(payload) <= 3) or not payload.isdigit():
            return None
        if len(payload) > 1 and payload[0:1] == b"0":
            return None
        value = int(payload)
        return value if value <= 100 else None


class FramePacer:
    """Latest-wins decimation of readings to a send cadence.

    The most recent reading is forwarded once per cadence tick; readings
    that arrive in between are dropped. A tick with no reading newer than
    one cadence interval emits nothing, so a stale value is never resent.
    """

    def __init__(self, cadence_s: float):
        if not (cadence_s > 0):
            raise ContractViolation(f"cadence must be > 0, got {cadence_s}")
        self.cadence_s = cadence_s
        self._latest: Optional[AlphaReading] = None

    def submit(self, reading: AlphaReading):
        self._latest = reading

    def poll(self, now: float) -> Optional[AlphaReading]:
        """Called at each cadence tick; returns the reading to send, if any."""
        if self._latest is None or now - self._latest.t >= self.cadence_s:
            return None
        return self._latest


def pace_frames(readings: list[AlphaReading], cadence_s: float,
                until: Optional[float] = None) -> list[tuple[float, AlphaReading]]:
    """Offline pacing of a finished reading sequence.

    Simulates cadence ticks at multiples of cadence_s and returns the
    (tick_time, reading) pairs that would have been sent.
    """
    pacer = FramePacer(cadence_s)
    if until is None:
        until = max((r.t for r in readings), default=0.0)
    sent = []
    idx = 0
    tick = 1
    while True:
        now = tick * cadence_s
        if now > until + 1e-9:
            break
        while idx < len(readings) and readings[idx].t <= now + 1e-9:
            pacer.submit(readings[idx])
            idx += 1
        reading = pacer.poll(now)
        if reading is not None:
            sent.append((now, reading))
        tick += 1
    return sent
