"""Small numeric helpers used by the mapping and wire-format stages."""

import math


def round_half_away(x: float) -> int:
    """Round to the nearest integer, ties away from zero.

    Python's built-in round() uses banker's rounding, which would send
    127.5 to 128 but 126.5 to 126; the actuator mappings need the
    locale-independent "half away from zero" rule instead.
    """
    # Absorb representation error from gain products (2.55*50 comes out as
    # 127.49999999999999) before deciding which side of the tie we are on.
    x = round(x, 9)
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x
