"""Unit suffixes accepted in instrument configs, resolved to SI at parse time."""
from __future__ import annotations

import math
import re
from decimal import Decimal

from tlalign.constants import ATOMIC_MASS_UNIT

# decimal prefixes are strings so that "15 um" parses to the same float as 15e-6
UNITS = {
    "length": {"fm": "1e-15", "nm": "1e-9", "um": "1e-6", "µm": "1e-6", "μm": "1e-6",
               "mm": "1e-3", "cm": "1e-2", "m": "1"},
    "mass": {"u": ATOMIC_MASS_UNIT, "Da": ATOMIC_MASS_UNIT, "kDa": 1e3 * ATOMIC_MASS_UNIT,
             "MDa": 1e6 * ATOMIC_MASS_UNIT, "kg": "1"},
    "velocity": {"m/s": "1", "mm/s": "1e-3"},
    "frequency": {"Hz": "1", "kHz": "1e3", "MHz": "1e6", "GHz": "1e9", "THz": "1e12"},
    "power": {"W": "1", "mW": "1e-3"},
    "angle": {"rad": "1", "mrad": "1e-3", "urad": "1e-6", "µrad": "1e-6", "μrad": "1e-6",
              "deg": math.pi / 180},
    "angular_rate": {"rad/s": "1", "mrad/s": "1e-3", "urad/s": "1e-6", "µrad/s": "1e-6"},
    "acceleration": {"m/s^2": "1", "m/s2": "1"},
    "area": {"m^2": "1", "m2": "1", "cm^2": "1e-4", "nm^2": "1e-18"},
    "time": {"s": "1", "ms": "1e-3"},
    "polarizability": {"C m^2/V": "1"},
    "dimensionless": {},
}

# SI spelling used when a value is written back out
SI_UNIT = {
    "length": "m", "mass": "kg", "velocity": "m/s", "frequency": "Hz", "power": "W",
    "angle": "rad", "angular_rate": "rad/s", "acceleration": "m/s^2", "area": "m^2",
    "time": "s", "polarizability": "C m^2/V", "dimensionless": "",
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


class UnitError(ValueError):
    pass


def parse_quantity(text: str, dimension: str) -> float:
    """Parse ``"<number> <unit>"`` into SI.

    A bare number is accepted for dimensionless quantities, and a bare zero for
    any dimension.
    """
    match = _QUANTITY.match(text)
    if not match:
        raise UnitError(f"cannot read a number from {text!r}")
    number = match.group(1)
    value = float(number)
    unit = match.group(2)
    if not unit:
        if dimension == "dimensionless" or value == 0:
            return value
        raise UnitError(f"{text!r} needs a {dimension} unit, e.g. {SI_UNIT[dimension]!r}")
    table = UNITS[dimension]
    if unit not in table:
        known = ", ".join(table) or "none"
        raise UnitError(f"unit {unit!r} is not a {dimension} unit (accepted: {known})")
    scale = table[unit]
    if isinstance(scale, str):
        return float(Decimal(number) * Decimal(scale))
    return value * scale


def format_si(value: float, dimension: str) -> str:
    unit = SI_UNIT[dimension]
    return f"{value!r} {unit}" if unit else repr(value)
