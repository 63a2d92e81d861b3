"""Instrument configuration: sectioned ``key = value`` text with unit suffixes.

Example::

    [beam]
    mass = 100 kDa
    velocity = 100 m/s

    [geometry]
    roll = 10 urad
    common_roll = optimal

Every key has a default taken from the reference instrument (d = 133 nm,
L = 1 m, H = b = 1 mm, w_x = 15 um, w_y = 1.5 mm, 100 kDa at 100 m/s).
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from importlib import resources

from tlalign.alignment import InterferometerGeometry, VibrationSpec
from tlalign.beamphysics import ClusterBeam, GratingLaser
from tlalign.constants import ATOMIC_MASS_UNIT
from tlalign.oracle import OracleConfig
from tlalign.units import UnitError, format_si, parse_quantity

OPTIMAL = "optimal"


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class FigureSettings:
    """Pass distances for the standing-wave renderings; ``None`` picks 0, z_R/2, z_R."""

    z0_near: float | None = None
    z0_mid: float | None = None
    z0_far: float | None = None


@dataclass(frozen=True)
class InstrumentConfig:
    beam: ClusterBeam = field(default_factory=lambda: ClusterBeam(
        mass=1e5 * ATOMIC_MASS_UNIT, velocity=100.0, velocity_sigma=10.0))
    laser: GratingLaser = field(default_factory=GratingLaser)
    geometry: InterferometerGeometry = field(default_factory=InterferometerGeometry)
    vibration: VibrationSpec = field(default_factory=VibrationSpec)
    visibility: float = 1.0
    roll_target: float = 0.9
    gravity_target: float = 0.9
    oracle: OracleConfig = field(default_factory=OracleConfig)
    figures: FigureSettings = field(default_factory=FigureSettings)

    def __post_init__(self):
        if not 0 <= self.visibility <= 1:
            raise ValueError(f"intrinsic visibility must lie in [0, 1], got {self.visibility!r}")
        for name in ("roll_target", "gravity_target"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")

    @property
    def period(self) -> float:
        return self.laser.period


# (section, key) -> (dimension, owner attribute, field name)
# owner None means a field of InstrumentConfig itself
KEYS = {
    ("beam", "mass"): ("mass", "beam", "mass"),
    ("beam", "velocity"): ("velocity", "beam", "velocity"),
    ("beam", "velocity_sigma"): ("velocity", "beam", "velocity_sigma"),
    ("beam", "height"): ("length", "beam", "height"),
    ("beam", "width"): ("length", "beam", "width"),
    ("beam", "polarizability"): ("polarizability", "beam", "polarizability"),
    ("beam", "absorption_cross_section"): ("area", "beam", "absorption_cross_section"),
    ("laser", "wavelength"): ("length", "laser", "wavelength"),
    ("laser", "linewidth"): ("frequency", "laser", "linewidth"),
    ("laser", "power"): ("power", "laser", "power"),
    ("laser", "power_instability"): ("dimensionless", "laser", "power_instability"),
    ("laser", "waist_x"): ("length", "laser", "waist_x"),
    ("laser", "waist_y"): ("length", "laser", "waist_y"),
    ("laser", "pass_distance"): ("length", "laser", "pass_distance"),
    ("laser", "mirror_deviation"): ("length", "laser", "mirror_deviation"),
    ("geometry", "separation"): ("length", "geometry", "separation"),
    ("geometry", "separation_error"): ("length", "geometry", "separation_error"),
    ("geometry", "roll"): ("angle", "geometry", "roll"),
    ("geometry", "pitch"): ("angle", "geometry", "pitch"),
    ("geometry", "yaw"): ("angle", "geometry", "yaw"),
    ("geometry", "common_roll"): ("angle", "geometry", "common_roll"),
    ("geometry", "latitude"): ("angle", "geometry", "latitude"),
    ("geometry", "gravity"): ("acceleration", "geometry", "gravity"),
    ("geometry", "earth_rotation"): ("angular_rate", "geometry", "earth_rotation"),
    ("vibration", "amp_g1"): ("length", "vibration", "amp_g1"),
    ("vibration", "amp_g2"): ("length", "vibration", "amp_g2"),
    ("vibration", "amp_g3"): ("length", "vibration", "amp_g3"),
    ("vibration", "common_amp"): ("length", "vibration", "common_amp"),
    ("vibration", "common_omega"): ("angular_rate", "vibration", "common_omega"),
    ("budget", "visibility"): ("dimensionless", None, "visibility"),
    ("budget", "roll_target"): ("dimensionless", None, "roll_target"),
    ("budget", "gravity_target"): ("dimensionless", None, "gravity_target"),
    ("oracle", "samples"): ("integer", "oracle", "sample_count"),
    ("oracle", "seed"): ("integer", "oracle", "seed"),
    ("oracle", "chunk_size"): ("integer", "oracle", "chunk_size"),
    ("oracle", "velocity_distribution"): ("word", "oracle", "velocity_distribution"),
    ("figures", "z0_near"): ("length", "figures", "z0_near"),
    ("figures", "z0_mid"): ("length", "figures", "z0_mid"),
    ("figures", "z0_far"): ("length", "figures", "z0_far"),
}
# keys accepted on input that are stored under another key
ALIASES = {("vibration", "common_frequency"): ("common_omega", "frequency", 2 * math.pi)}
# keys that only constrain other values
CHECKED = {("laser", "period"): "length"}
SECTIONS = ("beam", "laser", "geometry", "vibration", "budget", "oracle", "figures")


def default_config() -> InstrumentConfig:
    return InstrumentConfig()


def reference_config_text() -> str:
    return resources.files("tlalign").joinpath("reference.cfg").read_text(encoding="utf-8")


def _parse_value(text: str, dimension: str, section: str, key: str):
    if dimension == "word":
        return text.strip()
    if dimension == "integer":
        try:
            return int(text)
        except ValueError:
            number = float(text)
        if number != int(number):
            raise UnitError(f"{text!r} is not an integer")
        return int(number)
    if (section, key) == ("geometry", "common_roll") and text.strip().lower() == OPTIMAL:
        return None
    return parse_quantity(text, dimension)


def config_values(cfg: InstrumentConfig) -> dict[tuple[str, str], object]:
    """Flat ``(section, key) -> SI value`` view of a config."""
    values = {}
    for (section, key), (_, owner, name) in KEYS.items():
        holder = cfg if owner is None else getattr(cfg, owner)
        values[section, key] = getattr(holder, name)
    return values


def build_config(values: dict[tuple[str, str], object]) -> InstrumentConfig:
    """Inverse of :func:`config_values`; raises ``ValueError`` on violated invariants."""
    grouped: dict[str | None, dict[str, object]] = {}
    for (section, key), value in values.items():
        _, owner, name = KEYS[section, key]
        grouped.setdefault(owner, {})[name] = value
    parts = {
        "beam": ClusterBeam(**grouped["beam"]),
        "laser": GratingLaser(**grouped["laser"]),
        "geometry": InterferometerGeometry(**grouped["geometry"]),
        "vibration": VibrationSpec(**grouped["vibration"]),
        "oracle": OracleConfig(**grouped["oracle"]),
        "figures": FigureSettings(**grouped["figures"]),
    }
    return InstrumentConfig(**parts, **grouped[None])


def parse_config(text: str) -> InstrumentConfig:
    values = config_values(default_config())
    section = None
    section_lines: dict[str, int] = {}
    seen: dict[tuple[str, str], int] = {}
    checks: list[tuple[float, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith(";"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            section_lines.setdefault(section, lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if section is None:
            raise ConfigError("key outside of any [section]", lineno)
        key, _, value_text = (part.strip() for part in line.partition("="))
        if not value_text:
            raise ConfigError(f"missing value for required key {key!r}", lineno)

        target = key
        if (section, key) in ALIASES:
            target, dimension, scale = ALIASES[section, key]
        elif (section, key) in CHECKED:
            dimension, scale = CHECKED[section, key], None
        elif (section, key) in KEYS:
            dimension, scale = KEYS[section, key][0], 1.0
        else:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        if (section, target) in seen:
            raise ConfigError(f"{key!r} repeats a value already set on line "
                              f"{seen[section, target]}", lineno)
        try:
            value = _parse_value(value_text, dimension, section, key)
        except (UnitError, ValueError) as exc:
            raise ConfigError(f"{key}: {exc}", lineno) from None
        if scale is None:
            checks.append((value, lineno))
            continue
        seen[section, target] = lineno
        values[section, target] = value if value is None or scale == 1.0 else value * scale

    try:
        cfg = build_config(values)
    except ValueError as exc:
        raise ConfigError(str(exc), _blame_line(str(exc), seen, section_lines)) from None
    for period, lineno in checks:
        if not math.isclose(period, cfg.laser.period, rel_tol=1e-9):
            raise ConfigError(
                f"period {period!r} m must equal wavelength/2 = {cfg.laser.period!r} m", lineno)
    return cfg


def _blame_line(message, seen, section_lines):
    # the longest key named in the message wins, so velocity_sigma beats velocity
    named = [(len(key), lineno) for (section, key), lineno in seen.items()
             if KEYS[section, key][2] in message or key in message]
    if named:
        return max(named)[1]
    return min(section_lines.values(), default=None)


def load_config(path) -> InstrumentConfig:
    if str(path) == "-":
        return parse_config(sys.stdin.read())
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def render_config(cfg: InstrumentConfig) -> str:
    """Write every resolved value in SI; ``parse_config`` reads it back unchanged."""
    values = config_values(cfg)
    lines = []
    for section in SECTIONS:
        lines.append(f"[{section}]")
        for (sec, key), (dimension, _, _) in KEYS.items():
            if sec != section:
                continue
            value = values[sec, key]
            if value is None:
                if (sec, key) == ("geometry", "common_roll"):
                    lines.append(f"{key} = {OPTIMAL}")
                continue
            if dimension in ("integer", "word"):
                lines.append(f"{key} = {value}")
            else:
                lines.append(f"{key} = {format_si(value, dimension)}")
        lines.append("")
    return "\n".join(lines)


def with_override(cfg: InstrumentConfig, path: str, value: float) -> InstrumentConfig:
    """Copy of ``cfg`` with the dotted key ``path`` set to the SI ``value``."""
    section, _, key = path.partition(".")
    values = config_values(cfg)
    if (section, key) in ALIASES:
        target, _, scale = ALIASES[section, key]
        values[section, target] = value * scale
    elif (section, key) in KEYS and KEYS[section, key][0] not in ("word",):
        values[section, key] = value
    else:
        raise KeyError(path)
    return build_config(values)


def key_dimension(path: str) -> str:
    section, _, key = path.partition(".")
    if (section, key) in ALIASES:
        return ALIASES[section, key][1]
    if (section, key) in KEYS:
        return KEYS[section, key][0]
    raise KeyError(path)


def describe(cfg: InstrumentConfig) -> dict[str, str]:
    """Human-readable echo of every resolved value, keyed by dotted path."""
    out = {}
    for (section, key), value in config_values(cfg).items():
        dimension = KEYS[section, key][0]
        if value is None:
            text = OPTIMAL if key == "common_roll" else "-"
        elif dimension in ("integer", "word"):
            text = str(value)
        else:
            text = format_si(value, dimension)
        out[f"{section}.{key}"] = text
    return out


__all__ = [
    "ConfigError", "FigureSettings", "InstrumentConfig", "build_config", "config_values",
    "default_config", "describe", "key_dimension", "load_config", "parse_config",
    "reference_config_text", "render_config", "with_override",
]

