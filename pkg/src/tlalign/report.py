"""Budget tables, CSV emission, parameter sweeps and figure data.

CSV cells carry full precision (nine significant digits); rounding to the
figures quoted for the reference instrument happens only in the text table.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from tlalign import oracle as mc
from tlalign.alignment import (
    AlignmentBudget,
    VibrationSpec,
    common_mode_vibration_reduction,
    compose_budget,
    independent_vibration_reduction,
    max_gravity_roll,
    optimal_roll,
    roll_reduction,
)
from tlalign.beamphysics import (
    gaussian_state_at,
    rayleigh_length,
    standing_wave_intensity,
)
from tlalign.config import InstrumentConfig, describe, with_override

# key -> (scale, unit label, significant digits, rounding mode)
REQUIREMENT_DISPLAY = {
    "period": (1.0, "", 1, "floor"),
    "separation": (1e-6, "µm", 3, "nearest"),
    "roll": (1e-3, "mrad", 1, "nearest"),
    "yaw": (1e-3, "mrad", 1, "nearest"),
    "pitch": (1e-3, "mrad", 1, "decade"),
    "wavefront": (1e-3, "mm", 2, "nearest"),
}
EXACT_DISPLAY = {
    "period": (1.0, ""),
    "separation": (1e-6, "µm"),
    "roll": (1e-3, "mrad"),
    "yaw": (1e-3, "mrad"),
    "pitch": (1e-3, "mrad"),
    "wavefront": (1e-3, "mm"),
    "intensity": (1.0, ""),
    "height": (1e-3, "mm"),
    "mirror": (1e-9, "nm"),
    "common_roll": (1e-3, "mrad"),
}

_SUPERSCRIPT = str.maketrans("-0123456789", "⁻⁰¹²³⁴⁵⁶⁷⁸⁹")


def round_sig(value: float, sig: int, mode: str = "nearest") -> float:
    if value == 0 or not math.isfinite(value):
        return value
    if mode == "decade":
        return 10.0 ** math.ceil(math.log10(abs(value)))
    exponent = math.floor(math.log10(abs(value)))
    quantum = 10.0 ** (exponent - sig + 1)
    ratio = value / quantum
    if mode == "floor":
        steps = math.floor(ratio)
    elif mode == "nearest":
        steps = math.floor(ratio + 0.5)
    else:
        raise ValueError(f"unknown rounding mode {mode!r}")
    return steps * quantum


def format_sig(value: float, sig: int, mode: str = "nearest") -> str:
    """Round to ``sig`` significant digits and print without spurious digits."""
    if math.isinf(value):
        return "unbounded"
    rounded = round_sig(value, sig, mode)
    if rounded == 0:
        return "0"
    exponent = math.floor(math.log10(abs(rounded)))
    if exponent >= 5 or exponent < -4:
        mantissa = rounded / 10.0**exponent
        digits = max(sig - 1, 0)
        return f"{mantissa:.{digits}f}×10{str(exponent).translate(_SUPERSCRIPT)}"
    decimals = max(0, sig - 1 - exponent)
    return f"{rounded:.{decimals}f}"


def requirement_text(key: str, value: float) -> str:
    scale, unit, sig, mode = REQUIREMENT_DISPLAY[key]
    text = format_sig(value / scale, sig, mode)
    return f"{text} {unit}".strip()


def exact_value(key: str, value: float) -> str:
    scale, unit = EXACT_DISPLAY.get(key, (1.0, ""))
    return f"{format_sig(value / scale, 4)} {unit}".strip()


def csv_number(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.8e}"


def write_csv(header: Sequence[str], rows: Iterable[Sequence], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([cell if isinstance(cell, str) else csv_number(cell) for cell in row])


def csv_text(header, rows) -> str:
    buffer = io.StringIO()
    write_csv(header, rows, buffer)
    return buffer.getvalue()


# ---------------------------------------------------------------------------
# budget


def budget_for(cfg: InstrumentConfig) -> AlignmentBudget:
    return compose_budget(cfg.beam, cfg.laser, cfg.geometry, cfg.vibration, cfg.visibility,
                          roll_target=cfg.roll_target, gravity_target=cfg.gravity_target)


def config_header(cfg: InstrumentConfig) -> list[str]:
    return [f"# {path} = {text}" for path, text in describe(cfg).items()]


def budget_table(cfg: InstrumentConfig, budget: AlignmentBudget) -> str:
    lines = ["# resolved configuration (SI)", *config_header(cfg), ""]
    columns = ("Degree of freedom", "Restriction", "Requirement", "Limit", "Configured",
               "Margin", "Pass")
    rows = []
    for c in budget.criteria:
        requirement = requirement_text(c.key, c.limit) if c.key in REQUIREMENT_DISPLAY else ""
        rows.append((c.name, c.restriction, requirement, exact_value(c.key, c.limit),
                     exact_value(c.key, c.configured), exact_value(c.key, c.margin),
                     "pass" if c.passed else "FAIL"))
    widths = [max(len(str(r[i])) for r in (columns, *rows)) for i in range(len(columns))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines.append(fmt.format(*columns))
    lines.append("  ".join("-" * w for w in widths))
    lines.extend(fmt.format(*row) for row in rows)
    for c in budget.criteria:
        if c.note:
            lines.append(f"  {c.name}: {c.note}")
    lines.append("")
    lines.append("Reduction factors")
    for f in budget.factors:
        tag = " (derived)" if f.derived else ""
        lines.append(f"  {f.label:<32} {f.value:.6f}{tag}")
    info = budget.info
    lines.append(f"  {'Coriolis, uncompensated':<32} {info['coriolis_uncompensated']:.6f}"
                 " (derived, oracle-validated; not in product)")
    lines.append(f"Intrinsic visibility V0           {budget.intrinsic_visibility:.6f}")
    lines.append(f"Total visibility                  {budget.total_visibility:.6f}")
    lines.append(f"Optimal common roll               {info['optimal_roll'] * 1e3:.4f} mrad")
    lines.append(f"Coriolis phase                    {info['coriolis_phase']:.4f} rad")
    return "\n".join(lines) + "\n"


BUDGET_CSV_HEADER = ("kind", "key", "description", "limit", "configured", "margin", "pass", "unit")


def budget_csv(budget: AlignmentBudget) -> str:
    rows = []
    for c in budget.criteria:
        rows.append(("criterion", c.key, c.name, c.limit, c.configured, c.margin, c.passed,
                     c.unit))
    for f in budget.factors:
        rows.append(("factor", f.label.replace(" ", "_"), f.label, "", f.value, "", True, ""))
    rows.append(("total", "total_visibility", "V0 x product of factors", "",
                 budget.total_visibility, "", True, ""))
    return csv_text(BUDGET_CSV_HEADER, rows)


# ---------------------------------------------------------------------------
# sweeps


SWEEP_QUANTITIES = (
    "R_roll", "R_grav", "R_vib_independent", "R_vib_common", "total_visibility",
    "roll_limit_rad", "common_roll_limit_rad", "yaw_limit_rad", "pitch_limit_rad",
    "separation_tolerance_m", "max_slits", "wavefront_bound_m", "wavefront_exact_bound_m",
    "all_pass",
)


def sweep_grid(start: float, stop: float, points: int, scale: str = "linear") -> np.ndarray:
    if points < 2:
        raise ValueError("a sweep needs at least 2 points")
    if not start < stop:
        raise ValueError("sweep start must be below stop")
    if scale == "linear":
        return np.linspace(start, stop, points)
    if scale == "log":
        if start <= 0:
            raise ValueError("a log sweep needs a positive start")
        return np.geomspace(start, stop, points)
    raise ValueError(f"unknown sweep scale {scale!r}")


def sweep_rows(cfg: InstrumentConfig, path: str, grid: Sequence[float]):
    for value in grid:
        b = budget_for(with_override(cfg, path, float(value)))
        c = {row.key: row for row in b.criteria}
        yield (float(value), *(f.value for f in b.factors), b.total_visibility,
               c["roll"].limit, c["common_roll"].limit, c["yaw"].limit, c["pitch"].limit,
               c["separation"].limit, c["period"].limit, b.wavefront.conservative,
               b.wavefront.exact, b.all_pass)


def sweep_csv(cfg: InstrumentConfig, path: str, grid: Sequence[float]) -> str:
    return csv_text((path, *SWEEP_QUANTITIES), sweep_rows(cfg, path, grid))


# ---------------------------------------------------------------------------
# figure data


FIG2_POINTS = 81
FIG3_HEIGHTS = (0.5e-3, 1e-3, 2e-3)
FIG3_SPREADS = (0.01, 0.05, 0.1)
FIG4_VELOCITY = 90.0
FIG4_AMPLITUDES = (1e-9, 5e-9, 10e-9, 20e-9)


def fig2_distances(cfg: InstrumentConfig) -> dict[str, float]:
    z_r = rayleigh_length(cfg.laser.waist_x, cfg.laser.wavelength)
    fig = cfg.figures
    return {
        "near": 0.0 if fig.z0_near is None else fig.z0_near,
        "mid": z_r / 2 if fig.z0_mid is None else fig.z0_mid,
        "far": z_r if fig.z0_far is None else fig.z0_far,
    }


def fig2_grid(cfg: InstrumentConfig, z0: float):
    """Intensity on a rectangular (x, z) window two wavelengths deep around ``z0``."""
    laser = cfg.laser
    w = gaussian_state_at(laser.waist_x, laser.wavelength, z0).waist_at_z
    x = np.linspace(-2 * w, 2 * w, FIG2_POINTS)
    z_lo = max(z0 - laser.wavelength, 0.0)
    z = np.linspace(z_lo, z_lo + 2 * laser.wavelength, FIG2_POINTS)
    xx, zz = np.meshgrid(x, z, indexing="ij")
    return xx, zz, standing_wave_intensity(laser, xx, zz)


def fig3_roll(cfg: InstrumentConfig):
    d = cfg.period
    thetas = np.linspace(0.0, 2e-4, 201)
    header = ("theta_roll_rad", *(f"R_roll_H_{h * 1e3:g}mm" for h in FIG3_HEIGHTS))
    beams = [dataclasses.replace(cfg.beam, height=h) for h in FIG3_HEIGHTS]
    rows = [(t, *(roll_reduction(t, b, d).value for b in beams)) for t in thetas]
    return header, rows


def fig3_gravity(cfg: InstrumentConfig):
    d = cfg.period
    velocities = np.linspace(30.0, 300.0, 271)
    header = ("velocity_m_s", *(f"theta_g_max_rad_spread_{s:g}" for s in FIG3_SPREADS))
    rows = []
    for v in velocities:
        row = [v]
        for s in FIG3_SPREADS:
            beam = dataclasses.replace(cfg.beam, velocity=v, velocity_sigma=s * v)
            row.append(max_gravity_roll(cfg.gravity_target, beam, cfg.geometry, d).angle)
        rows.append(row)
    return header, rows


def fig4_common(cfg: InstrumentConfig):
    d = cfg.period
    beam = dataclasses.replace(cfg.beam, velocity=FIG4_VELOCITY, velocity_sigma=0.0)
    freqs = np.linspace(0.0, 400.0, 401)
    header = ("frequency_hz", *(f"R_common_A_{a * 1e9:g}nm" for a in FIG4_AMPLITUDES))
    rows = []
    for f in freqs:
        row = [f]
        for a in FIG4_AMPLITUDES:
            vib = VibrationSpec(common_amp=a, common_omega=2 * math.pi * f)
            row.append(common_mode_vibration_reduction(vib, beam, cfg.geometry, d).value)
        rows.append(row)
    return header, rows


def fig4_independent(cfg: InstrumentConfig):
    d = cfg.period
    amps = np.linspace(0.0, 60e-9, 121)
    header = ("amplitude_m", "R_g1_only", "R_g2_only", "R_g3_only", "R_all_equal")
    rows = []
    for a in amps:
        cases = (VibrationSpec(amp_g1=a), VibrationSpec(amp_g2=a), VibrationSpec(amp_g3=a),
                 VibrationSpec(amp_g1=a, amp_g2=a, amp_g3=a))
        rows.append((a, *(independent_vibration_reduction(v, d).value for v in cases)))
    return header, rows


def write_figures(cfg: InstrumentConfig, which: str, outdir: Path) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name, header, rows):
        path = outdir / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            write_csv(header, rows, fh)
        written.append(path)

    if which == "fig2":
        for label, z0 in fig2_distances(cfg).items():
            xx, zz, intensity = fig2_grid(cfg, z0)
            emit(f"fig2_z0_{label}.csv", ("x_m", "z_m", "intensity"),
                 zip(xx.ravel(), zz.ravel(), intensity.ravel()))
    elif which == "fig3":
        emit("fig3_roll.csv", *fig3_roll(cfg))
        emit("fig3_gravity.csv", *fig3_gravity(cfg))
    elif which == "fig4":
        emit("fig4_common.csv", *fig4_common(cfg))
        emit("fig4_independent.csv", *fig4_independent(cfg))
    else:
        raise ValueError(f"unknown figure {which!r}")
    return written


# ---------------------------------------------------------------------------
# oracle validation


@dataclass(frozen=True)
class OracleRow:
    factor: str
    result: mc.OracleResult


def _oracle_grav(cfg, ocfg):
    theta = cfg.geometry.resolved_common_roll(cfg.beam.velocity) - optimal_roll(
        cfg.beam, cfg.geometry)
    return mc.oracle_gravity(theta, cfg.beam, cfg.geometry, cfg.period, ocfg)


def _oracle_coriolis(cfg, ocfg):
    return mc.oracle_coriolis(cfg.beam, cfg.geometry, cfg.period, ocfg)


def _oracle_vib_indep(cfg, ocfg):
    return mc.oracle_independent_vibrations(cfg.vibration, cfg.period, ocfg)


def _oracle_vib_common(cfg, ocfg):
    return mc.oracle_common_mode(cfg.vibration, cfg.beam, cfg.geometry, cfg.period, ocfg)


ORACLE_FACTORS: dict[str, Callable] = {
    "grav": _oracle_grav,
    "coriolis": _oracle_coriolis,
    "vib-indep": _oracle_vib_indep,
    "vib-common": _oracle_vib_common,
}
HARD_FAIL_SIGMA = 5.0


def run_oracles(cfg: InstrumentConfig, factors: Sequence[str],
                ocfg: mc.OracleConfig) -> list[OracleRow]:
    return [OracleRow(name, ORACLE_FACTORS[name](cfg, ocfg)) for name in factors]


def oracle_table(rows: Sequence[OracleRow], ocfg: mc.OracleConfig) -> str:
    lines = [f"# generator: {mc.GENERATOR_NAME}",
             f"# seed = {ocfg.seed}, samples = {ocfg.sample_count}, chunk = {ocfg.chunk_size}",
             f"{'factor':<11} {'analytic':>14} {'monte carlo':>14} {'std error':>11} "
             f"{'sigma':>7}  status"]
    for row in rows:
        r = row.result
        status = "FAIL" if r.sigma_distance > HARD_FAIL_SIGMA else (
            "ok" if r.sigma_distance < 3 else "marginal")
        lines.append(f"{row.factor:<11} {r.analytic_reference:>14.8f} {r.estimate:>14.8f} "
                     f"{r.standard_error:>11.3e} {r.sigma_distance:>7.2f}  {status}")
        if r.truncation_fraction:
            lines.append(f"  truncated velocity draws: {r.truncation_fraction:.3e}")
    return "\n".join(lines) + "\n"
