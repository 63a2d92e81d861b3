"""Alignment criteria and contrast-reduction factors for a three-grating interferometer.

Reduction factors from independent perturbation channels multiply.  The common
roll of all gratings against gravity is measured relative to the angle that
cancels the Coriolis phase for the mean beam velocity, so the gravity factor in
a budget is evaluated on the deviation from that optimum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import j0

from tlalign.beamphysics import (
    ROOT_RTOL,
    ClusterBeam,
    GratingLaser,
    WavefrontBound,
    wavefront_max_pass_distance,
)
from tlalign.constants import (
    EARTH_ROTATION,
    INTENSITY_STABILITY_LIMIT,
    MIRROR_FLATNESS_FRACTION,
    SLIT_SAFETY_FACTOR,
    STANDARD_GRAVITY,
    VIENNA_LATITUDE,
    YAW_SAFETY_FACTOR,
)


@dataclass(frozen=True)
class InterferometerGeometry:
    """Grating separation, misalignment angles and the lab frame.

    ``common_roll`` of ``None`` means the gratings are rolled to the
    Coriolis-compensating angle for the beam's mean velocity.
    """

    separation: float = 1.0
    separation_error: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0
    common_roll: float | None = None
    latitude: float = VIENNA_LATITUDE
    gravity: float = STANDARD_GRAVITY
    earth_rotation: float = EARTH_ROTATION

    def __post_init__(self):
        if not self.separation > 0:
            raise ValueError(f"separation must be positive, got {self.separation!r}")
        if not self.gravity > 0:
            raise ValueError(f"gravity must be positive, got {self.gravity!r}")
        if not self.earth_rotation >= 0:
            raise ValueError("earth_rotation must be non-negative")
        if not self.separation_error >= 0:
            raise ValueError("separation_error must be non-negative")
        angles = dict(roll=self.roll, pitch=self.pitch, yaw=self.yaw,
                      latitude=self.latitude)
        if self.common_roll is not None:
            angles["common_roll"] = self.common_roll
        for name, angle in angles.items():
            if not abs(angle) < math.pi / 2:
                raise ValueError(f"{name} must lie inside (-pi/2, pi/2), got {angle!r}")

    @property
    def vertical_rotation(self) -> float:
        """Earth-rotation component along the local vertical."""
        return self.earth_rotation * math.sin(self.latitude)

    def resolved_common_roll(self, velocity: float) -> float:
        if self.common_roll is None:
            return -self.vertical_rotation * velocity / self.gravity
        return self.common_roll


@dataclass(frozen=True)
class VibrationSpec:
    """Lateral grating vibration amplitudes [m] and common-mode angular frequency [rad/s]."""

    amp_g1: float = 0.0
    amp_g2: float = 0.0
    amp_g3: float = 0.0
    common_amp: float = 0.0
    common_omega: float = 0.0

    def __post_init__(self):
        for name in ("amp_g1", "amp_g2", "amp_g3", "common_amp", "common_omega"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class ReductionFactor:
    value: float
    label: str
    derived: bool = False

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"reduction factor {self.label!r} outside [0, 1]: {self.value!r}")


@dataclass(frozen=True)
class Check:
    passed: bool
    limit: float
    value: float

    @property
    def margin(self) -> float:
        return self.limit - self.value


@dataclass(frozen=True)
class RollBound:
    angle: float
    constrained: bool


@dataclass(frozen=True)
class ScanFit:
    """Visibility of a fringe scan from a least-squares sinusoid fit.

    ``raw_visibility`` is (max - min) / (max + min) of the samples themselves.
    """

    visibility: float
    raw_visibility: float
    mean: float
    phase: float


# ---------------------------------------------------------------------------
# fringe visibility


def visibility_from_scan(scan, period: float) -> ScanFit:
    """Fit ``S(x) = S0 (1 + V sin(2 pi x / d + phi))`` to a scan of (position, counts)."""
    data = np.asarray(scan, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("scan must be a sequence of (position, counts) pairs")
    x, counts = data[:, 0], data[:, 1]
    n = len(x)
    if n < 8:
        raise ValueError(f"a scan needs at least 8 samples, got {n}")
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    if not np.any(counts > 0):
        raise ValueError("scan is all zero")
    # n samples on a uniform grid cover span * n / (n - 1)
    coverage = (x.max() - x.min()) * n / (n - 1)
    if coverage < period * (1 - 1e-9):
        raise ValueError(f"scan covers {coverage / period:.3f} periods, need at least one")

    k = 2 * math.pi / period
    design = np.column_stack([np.ones(n), np.sin(k * x), np.cos(k * x)])
    (offset, a_sin, a_cos), *_ = np.linalg.lstsq(design, counts, rcond=None)
    amplitude = math.hypot(a_sin, a_cos)
    visibility = min(amplitude / offset, 1.0) if offset > 0 else 0.0
    s_max, s_min = counts.max(), counts.min()
    return ScanFit(
        visibility=visibility,
        raw_visibility=(s_max - s_min) / (s_max + s_min),
        mean=offset,
        phase=math.atan2(a_cos, a_sin),
    )


# ---------------------------------------------------------------------------
# static alignment criteria


def max_slit_count(laser: GratingLaser) -> float:
    """Largest number of illuminated slits before the period error washes out the fringes.

    The relative period error equals the relative laser linewidth.
    """
    if laser.linewidth == 0:
        return math.inf
    return laser.base_frequency / (SLIT_SAFETY_FACTOR * laser.linewidth)


def intensity_stability_check(laser: GratingLaser) -> Check:
    return Check(passed=laser.power_instability < INTENSITY_STABILITY_LIMIT,
                 limit=INTENSITY_STABILITY_LIMIT, value=laser.power_instability)


def grating_phase_scale(beam: ClusterBeam, laser: GratingLaser, norm: float = 1.0) -> float:
    """Relative optical phase imprinted by a grating, ``norm * P * alpha / (v w_y)``.

    Only meaningful for comparisons; the longitudinal waist cancels because the
    transit time scales with it.
    """
    if beam.polarizability is None:
        raise ValueError("grating phase scaling needs the beam polarizability")
    return norm * laser.power * beam.polarizability / (beam.velocity * laser.waist_y)


def yaw_limit(laser: GratingLaser) -> float:
    return math.atan(laser.period / (4 * laser.waist_x)) / YAW_SAFETY_FACTOR


def illuminated_slits(width: float, period: float) -> int:
    return math.floor(width / period)


def separation_tolerance(n_slits: float, geometry: InterferometerGeometry) -> float:
    if n_slits < 1:
        raise ValueError(f"need at least one illuminated slit, got {n_slits!r}")
    return geometry.separation / n_slits


def pitch_limit(laser: GratingLaser, delta_l_allowed: float) -> float:
    return delta_l_allowed / laser.waist_y


def mirror_flatness_check(surface_deviation: float, wavelength: float) -> Check:
    if surface_deviation < 0:
        raise ValueError("surface deviation must be non-negative")
    limit = MIRROR_FLATNESS_FRACTION * wavelength
    return Check(passed=surface_deviation < limit, limit=limit, value=surface_deviation)


# ---------------------------------------------------------------------------
# roll


def _sinc(x: float) -> float:
    return 1.0 if x == 0 else math.sin(x) / x


def roll_reduction(theta_roll: float, beam: ClusterBeam, period: float) -> ReductionFactor:
    x = 2 * math.pi * theta_roll * beam.height / period
    return ReductionFactor(abs(_sinc(x)), "grating roll")


def roll_limit(r_target: float, beam: ClusterBeam, period: float) -> float:
    """Relative roll angle at which the roll factor drops to ``r_target``."""
    if not 0 < r_target < 1:
        raise ValueError(f"target reduction must lie in (0, 1), got {r_target!r}")
    # sinc decreases monotonically from 1 to 0 on [0, pi)
    x = brentq(lambda u: _sinc(u) - r_target, 0.0, math.pi, xtol=1e-15, rtol=ROOT_RTOL)
    return x * period / (2 * math.pi * beam.height)


# ---------------------------------------------------------------------------
# gravity and Coriolis


def _gravity_dephasing_argument(theta_g, beam, geometry, period):
    return (math.pi * geometry.gravity * math.sin(theta_g) * geometry.separation**2
            * beam.velocity_sigma / (beam.velocity**3 * period))


def gravity_roll_reduction(theta_g: float, beam: ClusterBeam,
                           geometry: InterferometerGeometry, period: float) -> ReductionFactor:
    """Contrast left after averaging the gravitational fringe shift over the velocity spread."""
    arg = _gravity_dephasing_argument(theta_g, beam, geometry, period)
    return ReductionFactor(math.exp(-8 * arg**2), "common roll vs gravity")


def max_gravity_roll(r_target: float, beam: ClusterBeam,
                     geometry: InterferometerGeometry, period: float) -> RollBound:
    """Largest common roll compatible with a gravity factor of at least ``r_target``."""
    if not 0 < r_target < 1:
        raise ValueError(f"target reduction must lie in (0, 1), got {r_target!r}")
    if beam.velocity_sigma == 0:
        return RollBound(math.pi / 2, constrained=False)
    arg = (math.sqrt(-math.log(r_target) / 8) * period * beam.velocity**3
           / (math.pi * geometry.gravity * geometry.separation**2 * beam.velocity_sigma))
    if arg >= 1:
        return RollBound(math.pi / 2, constrained=False)
    return RollBound(math.asin(arg), constrained=True)


def gravity_phase(theta_g: float, velocity, geometry: InterferometerGeometry, period: float):
    """Fringe phase from the fall across the gratings, ``k g sin(theta) L^2 / v^2``."""
    k = 2 * math.pi / period
    v = np.asarray(velocity, dtype=float)
    return k * geometry.gravity * math.sin(theta_g) * geometry.separation**2 / v**2


def coriolis_phase(beam: ClusterBeam, geometry: InterferometerGeometry, period: float) -> float:
    k = 2 * math.pi / period
    return k * 2 * geometry.vertical_rotation * geometry.separation**2 / beam.velocity


def coriolis_reduction(beam: ClusterBeam, geometry: InterferometerGeometry,
                       period: float) -> ReductionFactor:
    """Velocity-spread dephasing of the uncompensated Coriolis phase.

    First-order expansion in sigma_v/v, the same approximation that gives the
    gravity factor.  Validated against Monte Carlo averaging only while
    ``phase * (sigma_v/v)**2`` stays small.
    """
    spread = coriolis_phase(beam, geometry, period) * beam.relative_spread
    return ReductionFactor(math.exp(-spread**2 / 2), "Coriolis velocity dephasing", derived=True)


def optimal_roll(beam: ClusterBeam | float, geometry: InterferometerGeometry) -> float:
    """Common roll whose gravity phase cancels the Coriolis phase to first order in v.

    ``beam`` may also be a bare velocity in m/s.
    """
    velocity = getattr(beam, "velocity", beam)
    return -geometry.vertical_rotation * velocity / geometry.gravity


def combined_roll_phase(theta: float, velocity, geometry: InterferometerGeometry,
                        period: float):
    """Gravity plus Coriolis fringe phase for common roll ``theta`` at velocity ``velocity``."""
    k = 2 * math.pi / period
    v = np.asarray(velocity, dtype=float)
    return (k * geometry.separation**2
            * (geometry.gravity * math.sin(theta) + 2 * geometry.vertical_rotation * v) / v**2)


# ---------------------------------------------------------------------------
# vibrations


def independent_vibration_reduction(vib: VibrationSpec, period: float) -> ReductionFactor:
    """Contrast left by uncorrelated random-phase vibrations of the three gratings.

    The middle grating enters the phase with weight 2.
    """
    k = 2 * math.pi / period
    value = abs(j0(k * vib.amp_g1)) * abs(j0(k * vib.amp_g3)) * abs(j0(2 * k * vib.amp_g2))
    return ReductionFactor(float(value), "independent grating vibrations")


def common_mode_vibration_reduction(vib: VibrationSpec, beam: ClusterBeam,
                                    geometry: InterferometerGeometry,
                                    period: float) -> ReductionFactor:
    half_transit_phase = vib.common_omega * geometry.separation / (2 * beam.velocity)
    arg = 8 * math.pi * vib.common_amp / period * math.sin(half_transit_phase) ** 2
    return ReductionFactor(float(abs(j0(arg))), "common-mode vibration")


# ---------------------------------------------------------------------------
# budget


@dataclass(frozen=True)
class Criterion:
    """One row of the alignment table; ``passed`` is the strict ``configured < limit``."""

    key: str
    name: str
    restriction: str
    limit: float
    configured: float
    unit: str
    passed: bool
    note: str = ""

    @property
    def margin(self) -> float:
        return self.limit - self.configured


@dataclass(frozen=True)
class AlignmentBudget:
    criteria: tuple[Criterion, ...]
    factors: tuple[ReductionFactor, ...]
    intrinsic_visibility: float
    total_visibility: float
    wavefront: WavefrontBound
    info: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.criteria)

    def criterion(self, key: str) -> Criterion:
        for c in self.criteria:
            if c.key == key:
                return c
        raise KeyError(key)


def _row(key, name, restriction, limit, configured, unit, note=""):
    return Criterion(key=key, name=name, restriction=restriction, limit=limit,
                     configured=configured, unit=unit, passed=configured < limit, note=note)


def total_visibility(v0: float, factors: Sequence[ReductionFactor]) -> float:
    # sorted so the rounding does not depend on the order of the factors
    return v0 * math.prod(sorted(f.value for f in factors))


def compose_budget(beam: ClusterBeam, laser: GratingLaser, geometry: InterferometerGeometry,
                   vib: VibrationSpec, v0: float = 1.0, *, roll_target: float = 0.9,
                   gravity_target: float = 0.9) -> AlignmentBudget:
    """Evaluate every alignment criterion and multiply the reduction factors."""
    if not 0 <= v0 <= 1:
        raise ValueError(f"intrinsic visibility must lie in [0, 1], got {v0!r}")
    d = laser.period
    n_slits = illuminated_slits(beam.width, d)
    delta_l = separation_tolerance(n_slits, geometry)
    wavefront = wavefront_max_pass_distance(laser)
    stability = intensity_stability_check(laser)
    flatness = mirror_flatness_check(laser.mirror_deviation, laser.wavelength)
    theta0 = optimal_roll(beam, geometry)
    theta_g = geometry.resolved_common_roll(beam.velocity)
    roll_dev = theta_g - theta0
    grav_bound = max_gravity_roll(gravity_target, beam, geometry, d)

    criteria = (
        _row("period", "Grating period", "N < d/(10 Δd)", max_slit_count(laser), n_slits, "slits"),
        _row("separation", "Grating separation", "ΔL/L < 1/N", delta_l,
             geometry.separation_error, "m"),
        _row("roll", "Grating roll", f"R_roll > {roll_target:g}",
             roll_limit(roll_target, beam, d), abs(geometry.roll), "rad"),
        _row("yaw", "Grating yaw", "10·ΔΦ < d/(4 w_x)", yaw_limit(laser), abs(geometry.yaw), "rad"),
        _row("pitch", "Grating pitch", "ΔΘ·w_y < ΔL", pitch_limit(laser, delta_l),
             abs(geometry.pitch), "rad"),
        _row("wavefront", "Wave front shape", "w(z)²/R(z) ≪ d", wavefront.conservative,
             laser.pass_distance, "m",
             note=f"node-distortion bound {wavefront.exact:.4g} m"),
        _row("intensity", "Grating intensity", "ΔI/I < 0.1", stability.limit, stability.value, ""),
        _row("height", "Beam height", "H < w_y", laser.waist_y, beam.height, "m"),
        _row("mirror", "Mirror flatness", "Δx < λ/10", flatness.limit, flatness.value, "m"),
        _row("common_roll", "Common roll vs gravity", f"R_grav > {gravity_target:g}",
             grav_bound.angle, abs(roll_dev), "rad",
             note=("relative to optimal roll " f"{theta0:.4g} rad"
                   + ("" if grav_bound.constrained else "; unconstrained"))),
    )
    factors = (
        roll_reduction(geometry.roll, beam, d),
        gravity_roll_reduction(roll_dev, beam, geometry, d),
        independent_vibration_reduction(vib, d),
        common_mode_vibration_reduction(vib, beam, geometry, d),
    )
    info = {
        "optimal_roll": theta0,
        "common_roll": theta_g,
        "coriolis_phase": coriolis_phase(beam, geometry, d),
        "coriolis_uncompensated": coriolis_reduction(beam, geometry, d).value,
    }
    return AlignmentBudget(
        criteria=criteria,
        factors=factors,
        intrinsic_visibility=v0,
        total_visibility=total_visibility(v0, factors),
        wavefront=wavefront,
        info=info,
    )
