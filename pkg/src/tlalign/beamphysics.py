"""Matter-wave kinematics and focused standing-wave optics.

Coordinates for the grating laser: ``z`` is the distance from the retro-reflecting
mirror along the laser axis (the grating vector), ``x`` the transverse offset from
the laser axis along the cluster beam, i.e. the direction of the tight waist
``waist_x``.  The focus of both the incident and the reflected beam sits on the
mirror surface.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from tlalign.constants import ATOMIC_MASS_UNIT, PLANCK, SPEED_OF_LIGHT

ROOT_RTOL = 1e-12
_MAX_NARROW_SPREAD = 0.5


def _require_positive(**values):
    for name, value in values.items():
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value!r}")


def _require_nonnegative(**values):
    for name, value in values.items():
        if not value >= 0:
            raise ValueError(f"{name} must be non-negative, got {value!r}")


@dataclass(frozen=True)
class ClusterBeam:
    """Particle beam entering the interferometer.

    Attributes
    ----------
    mass : float
        Particle mass [kg].  Use :meth:`from_amu` for masses in u.
    velocity : float
        Mean forward velocity ``v_x`` [m/s].
    velocity_sigma : float
        Gaussian 1-sigma velocity spread [m/s].
    height, width : float
        Beam height ``H`` and width ``b`` [m].
    polarizability : float, optional
        Optical polarizability, SI units.  Only needed for phase scaling.
    absorption_cross_section : float, optional
        [m^2].  Echoed into reports, not used in any formula.
    """

    mass: float
    velocity: float
    velocity_sigma: float = 0.0
    height: float = 1e-3
    width: float = 1e-3
    polarizability: float | None = None
    absorption_cross_section: float | None = None

    def __post_init__(self):
        _require_positive(mass=self.mass, velocity=self.velocity,
                          height=self.height, width=self.width)
        _require_nonnegative(velocity_sigma=self.velocity_sigma)
        if self.velocity_sigma / self.velocity >= _MAX_NARROW_SPREAD:
            raise ValueError(
                f"velocity_sigma {self.velocity_sigma!r} m/s is not a narrow spread "
                f"(sigma/v must stay below {_MAX_NARROW_SPREAD})")

    @classmethod
    def from_amu(cls, mass_u: float, velocity: float, **kwargs) -> "ClusterBeam":
        return cls(mass=mass_u * ATOMIC_MASS_UNIT, velocity=velocity, **kwargs)

    @property
    def relative_spread(self) -> float:
        return self.velocity_sigma / self.velocity


@dataclass(frozen=True)
class GratingLaser:
    """Retro-reflected UV laser forming one standing-wave grating.

    ``waist_x`` is the tight focus along the cluster beam, ``waist_y`` the
    vertical waist.  ``pass_distance`` is how far from the mirror surface the
    cluster beam crosses the standing wave.
    """

    wavelength: float = 266e-9
    linewidth: float = 20e6
    power: float = 1.0
    power_instability: float = 0.0
    waist_x: float = 15e-6
    waist_y: float = 1.5e-3
    pass_distance: float = 1e-3
    mirror_deviation: float = 0.0

    def __post_init__(self):
        _require_positive(wavelength=self.wavelength, waist_x=self.waist_x,
                          waist_y=self.waist_y)
        _require_nonnegative(linewidth=self.linewidth, power=self.power,
                             power_instability=self.power_instability,
                             pass_distance=self.pass_distance,
                             mirror_deviation=self.mirror_deviation)

    @property
    def period(self) -> float:
        return self.wavelength / 2

    @property
    def base_frequency(self) -> float:
        return SPEED_OF_LIGHT / self.wavelength

    @property
    def wavenumber(self) -> float:
        return 2 * math.pi / self.wavelength


@dataclass(frozen=True)
class GaussianBeamState:
    waist_at_z: float
    curvature_radius: float
    gouy_phase: float
    rayleigh_length: float


@dataclass(frozen=True)
class WavefrontBound:
    """Largest allowed distance of the cluster beam from the grating mirror.

    ``conservative`` (the Rayleigh length) gates pass/fail; ``exact`` solves the
    node-distortion inequality with equality; ``small_angle`` is its closed form
    ``d * z_R**2 / w0**2``.
    """

    conservative: float
    exact: float
    small_angle: float = field(default=math.nan)


def de_broglie_wavelength(beam: ClusterBeam) -> float:
    return PLANCK / (beam.mass * beam.velocity)


def talbot_length(period: float, lambda_db: float) -> float:
    _require_positive(period=period, lambda_db=lambda_db)
    return period**2 / lambda_db


def rayleigh_length(waist0: float, wavelength: float) -> float:
    _require_positive(waist0=waist0, wavelength=wavelength)
    return math.pi * waist0**2 / wavelength


def gaussian_state_at(waist0: float, wavelength: float, z: float) -> GaussianBeamState:
    """Paraxial Gaussian beam parameters a distance ``z`` from the focus."""
    if z < 0:
        raise ValueError(f"z must be non-negative, got {z!r}")
    z_r = rayleigh_length(waist0, wavelength)
    curvature = math.inf if z == 0 else z * (1 + (z_r / z) ** 2)
    return GaussianBeamState(
        waist_at_z=waist0 * math.sqrt(1 + (z / z_r) ** 2),
        curvature_radius=curvature,
        gouy_phase=math.atan(z / z_r),
        rayleigh_length=z_r,
    )


def _inverse_curvature(z, z_r):
    # 1/R(z) written so that z = 0 gives a flat wavefront without division by zero
    return z / (z**2 + z_r**2)


def standing_wave_phase(laser: GratingLaser, x, z, *, z_ref=None):
    """Carrier phase of the standing wave; nodes sit where it is a multiple of pi.

    The cylindrical lens focuses along x only, so each transverse axis
    contributes half of the usual Gouy phase.  Passing ``z_ref`` freezes the
    curvature and Gouy terms at that distance (local window around ``z_ref``).
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    k = laser.wavenumber
    zr_x = rayleigh_length(laser.waist_x, laser.wavelength)
    zr_y = rayleigh_length(laser.waist_y, laser.wavelength)
    zs = z if z_ref is None else np.asarray(z_ref, dtype=float)
    gouy = 0.5 * (np.arctan(zs / zr_x) + np.arctan(zs / zr_y))
    return k * z + 0.5 * k * x**2 * _inverse_curvature(zs, zr_x) - gouy


def standing_wave_intensity(laser: GratingLaser, x, z, *, z_ref=None):
    """Relative intensity |E_in + E_reflected|^2 of the standing light wave.

    The mirror is a lossless reflector with a pi phase jump, so z = 0 is a node
    plane.  Normalized such that the envelope on axis at the mirror equals 1,
    i.e. the first antinode has intensity 1 up to the Gouy drift.  With
    ``z_ref`` the envelope is frozen as well and the result is exactly periodic
    in z with period wavelength/2.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("z must be measured from the mirror surface (z >= 0)")
    zr_x = rayleigh_length(laser.waist_x, laser.wavelength)
    zr_y = rayleigh_length(laser.waist_y, laser.wavelength)
    zs = z if z_ref is None else np.asarray(z_ref, dtype=float)
    wx2 = laser.waist_x**2 * (1 + (zs / zr_x) ** 2)
    amplitude2 = (1 / np.sqrt(1 + (zs / zr_x) ** 2)) / np.sqrt(1 + (zs / zr_y) ** 2)
    envelope = amplitude2 * np.exp(-2 * x**2 / wx2)
    return envelope * np.sin(standing_wave_phase(laser, x, z, z_ref=z_ref)) ** 2


def node_position(laser: GratingLaser, order: int, x: float = 0.0) -> float:
    """Distance from the mirror of node plane ``order`` at transverse offset ``x``."""
    if order == 0:
        return 0.0
    target = order * math.pi

    def f(z):
        return float(standing_wave_phase(laser, x, z)) - target

    quarter = laser.wavelength / 4
    guess = target / laser.wavenumber
    hi = guess + quarter
    while f(hi) < 0:
        hi += quarter
    lo = max(hi - 2 * quarter, 0.0)
    while f(lo) > 0:
        lo = max(lo - quarter, 0.0)
    return brentq(f, lo, hi, xtol=1e-18, rtol=ROOT_RTOL)


def nearest_node_order(laser: GratingLaser, z0: float) -> int:
    """Order of the on-axis node closest to ``z0``; never the mirror plane itself."""
    phase = float(standing_wave_phase(laser, 0.0, z0))
    return max(1, round(phase / math.pi))


def node_plane_sag(laser: GratingLaser, z0: float, x) -> np.ndarray:
    """How far the node plane nearest ``z0`` bends toward the mirror at offsets ``x``."""
    order = nearest_node_order(laser, z0)
    on_axis = node_position(laser, order, 0.0)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    return np.array([on_axis - node_position(laser, order, xi) for xi in xs])


def wavefront_distortion(laser: GratingLaser, z: float) -> float:
    """Left-hand side of the node-distortion criterion, w(z) tan(arcsin(w/R))."""
    state = gaussian_state_at(laser.waist_x, laser.wavelength, z)
    if math.isinf(state.curvature_radius):
        return 0.0
    return state.waist_at_z * math.tan(math.asin(state.waist_at_z / state.curvature_radius))


def wavefront_max_pass_distance(laser: GratingLaser) -> WavefrontBound:
    d = laser.period
    z_r = rayleigh_length(laser.waist_x, laser.wavelength)

    def excess(z):
        return wavefront_distortion(laser, z) - d

    hi = z_r
    while excess(hi) < 0:
        hi *= 2
    exact = brentq(excess, 0.0, hi, xtol=1e-18, rtol=ROOT_RTOL)
    return WavefrontBound(conservative=z_r, exact=exact,
                          small_angle=d * z_r**2 / laser.waist_x**2)
