"""Brute-force Monte Carlo phase averaging for every analytic reduction factor.

Each estimate is ``|<exp(i phi)>|`` over sampled phases.  Work is split into
fixed-size chunks; chunk ``i`` always draws from the Philox substream
``SeedSequence(seed, spawn_key=(i,))`` and chunk partial sums are combined with
``math.fsum`` (exactly rounded, hence order-free), so results are bit-identical
for any worker count.

The standard error is the delete-one jackknife over individual samples,
computed in a second pass that regenerates each chunk.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr

from tlalign.alignment import (
    InterferometerGeometry,
    VibrationSpec,
    common_mode_vibration_reduction,
    coriolis_reduction,
    gravity_phase,
    gravity_roll_reduction,
    independent_vibration_reduction,
)
from tlalign.beamphysics import ClusterBeam

GENERATOR_NAME = f"numpy {np.__version__} Philox4x64-10, SeedSequence spawn_key=(chunk,)"
MAX_TRUNCATION = 1e-6
# sigma distances are measured against at least this error: the summed
# phasors carry rounding errors of this order even when the phases are exact
ROUNDOFF_FLOOR = 1e-12
THREADS_ENV = "TL_ALIGN_THREADS"

PhaseSampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True)
class OracleConfig:
    sample_count: int = 10**6
    seed: int = 42
    chunk_size: int = 2**16
    workers: int | None = None
    velocity_distribution: str = "gaussian"

    def __post_init__(self):
        if self.sample_count < 1000:
            raise ValueError(f"sample_count must be at least 1000, got {self.sample_count}")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.velocity_distribution != "gaussian":
            raise ValueError(f"unsupported velocity distribution {self.velocity_distribution!r}")


@dataclass(frozen=True)
class OracleResult:
    estimate: float
    standard_error: float
    analytic_reference: float
    sample_count: int
    truncation_fraction: float = 0.0
    generator: str = GENERATOR_NAME

    @property
    def sigma_distance(self) -> float:
        diff = abs(self.estimate - self.analytic_reference)
        if diff == 0:
            return 0.0
        return diff / max(self.standard_error, ROUNDOFF_FLOOR)


def worker_count(requested: int | None = None) -> int:
    n = requested or os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _chunk_sizes(cfg: OracleConfig) -> list[int]:
    full, rest = divmod(cfg.sample_count, cfg.chunk_size)
    return [cfg.chunk_size] * full + ([rest] if rest else [])


def phase_average(sampler: PhaseSampler, cfg: OracleConfig) -> tuple[float, float]:
    """Return ``(|<exp(i phi)>|, jackknife standard error)`` for phases drawn by ``sampler``."""
    sizes = _chunk_sizes(cfg)
    n = cfg.sample_count

    def phasors(index):
        phi = sampler(_chunk_rng(cfg.seed, index), sizes[index])
        return np.cos(phi), np.sin(phi)

    def first_pass(index):
        c, s = phasors(index)
        return float(np.sum(c)), float(np.sum(s))

    with ThreadPoolExecutor(max_workers=worker_count(cfg.workers)) as pool:
        sums = list(pool.map(first_pass, range(len(sizes))))
        total_c = math.fsum(p[0] for p in sums)
        total_s = math.fsum(p[1] for p in sums)
        estimate = math.hypot(total_c, total_s) / n

        def second_pass(index):
            c, s = phasors(index)
            leave_one_out = np.hypot(total_c - c, total_s - s) / (n - 1)
            dev = leave_one_out - estimate
            return float(np.sum(dev)), float(np.sum(dev * dev))

        devs = list(pool.map(second_pass, range(len(sizes))))
    sum_dev = math.fsum(p[0] for p in devs)
    sum_dev2 = math.fsum(p[1] for p in devs)
    variance = (n - 1) / n * max(sum_dev2 - sum_dev**2 / n, 0.0)
    return estimate, math.sqrt(variance)


def _truncation_probability(beam: ClusterBeam) -> float:
    return float(ndtr(-beam.velocity / beam.velocity_sigma))


def velocity_sampler(beam: ClusterBeam, phase_fn: Callable[[np.ndarray], np.ndarray],
                     rejected: list | None = None) -> PhaseSampler:
    """Phases ``phase_fn(v)`` for v ~ Normal(v, sigma_v) truncated to v > 0 by rejection."""

    def sample(rng, size):
        v = rng.normal(beam.velocity, beam.velocity_sigma, size)
        bad = v <= 0
        while np.any(bad):
            if rejected is not None:
                rejected.append(int(bad.sum()))
            v[bad] = rng.normal(beam.velocity, beam.velocity_sigma, int(bad.sum()))
            bad = v <= 0
        return phase_fn(v)

    return sample


def oracle_velocity_dephasing(phase_fn: Callable[[np.ndarray], np.ndarray], beam: ClusterBeam,
                              cfg: OracleConfig, analytic: float = math.nan) -> OracleResult:
    """Average ``exp(i phase_fn(v))`` over the beam's velocity distribution."""
    if beam.velocity_sigma == 0:
        return OracleResult(1.0, 0.0, analytic, cfg.sample_count)
    if not beam.velocity_sigma < beam.velocity / 2:
        raise ValueError("velocity spread must stay below half the mean velocity")
    p_trunc = _truncation_probability(beam)
    if p_trunc > MAX_TRUNCATION:
        raise ValueError(
            f"Gaussian velocity distribution loses {p_trunc:.2e} of its weight below v = 0; "
            f"the oracle accepts at most {MAX_TRUNCATION:g}")
    rejected: list[int] = []
    estimate, se = phase_average(velocity_sampler(beam, phase_fn, rejected), cfg)
    draws = cfg.sample_count + sum(rejected)
    return OracleResult(estimate, se, analytic, cfg.sample_count,
                        truncation_fraction=sum(rejected) / draws)


def oracle_gravity(theta_g: float, beam: ClusterBeam, geometry: InterferometerGeometry,
                   period: float, cfg: OracleConfig) -> OracleResult:
    analytic = gravity_roll_reduction(theta_g, beam, geometry, period).value
    return oracle_velocity_dephasing(
        lambda v: gravity_phase(theta_g, v, geometry, period), beam, cfg, analytic)


def oracle_coriolis(beam: ClusterBeam, geometry: InterferometerGeometry, period: float,
                    cfg: OracleConfig) -> OracleResult:
    k = 2 * math.pi / period
    scale = k * 2 * geometry.vertical_rotation * geometry.separation**2
    analytic = coriolis_reduction(beam, geometry, period).value
    return oracle_velocity_dephasing(lambda v: scale / v, beam, cfg, analytic)


def oracle_independent_vibrations(vib: VibrationSpec, period: float,
                                  cfg: OracleConfig) -> OracleResult:
    """Three gratings shaken with fixed amplitudes and independent uniform random phases."""
    k = 2 * math.pi / period

    def sample(rng, size):
        theta = rng.uniform(0.0, 2 * math.pi, (3, size))
        return k * (vib.amp_g1 * np.sin(theta[0]) - 2 * vib.amp_g2 * np.sin(theta[1])
                    + vib.amp_g3 * np.sin(theta[2]))

    estimate, se = phase_average(sample, cfg)
    analytic = independent_vibration_reduction(vib, period).value
    return OracleResult(estimate, se, analytic, cfg.sample_count)


def oracle_common_mode(vib: VibrationSpec, beam: ClusterBeam,
                       geometry: InterferometerGeometry, period: float,
                       cfg: OracleConfig) -> OracleResult:
    """Common shaking seen by the particle at the three grating passage times."""
    k = 2 * math.pi / period
    shift = vib.common_omega * geometry.separation / beam.velocity

    def sample(rng, size):
        # uniform time over one vibration period is a uniform carrier phase
        u = rng.uniform(0.0, 2 * math.pi, size)
        return k * vib.common_amp * (np.sin(u) - 2 * np.sin(u + shift) + np.sin(u + 2 * shift))

    estimate, se = phase_average(sample, cfg)
    analytic = common_mode_vibration_reduction(vib, beam, geometry, period).value
    return OracleResult(estimate, se, analytic, cfg.sample_count)


def synthesize_scan(visibility: float, mean_counts: float, period: float, n_points: int,
                    noise: str = "none", seed: int = 0, *, periods: float = 2.0,
                    phase: float = 0.0) -> np.ndarray:
    """Fringe scan ``S0 (1 + V sin(2 pi x / d + phase))`` sampled on a uniform grid.

    Returns an ``(n_points, 2)`` array of (position, counts).  ``noise="poisson"``
    replaces each expected count by a Poisson draw.
    """
    if not 0 <= visibility <= 1:
        raise ValueError("visibility must lie in [0, 1]")
    if not mean_counts > 0:
        raise ValueError("mean_counts must be positive")
    if n_points < 8:
        raise ValueError("need at least 8 scan points")
    x = np.arange(n_points) * (periods * period / n_points)
    expected = mean_counts * (1 + visibility * np.sin(2 * math.pi * x / period + phase))
    if noise == "none":
        counts = expected
    elif noise == "poisson":
        counts = np.random.default_rng(seed).poisson(expected).astype(float)
    else:
        raise ValueError(f"unknown noise model {noise!r}")
    return np.column_stack([x, counts])
