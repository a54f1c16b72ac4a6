"""Seedable synthetic X-ray spectra.

Lines are folded with a Gaussian detector response, integrated exactly over
each bin through the normal CDF, added to a continuum and optionally
Poisson sampled.  Sampling uses numpy's PCG64 bit generator seeded with a
single 64-bit integer, so a (config, seed) pair always yields the same
spectrum.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .constants import (
    CU_KALPHA_FORBIDDEN_KEV,
    CU_KALPHA_KEV,
    CU_KBETA_KEV,
    IGEX_FIT_RANGE_KEV,
    VIP_RESOLUTION_FWHM_KEV,
    fwhm_to_sigma,
)
from .errors import ConfigError
from .spectra import BinnedSpectrum, poisson_sigma

GAUSS_TRUNCATION_SIGMA = 8.0
SEED_MODULUS = 2 ** 64


class LineOutsideRangeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Line:
    center_kev: float
    intensity: float  # expected counts in the full line


@dataclass(frozen=True)
class Flat:
    level: float  # counts per keV


@dataclass(frozen=True)
class OneOverE:
    alpha: float


@dataclass(frozen=True)
class SimConfig:
    e_min: float
    e_max: float
    bin_width: float
    lines: tuple = ()
    resolution_fwhm_kev: float = VIP_RESOLUTION_FWHM_KEV
    continuum: tuple = ()
    seed: int = 0
    poisson: bool = True
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(
            l if isinstance(l, Line) else Line(*l) for l in self.lines))
        cont = self.continuum
        if isinstance(cont, (Flat, OneOverE)):
            cont = (cont,)
        object.__setattr__(self, "continuum", tuple(cont))
        if not self.bin_width > 0:
            raise ConfigError("bin_width must be positive")
        if not self.e_min < self.e_max:
            raise ConfigError("e_min must be below e_max")
        if not self.resolution_fwhm_kev > 0:
            raise ConfigError("resolution_fwhm_kev must be positive")
        for l in self.lines:
            if not (math.isfinite(l.intensity) and l.intensity >= 0):
                raise ConfigError(f"line intensity must be >= 0, got {l.intensity!r}")
        for c in self.continuum:
            if isinstance(c, Flat) and not c.level >= 0:
                raise ConfigError("flat continuum level must be >= 0")
            elif isinstance(c, OneOverE):
                if not c.alpha >= 0:
                    raise ConfigError("1/E amplitude must be >= 0")
                if self.e_min <= 0:
                    raise ConfigError("1/E continuum needs e_min > 0")
            elif not isinstance(c, (Flat, OneOverE)):
                raise ConfigError(f"unknown continuum component {c!r}")
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < SEED_MODULUS):
            raise ConfigError(f"seed must be an integer in [0, 2**64), got {self.seed!r}")
        self.edges()  # checks the binning divides the range

    def edges(self):
        span = self.e_max - self.e_min
        n = int(round(span / self.bin_width))
        if n < 1 or abs(n * self.bin_width - span) > 1e-9 * max(1.0, span):
            raise ConfigError(
                f"bin_width {self.bin_width} does not divide [{self.e_min}, {self.e_max}]")
        return self.e_min + self.bin_width * np.arange(n + 1)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def line_bin_fractions(center, sigma, e_low, e_high):
    """Fraction of a unit Gaussian falling in each bin, truncated at 8 sigma."""
    t = GAUSS_TRUNCATION_SIGMA
    zl = np.clip((e_low - center) / sigma, -t, t)
    zh = np.clip((e_high - center) / sigma, -t, t)
    return ndtr(zh) - ndtr(zl)


def expected_spectrum(cfg):
    """Noise-free expectation per bin; sigma is sqrt(expectation)."""
    edges = cfg.edges()
    lo, hi = edges[:-1], edges[1:]
    mu = np.zeros(len(lo))
    sigma = fwhm_to_sigma(cfg.resolution_fwhm_kev)
    for line in cfg.lines:
        if not (cfg.e_min <= line.center_kev <= cfg.e_max):
            warnings.warn(f"line at {line.center_kev} keV lies outside "
                          f"[{cfg.e_min}, {cfg.e_max}] keV", LineOutsideRangeWarning,
                          stacklevel=2)
        mu += line.intensity * line_bin_fractions(line.center_kev, sigma, lo, hi)
    for c in cfg.continuum:
        if isinstance(c, Flat):
            mu += c.level * (hi - lo)
        else:
            mu += c.alpha * np.log(hi / lo)
    return BinnedSpectrum(lo, hi, mu, np.sqrt(mu), label=cfg.label, unit="counts")


def rng_for(seed):
    return np.random.Generator(np.random.PCG64(int(seed) % SEED_MODULUS))


def sample_spectrum(cfg, seed=None):
    """One Poisson realisation of ``expected_spectrum(cfg)``."""
    mean = expected_spectrum(cfg)
    rng = rng_for(cfg.seed if seed is None else seed)
    counts = rng.poisson(mean.counts).astype(float)
    return BinnedSpectrum(mean.e_low, mean.e_high, counts, poisson_sigma(counts),
                          label=cfg.label, unit="counts")


def simulate(cfg):
    return sample_spectrum(cfg) if cfg.poisson else expected_spectrum(cfg)


def replica_seed(base_seed, index):
    return (int(base_seed) + int(index)) % SEED_MODULUS


def replicas(cfg, n):
    """Yield ``n`` independent realisations with seeds cfg.seed + i."""
    for i in range(n):
        yield sample_spectrum(cfg, replica_seed(cfg.seed, i))


# -- presets ------------------------------------------------------------------

def igex_like_config(alpha=110.0, seed=0, bin_width=1.0, **overrides):
    """Pure 1/E spectrum over the germanium fit window."""
    lo, hi = IGEX_FIT_RANGE_KEV
    kw = dict(e_min=lo, e_max=hi, bin_width=bin_width, continuum=(OneOverE(alpha),),
              seed=seed, label=f"1/E alpha={alpha!r}")
    kw.update(overrides)
    return SimConfig(**kw)


# Illustrative copper fluorescence intensities; not measured values.
VIP_DEFAULTS = {
    "e_min": 5.0,
    "e_max": 11.0,
    "bin_width": 0.01,
    "kalpha_intensity": 20000.0,
    "kbeta_intensity": 2700.0,
    "continuum_level": 300.0,
}


def vip_like_config(current_on, forbidden_intensity=0.0, **overrides):
    """Copper-strip spectrum: K-alpha, K-beta, flat continuum and, with current
    on, a forbidden K-alpha line at 7.729 keV."""
    if not forbidden_intensity >= 0:
        raise ConfigError("forbidden_intensity must be >= 0")
    opts = dict(VIP_DEFAULTS)
    extra = {k: overrides.pop(k) for k in list(overrides) if k in opts}
    opts.update(extra)
    lines = [Line(CU_KALPHA_KEV, opts["kalpha_intensity"]),
             Line(CU_KBETA_KEV, opts["kbeta_intensity"])]
    if current_on and forbidden_intensity > 0:
        lines.append(Line(CU_KALPHA_FORBIDDEN_KEV, forbidden_intensity))
    kw = dict(e_min=opts["e_min"], e_max=opts["e_max"], bin_width=opts["bin_width"],
              lines=tuple(lines), continuum=(Flat(opts["continuum_level"]),),
              label="current on" if current_on else "current off")
    kw.update(overrides)
    return SimConfig(**kw)


def vip_like_spectrum(current_on, forbidden_intensity=0.0, **overrides):
    return simulate(vip_like_config(current_on, forbidden_intensity, **overrides))
