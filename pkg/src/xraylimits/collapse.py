"""Spontaneous radiation from collapse-model noise and the amplitude <-> rate map.

A free electron under CSL noise radiates with spectral rate

    dGamma/dE = e^2 lambda / (4 pi^2 a^2 m_e^2 E)

in natural units.  With the Feynman-rule normalization e^2/(4 pi) = alpha
this is (alpha/pi) lambda / (a^2 m_e^2 E).  Coupling the noise to mass
density instead of particle number multiplies the rate by (m_e/m_N)^2.

A detector spectrum fitted as alpha_fit/E is tied to lambda through the
number of quasi-free electrons in the detector and the time/mass
normalization of the spectrum.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass

from .constants import (
    CODATA,
    GERMANIUM_MOLAR_MASS,
    GERMANIUM_Z,
    SECONDS_PER_DAY,
    length_to_inverse_kev,
)
from .errors import ConfigError, DomainError, ValidationError

NON_RELATIVISTIC_LIMIT_KEV = 100.0
DEFAULT_CORRELATION_LENGTH_M = 1e-7
DEFAULT_CHARGE_SQ_OVER_4PI = 1.0 / 137.04


class Coupling(enum.Enum):
    NON_MASS_PROPORTIONAL = "nmp"
    MASS_PROPORTIONAL = "mp"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {
            "nmp": cls.NON_MASS_PROPORTIONAL,
            "non_mass_proportional": cls.NON_MASS_PROPORTIONAL,
            "nonmassproportional": cls.NON_MASS_PROPORTIONAL,
            "mp": cls.MASS_PROPORTIONAL,
            "mass_proportional": cls.MASS_PROPORTIONAL,
            "massproportional": cls.MASS_PROPORTIONAL,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ConfigError(f"unknown coupling {value!r}; use 'nmp' or 'mp'") from None


@dataclass(frozen=True)
class CslParams:
    lambda_rate: float  # s^-1
    correlation_length_m: float = DEFAULT_CORRELATION_LENGTH_M
    coupling: Coupling = Coupling.NON_MASS_PROPORTIONAL
    charge_sq_over_4pi: float = DEFAULT_CHARGE_SQ_OVER_4PI

    def __post_init__(self):
        object.__setattr__(self, "coupling", Coupling.parse(self.coupling))
        if not (math.isfinite(self.lambda_rate) and self.lambda_rate >= 0):
            raise ValidationError(f"lambda_rate must be >= 0, got {self.lambda_rate!r}")
        if not self.correlation_length_m > 0:
            raise ValidationError("correlation_length_m must be positive")
        if not self.charge_sq_over_4pi > 0:
            raise ValidationError("charge_sq_over_4pi must be positive")


@dataclass(frozen=True)
class ExposureConfig:
    """Detector exposure.  Defaults describe germanium with four quasi-free
    valence electrons per atom."""

    detector_mass_kg: float
    live_time_days: float
    atomic_mass_g_per_mol: float = GERMANIUM_MOLAR_MASS
    emitting_electrons_per_atom: float = 4
    atomic_number: int = GERMANIUM_Z

    def __post_init__(self):
        for name in ("detector_mass_kg", "live_time_days", "atomic_mass_g_per_mol",
                     "emitting_electrons_per_atom", "atomic_number"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be positive, got {v!r}")
        if self.emitting_electrons_per_atom > self.atomic_number:
            raise ValidationError(
                f"emitting_electrons_per_atom ({self.emitting_electrons_per_atom}) "
                f"exceeds atomic number ({self.atomic_number})")


def _check_energy(e_gamma, allow_relativistic):
    if not e_gamma > 0:
        raise DomainError(f"photon energy must be positive, got {e_gamma!r}")
    if not allow_relativistic and e_gamma >= NON_RELATIVISTIC_LIMIT_KEV:
        raise DomainError(
            f"E = {e_gamma} keV violates the non-relativistic bound "
            f"E < {NON_RELATIVISTIC_LIMIT_KEV} keV")


def emission_coefficient(params, constants=CODATA):
    """Coefficient k in dGamma/dE = k / E, per electron (s^-1)."""
    a = length_to_inverse_kev(params.correlation_length_m, constants)
    m = constants.electron_mass_kev
    k = params.charge_sq_over_4pi / math.pi * params.lambda_rate / (a * a * m * m)
    if params.coupling is Coupling.MASS_PROPORTIONAL:
        k /= constants.nucleon_to_electron_mass_sq
    return k


def csl_rate_density(e_gamma, params, constants=CODATA, allow_relativistic=False):
    """Spontaneous photon emission rate per electron, s^-1 keV^-1."""
    _check_energy(e_gamma, allow_relativistic)
    return emission_coefficient(params, constants) / e_gamma


def electrons_in_detector(exposure, constants=CODATA):
    moles = exposure.detector_mass_kg * 1e3 / exposure.atomic_mass_g_per_mol
    return moles * constants.avogadro * exposure.emitting_electrons_per_atom


_UNIT_RE = re.compile(r"^counts(/(kev|kg|day|d|s))*$")


def spectrum_time_mass_factor(unit, exposure):
    """Multiplier from a detector-wide rate (s^-1) to the spectrum normalization.

    ``/keV`` does not enter: differential spectra are fitted with bin-averaged
    1/E so the amplitude means the same thing.
    """
    u = unit.strip().lower().replace(" ", "")
    if not _UNIT_RE.match(u):
        raise ConfigError(f"unknown spectrum unit {unit!r}")
    parts = u.split("/")[1:]
    if len(parts) != len(set(parts)):
        raise ConfigError(f"repeated denominator in spectrum unit {unit!r}")
    times = [p for p in parts if p in ("day", "d", "s")]
    if len(times) > 1:
        raise ConfigError(f"spectrum unit {unit!r} has two time denominators")
    if not times:
        factor = exposure.live_time_days * SECONDS_PER_DAY
    elif times[0] == "s":
        factor = 1.0
    else:
        factor = SECONDS_PER_DAY
    if "kg" in parts:
        factor /= exposure.detector_mass_kg
    return factor


def alpha_from_lambda(params, exposure, unit="counts", constants=CODATA):
    """Fitted 1/E amplitude predicted for a given collapse rate."""
    return (emission_coefficient(params, constants)
            * electrons_in_detector(exposure, constants)
            * spectrum_time_mass_factor(unit, exposure))


def lambda_from_alpha(alpha_upper, coupling, exposure, unit="counts", constants=CODATA,
                      correlation_length_m=DEFAULT_CORRELATION_LENGTH_M,
                      charge_sq_over_4pi=DEFAULT_CHARGE_SQ_OVER_4PI):
    """Collapse rate (s^-1) that would produce amplitude ``alpha_upper``."""
    if not (math.isfinite(alpha_upper) and alpha_upper >= 0):
        raise DomainError(f"amplitude must be >= 0, got {alpha_upper!r}")
    unit_params = CslParams(1.0, correlation_length_m, coupling, charge_sq_over_4pi)
    return alpha_upper / alpha_from_lambda(unit_params, exposure, unit, constants)
