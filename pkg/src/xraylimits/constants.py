"""Physical constants, natural-unit conversions and the X-ray line catalog.

Everything downstream works in keV and keV^-1 (hbar = c = 1).  Values are
CODATA 2018 unless marked otherwise.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields

from .errors import DomainError, ValidationError

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))

SECONDS_PER_DAY = 86400.0

# Copper K lines (keV).  The K-beta energy is a standard tabulated value.
CU_KALPHA_KEV = 8.040
CU_KALPHA_FORBIDDEN_KEV = 7.729
CU_KBETA_KEV = 8.905

# CCD resolution of the copper-strip setup, quoted at 8 keV.
VIP_RESOLUTION_FWHM_KEV = 0.320

# Germanium fit window (keV).
IGEX_FIT_RANGE_KEV = (4.5, 48.5)

GERMANIUM_MOLAR_MASS = 72.63  # g/mol
GERMANIUM_Z = 32


@dataclass(frozen=True)
class PhysicalConstants:
    electron_mass_kev: float = 510.99895000
    nucleon_mass_kev: float = 938272.08816  # proton mass
    fine_structure: float = 7.2973525693e-3
    hbar_c_kev_nm: float = 0.1973269804
    elementary_charge_coulomb: float = 1.602176634e-19
    avogadro: float = 6.02214076e23

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"{f.name} must be finite and positive, got {v!r}")
        if abs(self.fine_structure - 7.29e-3) > 0.01e-3:
            raise ValidationError(f"fine_structure {self.fine_structure!r} fails sanity bound")
        if abs(self.electron_mass_kev - 511.0) > 1.0:
            raise ValidationError(f"electron_mass_kev {self.electron_mass_kev!r} fails sanity bound")
        if abs(self.nucleon_mass_kev - 938272.0) > 1000.0:
            raise ValidationError(f"nucleon_mass_kev {self.nucleon_mass_kev!r} fails sanity bound")

    @property
    def hbar_c_kev_m(self) -> float:
        return self.hbar_c_kev_nm * 1e-9

    @property
    def nucleon_to_electron_mass_sq(self) -> float:
        """(m_N / m_e)**2, the suppression of the mass-proportional coupling."""
        return (self.nucleon_mass_kev / self.electron_mass_kev) ** 2

    def to_dict(self) -> dict:
        units = {
            "electron_mass_kev": "keV",
            "nucleon_mass_kev": "keV",
            "fine_structure": "1",
            "hbar_c_kev_nm": "keV nm",
            "elementary_charge_coulomb": "C",
            "avogadro": "mol^-1",
        }
        return {k: {"value": getattr(self, k), "unit": u} for k, u in units.items()}

    def to_json(self, **kw) -> str:
        kw.setdefault("indent", 2)
        kw.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kw)


CODATA = PhysicalConstants()


def length_to_inverse_kev(length_m, constants=CODATA):
    """Express a length in natural units of keV^-1."""
    if not length_m > 0:
        raise DomainError(f"length must be positive, got {length_m!r}")
    return length_m / constants.hbar_c_kev_m


def inverse_kev_to_length(inv_kev, constants=CODATA):
    if not inv_kev > 0:
        raise DomainError(f"inverse energy must be positive, got {inv_kev!r}")
    return inv_kev * constants.hbar_c_kev_m


def fwhm_to_sigma(fwhm):
    """Gaussian sigma for a given full width at half maximum."""
    if not fwhm > 0:
        raise DomainError(f"FWHM must be positive, got {fwhm!r}")
    return fwhm / FWHM_PER_SIGMA
