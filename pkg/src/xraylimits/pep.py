"""Ramberg-Snow bound on the Pauli-violation probability beta^2/2.

Current through a copper strip brings N_new fresh electrons in.  Each
scatters about D/mu times on its way through, and a fraction of captures
cascades to the 1S shell through the forbidden K-alpha line at 7.729 keV.
With S the upper limit on excess line counts (current on minus current
off) the bound is

    beta^2/2 < S / (N_new * N_int * capture_fraction * efficiency * acceptance)
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass

from .constants import (
    CODATA,
    CU_KALPHA_FORBIDDEN_KEV,
    CU_KALPHA_KEV,
    VIP_RESOLUTION_FWHM_KEV,
    fwhm_to_sigma,
)
from .errors import ConfigError, DomainError

DEFAULT_N_SIGMA = 3.0
DEFAULT_CAPTURE_FRACTION = 0.1
DEFAULT_ROI_HALF_WIDTH_KEV = 3.0 * fwhm_to_sigma(VIP_RESOLUTION_FWHM_KEV)


class RoiOverlapWarning(UserWarning):
    """ROI center sits within one resolution sigma of the allowed K-alpha line."""


@dataclass(frozen=True)
class RsConfig:
    current_amp: float
    time_on_s: float
    time_off_s: float
    strip_length_m: float
    mean_free_path_m: float
    detection_efficiency: float
    geometric_acceptance: float
    capture_fraction: float = DEFAULT_CAPTURE_FRACTION
    roi_center_kev: float = CU_KALPHA_FORBIDDEN_KEV
    roi_half_width_kev: float = DEFAULT_ROI_HALF_WIDTH_KEV
    resolution_fwhm_kev: float = VIP_RESOLUTION_FWHM_KEV

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        for name in ("capture_fraction", "detection_efficiency", "geometric_acceptance"):
            if getattr(self, name) > 1:
                raise ConfigError(f"{name} must not exceed 1, got {getattr(self, name)!r}")
        sigma = fwhm_to_sigma(self.resolution_fwhm_kev)
        if abs(self.roi_center_kev - CU_KALPHA_KEV) <= sigma:
            warnings.warn(
                f"ROI center {self.roi_center_kev} keV is within {sigma:.3f} keV "
                f"of the allowed K-alpha line at {CU_KALPHA_KEV} keV",
                RoiOverlapWarning, stacklevel=3)

    @property
    def live_time_ratio(self):
        return self.time_on_s / self.time_off_s


@dataclass(frozen=True)
class PepLimit:
    signal_upper_counts: float
    n_new_electrons: float
    n_interactions: float
    capture_fraction: float
    detection_efficiency: float
    geometric_acceptance: float
    beta2_over_2: float
    n_sigma: float

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        kw.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kw)


def new_electrons(current_amp, time_on_s, constants=CODATA):
    """Electrons delivered by ``current_amp`` flowing for ``time_on_s``."""
    if not (current_amp > 0 and time_on_s > 0):
        raise DomainError("current and time must be positive")
    return current_amp * time_on_s / constants.elementary_charge_coulomb


def min_interactions(strip_length_m, mean_free_path_m):
    """Scatterings of one electron crossing the strip (not rounded)."""
    if not (strip_length_m > 0 and mean_free_path_m > 0):
        raise DomainError("lengths must be positive")
    if strip_length_m < mean_free_path_m:
        raise DomainError(
            f"strip length {strip_length_m} m is shorter than the mean free "
            f"path {mean_free_path_m} m")
    return strip_length_m / mean_free_path_m


def roi_excess(on_roi, off_roi, ratio):
    """Excess ``on - ratio*off`` and its quadrature uncertainty."""
    if not ratio > 0:
        raise DomainError(f"ratio must be positive, got {ratio!r}")
    (n_on, s_on), (n_off, s_off) = on_roi, off_roi
    return n_on - ratio * n_off, math.sqrt(s_on ** 2 + ratio ** 2 * s_off ** 2)


def signal_upper_limit(on_roi, off_roi, ratio, n_sigma=DEFAULT_N_SIGMA):
    """Upper limit on signal counts: max(excess, 0) + n_sigma * sigma_excess."""
    if not n_sigma > 0:
        raise DomainError(f"n_sigma must be positive, got {n_sigma!r}")
    delta, sigma = roi_excess(on_roi, off_roi, ratio)
    return max(delta, 0.0) + n_sigma * sigma


def beta2_limit(s_upper, cfg, constants=CODATA, n_sigma=DEFAULT_N_SIGMA):
    if not (math.isfinite(s_upper) and s_upper > 0):
        raise DomainError(f"signal upper limit must be positive, got {s_upper!r}")
    n_new = new_electrons(cfg.current_amp, cfg.time_on_s, constants)
    n_int = min_interactions(cfg.strip_length_m, cfg.mean_free_path_m)
    denom = (n_new * n_int * cfg.capture_fraction
             * cfg.detection_efficiency * cfg.geometric_acceptance)
    if not denom > 0:
        raise ConfigError("sensitivity factor is zero")
    return PepLimit(
        signal_upper_counts=s_upper,
        n_new_electrons=n_new,
        n_interactions=n_int,
        capture_fraction=cfg.capture_fraction,
        detection_efficiency=cfg.detection_efficiency,
        geometric_acceptance=cfg.geometric_acceptance,
        beta2_over_2=s_upper / denom,
        n_sigma=n_sigma,
    )
