"""Upper limits on collapse-model spontaneous radiation and on Pauli-principle
violation from low-background X-ray spectra."""

from .collapse import (
    Coupling,
    CslParams,
    ExposureConfig,
    alpha_from_lambda,
    csl_rate_density,
    electrons_in_detector,
    lambda_from_alpha,
)
from .constants import CODATA, PhysicalConstants, fwhm_to_sigma, length_to_inverse_kev
from .fitting import FitResult, bayesian_upper_limit, fit_one_over_e, fit_with_limit, model_bin_integral
from .pep import PepLimit, RsConfig, beta2_limit, min_interactions, new_electrons, signal_upper_limit
from .simulate import SimConfig, expected_spectrum, sample_spectrum, vip_like_spectrum
from .spectra import BinnedSpectrum, SubtractedSpectrum, counts_in_roi, load_spectrum, save_spectrum, select_range, subtract

__version__ = "0.1.0"
