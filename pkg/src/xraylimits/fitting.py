"""One-parameter 1/E spectral fit and Bayesian upper limit on its amplitude.

The model dGamma/dE = alpha/E is linear in alpha, so the weighted chi^2

    chi2(alpha) = sum_i (n_i - alpha f_i)^2 / sigma_i^2

has the closed-form minimizer alpha_hat = sum(n f / s^2) / sum(f^2 / s^2)
with f_i the bin template.  The upper limit is the posterior quantile of a
Gaussian likelihood under a flat prior on alpha >= 0.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.special import log_ndtr, ndtri_exp

from .errors import DomainError, FitError

DEFAULT_CL = 0.90

TEMPLATES = ("integral", "center")
VARIANCES = ("declared", "model")


@dataclass(frozen=True)
class FitResult:
    alpha_hat: float
    sigma_alpha: float
    chi2: float
    ndf: int
    alpha_upper: float | None = None
    confidence_level: float | None = None

    @property
    def reduced_chi2(self):
        return self.chi2 / self.ndf if self.ndf > 0 else math.nan

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        kw.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kw)


def model_bin_integral(alpha, e_low, e_high):
    """Integral of alpha/E over [e_low, e_high] keV."""
    e_low = np.asarray(e_low, dtype=float)
    e_high = np.asarray(e_high, dtype=float)
    if np.any(e_low <= 0) or np.any(e_high <= e_low):
        raise DomainError("bin edges must satisfy 0 < e_low < e_high")
    out = alpha * np.log(e_high / e_low)
    return float(out) if out.ndim == 0 else out


def template(spec, mode="integral"):
    """Per-bin response to unit amplitude.

    ``integral`` integrates 1/E over each bin, ``center`` evaluates it at the
    bin center times the width.  Differential spectra get the bin average.
    """
    if mode not in TEMPLATES:
        raise DomainError(f"template mode must be one of {TEMPLATES}, got {mode!r}")
    if np.any(spec.e_low <= 0):
        raise DomainError("1/E template needs positive bin edges")
    if mode == "integral":
        f = np.log(spec.e_high / spec.e_low)
    else:
        f = spec.widths / spec.centers
    if spec.is_density:
        f = f / spec.widths
    return f


def _wls(n, f, s):
    w = 1.0 / s ** 2
    info = np.sum(f * f * w)
    if not (np.isfinite(info) and info > 0):
        raise FitError("weights carry no information about the amplitude")
    alpha = float(np.sum(n * f * w) / info)
    chi2 = float(np.sum((n - alpha * f) ** 2 * w))
    return alpha, 1.0 / math.sqrt(info), chi2


def chi2_at(alpha, counts, f, sigma):
    """chi^2 of amplitude ``alpha``; vectorized over ``alpha``."""
    alpha = np.asarray(alpha, dtype=float)
    r = (counts[None, :] - alpha.reshape(-1, 1) * f[None, :]) / sigma[None, :]
    out = np.sum(r * r, axis=1)
    return float(out[0]) if alpha.ndim == 0 else out


def fit_sigmas(spec, result, variance="declared", mode="integral"):
    """Per-bin uncertainties that ``result`` was computed with."""
    if variance == "declared":
        return spec.sigma
    return np.sqrt(result.alpha_hat * template(spec, mode))


def fit_one_over_e(spec, variance="declared", mode="integral", max_iter=50, rtol=1e-13):
    """Fit alpha/E to a binned spectrum.

    ``variance="declared"`` uses the spectrum's own sigma column.
    ``variance="model"`` sets sigma_i^2 to the fitted expectation and
    iterates; at the fixed point this is the Poisson maximum-likelihood
    estimate, free of the downward bias sqrt(n) errors give at low counts.
    Only meaningful for raw-count spectra.
    """
    if variance not in VARIANCES:
        raise DomainError(f"variance must be one of {VARIANCES}, got {variance!r}")
    if len(spec) < 2:
        raise FitError("need at least two bins")
    n = spec.counts
    f = template(spec, mode)
    s = spec.sigma
    if np.any(s == 0):
        if variance == "declared":
            i = int(np.flatnonzero(s == 0)[0])
            raise FitError(f"bin {i} has zero uncertainty")
        s = np.ones_like(f)
    alpha, sig, chi2 = _wls(n, f, s)

    if variance == "model":
        if spec.unit.strip().lower() != "counts":
            raise FitError(f"model variance needs raw counts, spectrum unit is {spec.unit!r}")
        for _ in range(max_iter):
            if not alpha > 0:
                raise FitError("model variance undefined for non-positive amplitude")
            prev = alpha
            alpha, sig, chi2 = _wls(n, f, np.sqrt(alpha * f))
            if abs(alpha - prev) <= rtol * abs(prev):
                break
        else:
            raise FitError("model-variance iteration did not converge")
        if not alpha > 0:
            raise FitError("model variance undefined for non-positive amplitude")

    return FitResult(alpha_hat=alpha, sigma_alpha=sig, chi2=chi2, ndf=len(n) - 1)


def bayesian_upper_limit(alpha_hat, sigma_alpha, cl=DEFAULT_CL):
    """Upper ``cl`` quantile of N(alpha_hat, sigma_alpha) truncated to alpha >= 0."""
    if not (0.5 < cl < 1):
        raise DomainError(f"confidence level must lie in (0.5, 1), got {cl!r}")
    if not (math.isfinite(sigma_alpha) and sigma_alpha > 0):
        raise DomainError(f"sigma_alpha must be positive, got {sigma_alpha!r}")
    # upper tail: P(alpha > x) = (1 - cl) * P(alpha > 0), solved in log space
    log_tail = math.log1p(-cl) + float(log_ndtr(alpha_hat / sigma_alpha))
    z = -float(ndtri_exp(log_tail))
    return alpha_hat + sigma_alpha * z


def fit_with_limit(spec, cl=DEFAULT_CL, variance="declared", mode="integral"):
    res = fit_one_over_e(spec, variance=variance, mode=mode)
    ul = bayesian_upper_limit(res.alpha_hat, res.sigma_alpha, cl)
    return replace(res, alpha_upper=ul, confidence_level=cl)


def residual_table(spec, result, variance="declared", mode="integral"):
    """CSV text of bin center, data, model and pull for plotting overlays."""
    f = template(spec, mode)
    model = result.alpha_hat * f
    s = fit_sigmas(spec, result, variance, mode)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["e_center_kev", "data", "sigma", "model", "pull"])
    for c, d, si, m in zip(spec.centers.tolist(), spec.counts.tolist(),
                           np.asarray(s).tolist(), model.tolist()):
        w.writerow([repr(c), repr(d), repr(si), repr(m), repr((d - m) / si)])
    return out.getvalue()
