"""Binned spectra: container, CSV I/O, range selection, on/off subtraction
and region-of-interest sums.

Spectra are immutable; every operation returns a new object.

CSV layout::

    # label=IGEX
    # unit=counts
    # mass_kg=2.0
    # live_time_days=80.0
    e_low_kev,e_high_kev,counts,sigma
    4.5,5.5,23,4.795831523312719
    ...

The ``sigma`` column is optional.  When absent it is filled with
sqrt(counts), and with ``empty_sigma`` (default 1.0) for empty bins.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BinningMismatchError,
    DomainError,
    EmptyRangeError,
    SpectrumParseError,
    SpectrumValidationError,
    ValidationError,
)

EMPTY_BIN_SIGMA = 1.0

HEADER = ("e_low_kev", "e_high_kev", "counts")
HEADER_WITH_SIGMA = HEADER + ("sigma",)
_META_KEYS = ("label", "unit", "mass_kg", "live_time_days")

# relative slack when comparing bin edges against window boundaries
_EDGE_RTOL = 1e-9


def poisson_sigma(counts, empty_sigma=EMPTY_BIN_SIGMA):
    counts = np.asarray(counts, dtype=float)
    return np.where(counts > 0, np.sqrt(np.clip(counts, 0, None)), empty_sigma)


def _frozen(a):
    a = np.array(a, dtype=float, copy=True).reshape(-1)
    a.setflags(write=False)
    return a


def _validate_bins(e_low, e_high, counts, sigma, allow_negative=False, rows=None):
    """Raise on the first bin that breaks an invariant.

    ``rows`` maps bin index -> (data row, file line) for error messages.
    """
    n = len(e_low)
    if not (len(e_high) == len(counts) == len(sigma) == n):
        raise ValidationError("bin arrays have different lengths")
    if n == 0:
        raise ValidationError("spectrum has no bins")

    def fail(i, msg):
        if rows is not None:
            row, line = rows[i]
            raise SpectrumValidationError(msg, line=line, row=row)
        raise ValidationError(f"bin {i}: {msg}")

    for name, arr in (("e_low", e_low), ("e_high", e_high), ("counts", counts), ("sigma", sigma)):
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            fail(bad[0], f"{name} is not finite")
    bad = np.flatnonzero(e_low >= e_high)
    if bad.size:
        i = bad[0]
        fail(i, f"e_low {float(e_low[i])!r} >= e_high {float(e_high[i])!r}")
    bad = np.flatnonzero(e_low[1:] < e_high[:-1])
    if bad.size:
        i = bad[0] + 1
        fail(i, f"bins not increasing: e_low {float(e_low[i])!r} < previous e_high {float(e_high[i - 1])!r}")
    if not allow_negative:
        bad = np.flatnonzero(counts < 0)
        if bad.size:
            fail(bad[0], f"negative counts {float(counts[bad[0]])!r}")
    bad = np.flatnonzero(sigma < 0)
    if bad.size:
        fail(bad[0], f"negative sigma {float(sigma[bad[0]])!r}")


@dataclass(frozen=True, eq=False)
class BinnedSpectrum:
    """Energy-binned counts with per-bin uncertainties.

    ``unit`` records the normalization of ``counts``: ``"counts"`` for raw
    counts per bin, ``"counts/kg/day"`` for exposure-normalized counts per
    bin, and any unit containing ``/keV`` for a differential spectrum
    (bin content divided by bin width).
    """

    e_low: np.ndarray
    e_high: np.ndarray
    counts: np.ndarray
    sigma: np.ndarray
    label: str = ""
    unit: str = "counts"
    live_time_days: float | None = None
    mass_kg: float | None = None

    _allow_negative = False

    def __post_init__(self):
        for name in ("e_low", "e_high", "counts", "sigma"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        _validate_bins(self.e_low, self.e_high, self.counts, self.sigma,
                       allow_negative=self._allow_negative)
        for name in ("live_time_days", "mass_kg"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be positive, got {v!r}")

    @classmethod
    def from_counts(cls, e_low, e_high, counts, empty_sigma=EMPTY_BIN_SIGMA, **meta):
        """Build a raw-count spectrum with Poisson uncertainties."""
        return cls(e_low, e_high, counts, poisson_sigma(counts, empty_sigma), **meta)

    @classmethod
    def from_edges(cls, edges, counts, sigma=None, **meta):
        edges = np.asarray(edges, dtype=float)
        if sigma is None:
            return cls.from_counts(edges[:-1], edges[1:], counts, **meta)
        return cls(edges[:-1], edges[1:], counts, sigma, **meta)

    def __len__(self):
        return len(self.counts)

    @property
    def bins(self):
        return list(zip(self.e_low.tolist(), self.e_high.tolist(),
                        self.counts.tolist(), self.sigma.tolist()))

    @property
    def centers(self):
        return 0.5 * (self.e_low + self.e_high)

    @property
    def widths(self):
        return self.e_high - self.e_low

    @property
    def is_density(self) -> bool:
        return "/kev" in self.unit.lower().replace(" ", "")

    @property
    def total(self) -> float:
        return float(np.sum(self.counts * self.widths if self.is_density else self.counts))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def same_binning(self, other, rtol=_EDGE_RTOL) -> bool:
        return _first_edge_mismatch(self, other, rtol) is None


@dataclass(frozen=True, eq=False)
class SubtractedSpectrum(BinnedSpectrum):
    """Result of ``on - ratio * off``; bin values may be negative."""

    normalization_ratio: float = 1.0

    _allow_negative = True

    @property
    def values(self):
        return self.counts


def _first_edge_mismatch(a, b, rtol=_EDGE_RTOL):
    if len(a) != len(b):
        return f"bin counts differ ({len(a)} vs {len(b)})"
    # interleave so the report names the lowest-energy mismatched edge
    x = np.column_stack([a.e_low, a.e_high]).ravel()
    y = np.column_stack([b.e_low, b.e_high]).ravel()
    bad = np.flatnonzero(~np.isclose(x, y, rtol=rtol, atol=0.0))
    if bad.size:
        k = bad[0]
        name = "e_low" if k % 2 == 0 else "e_high"
        return f"bin {k // 2} {name}: {float(x[k])!r} vs {float(y[k])!r}"
    return None


# -- I/O ----------------------------------------------------------------------

def _parse_float(text, what, line, row):
    try:
        v = float(text)
    except ValueError:
        raise SpectrumParseError(f"cannot parse {what} {text.strip()!r} as a number",
                                 line=line, row=row) from None
    return v


def parse_spectrum(text, empty_sigma=EMPTY_BIN_SIGMA, source="<string>"):
    """Parse CSV text into a :class:`BinnedSpectrum`."""
    meta = {}
    header = None
    rows = []
    reader = csv.reader(io.StringIO(text, newline=None))
    for lineno, fields_ in enumerate(reader, start=1):
        if not fields_ or all(not f.strip() for f in fields_):
            continue
        first = fields_[0].strip()
        if first.startswith("#"):
            if header is None:
                body = ",".join(fields_).lstrip("#").strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
            continue
        if header is None:
            header = tuple(f.strip() for f in fields_)
            if header not in (HEADER, HEADER_WITH_SIGMA):
                raise SpectrumParseError(
                    f"expected header {','.join(HEADER)}[,sigma], got {','.join(header)}",
                    line=lineno)
            continue
        if len(fields_) != len(header):
            raise SpectrumParseError(
                f"expected {len(header)} columns, got {len(fields_)}",
                line=lineno, row=len(rows) + 1)
        rows.append((lineno, fields_))

    if header is None:
        raise SpectrumParseError(f"{source}: missing header line")
    if not rows:
        raise SpectrumParseError(f"{source}: no data rows")

    n = len(rows)
    cols = np.empty((len(header), n))
    where = []
    for i, (lineno, fields_) in enumerate(rows):
        where.append((i + 1, lineno))
        for j, name in enumerate(header):
            cols[j, i] = _parse_float(fields_[j], name, lineno, i + 1)
    e_low, e_high, counts = cols[0], cols[1], cols[2]
    sigma = cols[3] if len(header) == 4 else poisson_sigma(counts, empty_sigma)
    _validate_bins(e_low, e_high, counts, sigma, rows=where)

    kw = {"label": meta.get("label", ""), "unit": meta.get("unit", "counts")}
    for key in ("mass_kg", "live_time_days"):
        if key in meta:
            try:
                kw[key] = float(meta[key])
            except ValueError:
                raise SpectrumParseError(f"metadata {key}={meta[key]!r} is not a number") from None
    return BinnedSpectrum(e_low, e_high, counts, sigma, **kw)


def load_spectrum(path, format="csv", empty_sigma=EMPTY_BIN_SIGMA):
    """Read a spectrum file.  Only ``format="csv"`` exists."""
    if format != "csv":
        raise ValidationError(f"unsupported spectrum format {format!r}")
    path = Path(path)
    text = path.read_text(encoding="utf-8")  # FileNotFoundError propagates
    return parse_spectrum(text, empty_sigma=empty_sigma, source=str(path))


def format_spectrum(spec) -> str:
    out = io.StringIO()
    for key in _META_KEYS:
        v = getattr(spec, key)
        if v is None or (key == "label" and v == ""):
            continue
        v = repr(v) if isinstance(v, float) else str(v)
        if "\n" in v or "\r" in v:
            raise ValidationError(f"metadata {key} may not contain newlines")
        out.write(f"# {key}={v}\n")
    out.write(",".join(HEADER_WITH_SIGMA) + "\n")
    for row in zip(spec.e_low.tolist(), spec.e_high.tolist(),
                   spec.counts.tolist(), spec.sigma.tolist()):
        out.write(",".join(repr(x) for x in row) + "\n")
    return out.getvalue()


def save_spectrum(spec, path):
    Path(path).write_text(format_spectrum(spec), encoding="utf-8", newline="\n")


# -- operations ---------------------------------------------------------------

def _inside(spec, lo, hi):
    tol_lo = _EDGE_RTOL * max(1.0, abs(lo))
    tol_hi = _EDGE_RTOL * max(1.0, abs(hi))
    return (spec.e_low >= lo - tol_lo) & (spec.e_high <= hi + tol_hi)


def _take(spec, mask):
    return spec.replace(e_low=spec.e_low[mask], e_high=spec.e_high[mask],
                        counts=spec.counts[mask], sigma=spec.sigma[mask])


def select_range(spec, lo, hi):
    """Keep the bins lying entirely inside [lo, hi] keV.

    Partially covered bins are dropped, never split.
    """
    if not lo < hi:
        raise DomainError(f"empty window: lo={lo!r} >= hi={hi!r}")
    mask = _inside(spec, lo, hi)
    if not mask.any():
        raise EmptyRangeError(
            f"no bins inside [{lo}, {hi}] keV (spectrum spans "
            f"{spec.e_low[0]}-{spec.e_high[-1]} keV)")
    return _take(spec, mask)


def subtract(on, off, ratio):
    """Background-subtract ``off`` scaled by ``ratio`` from ``on``.

    ``ratio`` is normally live-time-on / live-time-off.  Uncertainties add
    in quadrature.
    """
    if not (math.isfinite(ratio) and ratio >= 0):
        raise DomainError(f"normalization ratio must be >= 0, got {ratio!r}")
    mismatch = _first_edge_mismatch(on, off)
    if mismatch is not None:
        raise BinningMismatchError(f"on/off binning differs: {mismatch}")
    if on.unit != off.unit:
        raise BinningMismatchError(f"on/off units differ: {on.unit!r} vs {off.unit!r}")
    values = on.counts - ratio * off.counts
    sigma = np.sqrt(on.sigma ** 2 + ratio ** 2 * off.sigma ** 2)
    label = f"{on.label or 'on'} - {ratio!r}*({off.label or 'off'})"
    return SubtractedSpectrum(on.e_low, on.e_high, values, sigma, label=label,
                              unit=on.unit, live_time_days=on.live_time_days,
                              mass_kg=on.mass_kg, normalization_ratio=float(ratio))


def counts_in_roi(spec, center, half_width):
    """Sum of bin contents fully inside center +/- half_width.

    Returns ``(counts, sigma)`` with sigma the quadrature sum.  Differential
    spectra are multiplied by bin width first.
    """
    if not half_width > 0:
        raise DomainError(f"ROI half width must be positive, got {half_width!r}")
    mask = _inside(spec, center - half_width, center + half_width)
    if not mask.any():
        raise EmptyRangeError(f"ROI {center}+/-{half_width} keV contains no whole bin")
    v, s = spec.counts[mask], spec.sigma[mask]
    if spec.is_density:
        w = spec.widths[mask]
        v, s = v * w, s * w
    return float(np.sum(v)), float(np.sqrt(np.sum(s ** 2)))
