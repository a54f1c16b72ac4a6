"""Command-line entry point.

Commands::

    xraylimits fit-collapse --input spectrum.csv --config run.ini --output fit.json
    xraylimits pep-limit --on on.csv --off off.csv --config run.ini --output pep.json
    xraylimits simulate --config run.ini --seed 7 --output sim.csv
    xraylimits convert --lambda 1e-17 --coupling mp --config run.ini

Settings come from an INI file (sections ``[fit]``, ``[csl]``,
``[exposure]``, ``[pep]``, ``[simulate]``); command-line flags override
file values, which override built-in defaults.  Results are JSON with
sorted keys and no timestamps, so identical inputs give identical bytes.

Exit codes: 0 success, 2 usage, 3 I/O, 4 validation/configuration,
5 numerical failure.  Failures print a JSON error record on stderr.
"""
from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

from .collapse import (
    DEFAULT_CHARGE_SQ_OVER_4PI,
    DEFAULT_CORRELATION_LENGTH_M,
    Coupling,
    CslParams,
    ExposureConfig,
    alpha_from_lambda,
    electrons_in_detector,
    lambda_from_alpha,
)
from .constants import CODATA, IGEX_FIT_RANGE_KEV
from .errors import ConfigError, FitError, ValidationError, XrayLimitsError
from .fitting import DEFAULT_CL, fit_with_limit, residual_table
from .pep import (
    DEFAULT_N_SIGMA,
    RsConfig,
    beta2_limit,
    roi_excess,
    signal_upper_limit,
)
from .simulate import Flat, Line, OneOverE, SimConfig, igex_like_config, simulate, vip_like_config
from .spectra import counts_in_roi, format_spectrum, load_spectrum, select_range

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VALIDATION = 4
EXIT_NUMERICAL = 5


# -- config helpers -----------------------------------------------------------

def read_config(path):
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        cp.read(path, encoding="utf-8")
    return cp


def _get(cp, section, key, conv=float, default=None, required=False):
    if cp.has_option(section, key):
        raw = cp.get(section, key)
        try:
            return conv(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key} = {raw!r} is invalid") from None
    if required:
        raise ConfigError(f"missing [{section}] {key}")
    return default


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def parse_range(text):
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise ConfigError(f"range must look like LO:HI, got {text!r}") from None
    return lo, hi


def _pairs(text):
    """'8.040:20000, 8.905:2700' -> [(8.04, 20000.0), (8.905, 2700.0)]"""
    out = []
    for item in text.split(","):
        item = item.strip()
        if item:
            out.append(tuple(float(x) for x in item.split(":")))
    return out


def _continuum(text):
    comps = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        kind, _, value = item.partition(":")
        kind = kind.strip().lower()
        if kind == "flat":
            comps.append(Flat(float(value)))
        elif kind in ("one_over_e", "1/e"):
            comps.append(OneOverE(float(value)))
        else:
            raise ValueError(item)
    return tuple(comps)


def exposure_from(cp, spectrum=None):
    mass = _get(cp, "exposure", "detector_mass_kg")
    live = _get(cp, "exposure", "live_time_days")
    if spectrum is not None:
        mass = mass if mass is not None else spectrum.mass_kg
        live = live if live is not None else spectrum.live_time_days
    if mass is None or live is None:
        raise ConfigError("exposure needs detector_mass_kg and live_time_days "
                          "([exposure] section or spectrum metadata)")
    kw = {}
    for key in ("atomic_mass_g_per_mol", "emitting_electrons_per_atom", "atomic_number"):
        v = _get(cp, "exposure", key)
        if v is not None:
            kw[key] = v
    return ExposureConfig(detector_mass_kg=mass, live_time_days=live, **kw)


def _csl_opts(cp):
    return {
        "correlation_length_m": _get(cp, "csl", "correlation_length_m",
                                     default=DEFAULT_CORRELATION_LENGTH_M),
        "charge_sq_over_4pi": _get(cp, "csl", "charge_sq_over_4pi",
                                   default=DEFAULT_CHARGE_SQ_OVER_4PI),
    }


def _couplings(choice):
    if choice == "both":
        return [Coupling.NON_MASS_PROPORTIONAL, Coupling.MASS_PROPORTIONAL]
    return [Coupling.parse(choice)]


def rs_config_from(cp):
    keys = ("current_amp", "time_on_s", "time_off_s", "strip_length_m",
            "mean_free_path_m", "detection_efficiency", "geometric_acceptance")
    kw = {k: _get(cp, "pep", k, required=True) for k in keys}
    for k in ("capture_fraction", "roi_center_kev", "roi_half_width_kev",
              "resolution_fwhm_kev"):
        v = _get(cp, "pep", k)
        if v is not None:
            kw[k] = v
    return RsConfig(**kw)


def sim_config_from(cp, args):
    s = "simulate"
    preset = args.preset or _get(cp, s, "preset", str, "custom")
    seed = args.seed if args.seed is not None else _get(cp, s, "seed", int, 0)
    poisson = _get(cp, s, "poisson", _bool, True)
    overrides = {}
    for key in ("e_min", "e_max", "bin_width", "resolution_fwhm_kev"):
        v = _get(cp, s, key)
        if v is not None:
            overrides[key] = v
    if preset == "igex":
        alpha = _get(cp, s, "alpha", default=110.0)
        return igex_like_config(alpha=alpha, seed=seed, poisson=poisson, **overrides)
    if preset in ("vip-on", "vip-off"):
        forbidden = args.forbidden if args.forbidden is not None else _get(
            cp, s, "forbidden_intensity", default=0.0)
        for key in ("kalpha_intensity", "kbeta_intensity", "continuum_level"):
            v = _get(cp, s, key)
            if v is not None:
                overrides[key] = v
        return vip_like_config(preset == "vip-on", forbidden, seed=seed,
                               poisson=poisson, **overrides)
    if preset != "custom":
        raise ConfigError(f"unknown simulate preset {preset!r}")
    for key in ("e_min", "e_max", "bin_width"):
        if key not in overrides:
            raise ConfigError(f"missing [simulate] {key}")
    return SimConfig(
        lines=tuple(Line(*p) for p in _get(cp, s, "lines", _pairs, [])),
        continuum=_get(cp, s, "continuum", _continuum, ()),
        seed=seed, poisson=poisson, label=_get(cp, s, "label", str, ""),
        **overrides)


# -- output -------------------------------------------------------------------

def dump_json(doc):
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(text, output):
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8", newline="\n")


# -- commands -----------------------------------------------------------------

def cmd_fit_collapse(args, cp):
    spec = load_spectrum(args.input)
    if args.range:
        lo, hi = parse_range(args.range)
    elif cp.has_option("fit", "range"):
        lo, hi = parse_range(cp.get("fit", "range"))
    else:
        lo, hi = IGEX_FIT_RANGE_KEV
    cl = args.cl if args.cl is not None else _get(cp, "fit", "confidence_level", default=DEFAULT_CL)
    variance = _get(cp, "fit", "variance", str, "model")
    mode = _get(cp, "fit", "template", str, "integral")
    coupling = args.coupling or _get(cp, "fit", "coupling", str, "both")
    unit = _get(cp, "exposure", "unit", str, spec.unit)

    window = select_range(spec, lo, hi)
    fit = fit_with_limit(window, cl=cl, variance=variance, mode=mode)
    exposure = exposure_from(cp, spec)
    csl = _csl_opts(cp)
    limits = []
    for c in _couplings(coupling):
        lam = lambda_from_alpha(fit.alpha_upper, c, exposure, unit, CODATA, **csl)
        limits.append({
            "coupling": c.value,
            "lambda_limit_s^-1": lam,
            "confidence_level": cl,
            "alpha_upper": fit.alpha_upper,
        })
    doc = {
        "command": "fit-collapse",
        "input": str(args.input),
        "label": spec.label,
        "unit": unit,
        "range_kev": [lo, hi],
        "n_bins": len(window),
        "variance": variance,
        "template": mode,
        "fit": dict(fit.to_dict(), reduced_chi2=fit.reduced_chi2),
        "limits": limits,
        "exposure": {
            "detector_mass_kg": exposure.detector_mass_kg,
            "live_time_days": exposure.live_time_days,
            "atomic_mass_g_per_mol": exposure.atomic_mass_g_per_mol,
            "emitting_electrons_per_atom": exposure.emitting_electrons_per_atom,
            "electrons_in_detector": electrons_in_detector(exposure),
        },
        "csl": csl,
    }
    _emit(dump_json(doc), args.output)
    residuals = args.residuals
    if residuals is None and args.output is not None:
        residuals = Path(args.output).with_suffix(".residuals.csv")
    if residuals is not None:
        Path(residuals).write_text(residual_table(window, fit, variance, mode),
                                   encoding="utf-8", newline="\n")
    return EXIT_OK


def cmd_pep_limit(args, cp):
    if args.on is None or args.off is None:
        raise ConfigError("pep-limit needs --on and --off")
    on = load_spectrum(args.on)
    off = load_spectrum(args.off)
    cfg = rs_config_from(cp)
    n_sigma = _get(cp, "pep", "n_sigma", default=DEFAULT_N_SIGMA)
    ratio = cfg.live_time_ratio
    on_roi = counts_in_roi(on, cfg.roi_center_kev, cfg.roi_half_width_kev)
    off_roi = counts_in_roi(off, cfg.roi_center_kev, cfg.roi_half_width_kev)
    delta, sigma_delta = roi_excess(on_roi, off_roi, ratio)
    s_upper = signal_upper_limit(on_roi, off_roi, ratio, n_sigma)
    limit = beta2_limit(s_upper, cfg, CODATA, n_sigma)
    doc = {
        "command": "pep-limit",
        "on": str(args.on),
        "off": str(args.off),
        "roi_kev": {"center": cfg.roi_center_kev, "half_width": cfg.roi_half_width_kev},
        "on_roi": {"counts": on_roi[0], "sigma": on_roi[1]},
        "off_roi": {"counts": off_roi[0], "sigma": off_roi[1]},
        "live_time_ratio": ratio,
        "excess": delta,
        "excess_sigma": sigma_delta,
        "excess_significance": delta / sigma_delta if sigma_delta > 0 else 0.0,
        "excess_positive": delta > 0,
        "excess_significant": delta > n_sigma * sigma_delta,
        "limit": limit.to_dict(),
    }
    _emit(dump_json(doc), args.output)
    return EXIT_OK


def cmd_simulate(args, cp):
    cfg = sim_config_from(cp, args)
    _emit(format_spectrum(simulate(cfg)), args.output)
    return EXIT_OK


def cmd_convert(args, cp):
    if (args.lambda_rate is None) == (args.alpha is None):
        raise ConfigError("convert needs exactly one of --lambda or --alpha")
    choice = args.coupling or _get(cp, "fit", "coupling", str, "nmp")
    # a shared config may say "both" for fit-collapse; convert reports one
    coupling = Coupling.parse("nmp" if choice == "both" else choice)
    exposure = exposure_from(cp)
    unit = _get(cp, "exposure", "unit", str, "counts")
    csl = _csl_opts(cp)
    if args.lambda_rate is not None:
        lam = args.lambda_rate
        alpha = alpha_from_lambda(CslParams(lam, coupling=coupling, **csl), exposure, unit)
    else:
        alpha = args.alpha
        lam = lambda_from_alpha(alpha, coupling, exposure, unit, CODATA, **csl)
    doc = {"alpha": alpha, "lambda_s^-1": lam, "coupling": coupling.value, "unit": unit}
    _emit(json.dumps(doc, sort_keys=True, allow_nan=False) + "\n", args.output)
    return EXIT_OK


COMMANDS = {
    "fit-collapse": cmd_fit_collapse,
    "pep-limit": cmd_pep_limit,
    "simulate": cmd_simulate,
    "convert": cmd_convert,
}


def build_parser():
    p = argparse.ArgumentParser(prog="xraylimits", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI configuration file")
        sp.add_argument("--output", help="output file (default: stdout)")
        return sp

    fit = common(sub.add_parser("fit-collapse", help="fit alpha/E and bound the collapse rate"))
    fit.add_argument("--input", required=True)
    fit.add_argument("--range", help="fit window LO:HI in keV (default 4.5:48.5)")
    fit.add_argument("--cl", type=float)
    fit.add_argument("--coupling", choices=["nmp", "mp", "both"])
    fit.add_argument("--residuals", help="residual CSV path")

    pep = common(sub.add_parser("pep-limit", help="Ramberg-Snow bound from on/off spectra"))
    pep.add_argument("--on")
    pep.add_argument("--off")

    sim = common(sub.add_parser("simulate", help="write a synthetic spectrum"))
    sim.add_argument("--seed", type=int)
    sim.add_argument("--preset", choices=["custom", "igex", "vip-on", "vip-off"])
    sim.add_argument("--forbidden", type=float, help="forbidden-line intensity (vip-on)")

    conv = common(sub.add_parser("convert", help="convert between alpha and lambda"))
    conv.add_argument("--lambda", dest="lambda_rate", type=float)
    conv.add_argument("--alpha", type=float)
    conv.add_argument("--coupling", choices=["nmp", "mp"])
    return p


def _fail(exc, code):
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cp = read_config(args.config)
        return COMMANDS[args.command](args, cp)
    except OSError as exc:
        return _fail(exc, EXIT_IO)
    except (ValidationError, configparser.Error, ValueError) as exc:
        return _fail(exc, EXIT_VALIDATION)
    except (FitError, ArithmeticError) as exc:
        return _fail(exc, EXIT_NUMERICAL)
    except XrayLimitsError as exc:
        return _fail(exc, EXIT_VALIDATION)


if __name__ == "__main__":
    sys.exit(main())
