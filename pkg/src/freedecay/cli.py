"""Command-line front end.

    freedecay survival    [options]   CSV (or JSON) of A(t) on a time grid
    freedecay asymptotics [options]   JSON: detected order, coefficients, fit
    freedecay timeop      [options]   JSON: ||T0 psi|| and the decay bound

Options may also come from an INI file (``--config``), one ``[experiment]``
section of ``key = value`` lines using the flag names; flags win.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import configparser
from dataclasses import asdict, dataclass, fields
import json
import math
import sys

import numpy as np

from . import __version__
from .asymptotics import build_model, fit_power_law, leading_constant
from .errors import FreeDecayError
from .moments import MAX_ORDER, ZERO_TOL
from .propagation import AMPLITUDE_TOL, Method, survival_series
from .timeop import check_decay_bound, decay_bound, t0_norm
from .wavefunctions import (
    MomentumGrid,
    PositionGrid,
    make_gaussian_family,
    make_momentum_bump,
)

__all__ = ["ExperimentConfig", "ConfigError", "main", "load_grid_file"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
STATES = ("gaussian", "bump", "grid")
METHODS = {
    "auto": None,
    "closed-form": Method.CLOSED_FORM,
    "momentum": Method.MOMENTUM_QUADRATURE,
    "kernel": Method.POSITION_KERNEL,
}
FIT_POINTS = 32


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    state: str = "gaussian"
    m: int = 0
    a0: float = 0.5
    d: float = 2.0
    k0: float = 1.0
    input: str | None = None
    t_lo: float = 0.1
    t_hi: float = 1e4
    t_count: int = 32
    t_scale: str = "log"
    order: int = 2
    fit_window: tuple | None = None
    method: str = "auto"
    out: str | None = None
    format: str | None = None
    tol: float = ZERO_TOL
    workers: int = 0

    def validate(self):
        if self.state not in STATES:
            raise ConfigError(f"unknown state family {self.state!r} (expected one of {', '.join(STATES)})")
        if self.state == "gaussian" and (self.m < 0 or not self.a0 > 0):
            raise ConfigError("gaussian state needs m >= 0 and a0 > 0")
        if self.state == "bump" and not self.d > self.k0 > 0:
            raise ConfigError("bump state needs d > k0 > 0")
        if self.state == "grid" and not self.input:
            raise ConfigError("grid state needs --input")
        if self.t_scale not in ("log", "lin"):
            raise ConfigError("--t-scale must be 'log' or 'lin'")
        if self.t_count < 0 or self.t_count == 1:
            raise ConfigError("--t-count must be 0 (empty grid) or at least 2")
        if self.t_count >= 2:
            if not self.t_lo < self.t_hi:
                raise ConfigError("need t_lo < t_hi")
            if self.t_scale == "log" and not self.t_lo > 0:
                raise ConfigError("log time grid needs t_lo > 0")
            if self.t_lo < 0:
                raise ConfigError("times must be non-negative")
        if not 0 <= self.order <= MAX_ORDER:
            raise ConfigError(f"--order must lie in [0, {MAX_ORDER}]")
        if self.fit_window is not None:
            lo, hi = self.fit_window
            if not 0 < lo < hi:
                raise ConfigError("--fit-window needs 0 < lo < hi")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if not self.tol > 0:
            raise ConfigError("--tol must be positive")
        if self.format not in (None, "csv", "json"):
            raise ConfigError("--format must be csv or json")
        if self.command != "survival" and self.format == "csv":
            raise ConfigError(f"{self.command} writes JSON only")
        return self

    def times(self):
        if self.t_count == 0:
            return np.empty(0)
        if self.t_scale == "log":
            return np.logspace(math.log10(self.t_lo), math.log10(self.t_hi), self.t_count)
        return np.linspace(self.t_lo, self.t_hi, self.t_count)

    def echo(self):
        """Config as sorted ``(key, text)`` pairs; output paths excluded."""
        out = []
        for k, v in sorted(asdict(self).items()):
            if k == "out":
                continue
            if isinstance(v, tuple):
                v = " ".join(_fmt(x) for x in v)
            elif isinstance(v, float):
                v = _fmt(v)
            out.append((k, "" if v is None else str(v)))
        return out


# -- parsing --------------------------------------------------------------------


def _fmt(x):
    """Shortest round-trip text of a float; ``inf``/``nan`` spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _jnum(x):
    x = float(x)
    return x if math.isfinite(x) else _fmt(x)


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key, text):
    try:
        if key == "fit_window":
            parts = text.replace(",", " ").split()
            if len(parts) != 2:
                raise ValueError
            return (float(parts[0]), float(parts[1]))
        if key in ("m", "t_count", "order", "workers"):
            return int(text)
        if key in ("a0", "d", "k0", "t_lo", "t_hi", "tol"):
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"bad value {text!r} for {key}") from None


def _read_config_file(path):
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values = {}
    for section in parser.sections():
        for key, text in parser.items(section):
            key = key.replace("-", "_")
            if key not in _TYPES or key == "command":
                raise ConfigError(f"unknown config key {key!r} in [{section}]")
            values[key] = _coerce(key, text)
    return values


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with an [experiment] section")
    common.add_argument("--state", help="gaussian | bump | grid")
    common.add_argument("--m", type=int, help="zero-momentum order of the Gaussian family")
    common.add_argument("--a0", type=float, help="Gaussian width parameter")
    common.add_argument("--d", type=float, help="bump centre")
    common.add_argument("--k0", type=float, help="bump half-width")
    common.add_argument("--input", help="grid file (header: representation=position|momentum spacing=h)")
    common.add_argument("--t-lo", type=float)
    common.add_argument("--t-hi", type=float)
    common.add_argument("--t-count", type=int)
    common.add_argument("--t-scale", choices=("log", "lin"))
    common.add_argument("--order", type=int, help="expansion order n")
    common.add_argument("--fit-window", nargs=2, type=float, metavar=("LO", "HI"),
                        help="fit window in absolute time (default [1e2, 1e4] in natural units)")
    common.add_argument("--method", choices=tuple(METHODS))
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--tol", type=float, help="zero threshold for moments")
    common.add_argument("--workers", type=int, help="threads for time points")

    parser = argparse.ArgumentParser(prog="freedecay", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"freedecay {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("survival", parents=[common], help="survival amplitude on a time grid")
    sub.add_parser("asymptotics", parents=[common], help="expansion coefficients and decay fit")
    sub.add_parser("timeop", parents=[common], help="time-operator norm and decay bound")
    return parser


def make_config(args) -> ExperimentConfig:
    values = _read_config_file(args.config) if args.config else {}
    for key in _TYPES:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = tuple(v) if key == "fit_window" else v
    values["command"] = args.command
    return ExperimentConfig(**values).validate()


def load_grid_file(path):
    """Read a sampled state.

    The first line is a header of ``key=value`` tokens naming the
    ``representation`` (position or momentum) and the ``spacing``; the rest
    are three whitespace-separated columns: coordinate, real part, imaginary part.
    """
    try:
        with open(path) as fh:
            header = fh.readline().lstrip("#").split()
        data = np.loadtxt(path, comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read grid file {path}: {exc}") from None
    meta = dict(tok.split("=", 1) for tok in header if "=" in tok)
    rep = meta.get("representation")
    if rep not in ("position", "momentum"):
        raise ConfigError("grid header must declare representation=position or representation=momentum")
    try:
        step = float(meta["spacing"])
    except (KeyError, ValueError):
        raise ConfigError("grid header must declare spacing=<positive float>") from None
    if data.shape[1] != 3:
        raise ConfigError("grid file needs three columns: coordinate, re, im")
    coord = data[:, 0]
    if not step > 0 or not np.allclose(np.diff(coord), step, rtol=1e-9, atol=1e-12 * step):
        raise ConfigError("grid coordinates are not uniform with the declared spacing")
    samples = data[:, 1] + 1j * data[:, 2]
    try:
        cls = PositionGrid if rep == "position" else MomentumGrid
        return cls(samples, coord[0], step)
    except ValueError as exc:
        raise ConfigError(f"grid file {path}: {exc}") from None


def make_state(cfg: ExperimentConfig):
    if cfg.state == "gaussian":
        return make_gaussian_family(cfg.m, cfg.a0)
    if cfg.state == "bump":
        return make_momentum_bump(cfg.d, cfg.k0)
    return load_grid_file(cfg.input)


# -- reports --------------------------------------------------------------------


def _metadata(cfg, command):
    return {
        "tool": "freedecay",
        "version": __version__,
        "command": command,
        "config": dict(cfg.echo()),
        "tolerances": {
            "amplitude_abs": _jnum(AMPLITUDE_TOL),
            "zero_threshold": _jnum(cfg.tol),
            "max_moment_order": MAX_ORDER,
        },
    }


def _series(cfg, psi, times):
    return survival_series(psi, times, method=METHODS[cfg.method], workers=cfg.workers or None)


def _failed(series):
    bad = ~np.isfinite(series.err_est)
    if bad.any():
        ts = ", ".join(_fmt(t) for t in series.times[bad][:5])
        return f"survival_series: no certified amplitude at t = {ts}"
    return None


def run_survival(cfg):
    psi = make_state(cfg)
    s = _series(cfg, psi, cfg.times())
    fmt = cfg.format or "csv"
    if fmt == "json":
        rows = [
            {"t": _jnum(t), "re_A": _jnum(a.real), "im_A": _jnum(a.imag),
             "abs2_A": _jnum(abs(a) ** 2), "log_abs2_A": _jnum(la), "method": s.method.value,
             "scheme": sc, "err_est": _jnum(e)}
            for t, a, la, e, sc in zip(s.times, s.amps, s.log_abs2, s.err_est, s.schemes)
        ]
        text = _dump_json({"metadata": _metadata(cfg, "survival"), "rows": rows})
    else:
        meta = _metadata(cfg, "survival")
        lines = [f"# freedecay {__version__} survival"]
        lines += [f"# config {k} = {v}" for k, v in meta["config"].items()]
        lines += [f"# tolerance {k} = {v}" for k, v in meta["tolerances"].items()]
        lines.append("t,re_A,im_A,abs2_A,method,err_est")
        for t, a, e in zip(s.times, s.amps, s.err_est):
            lines.append(",".join([_fmt(t), _fmt(a.real), _fmt(a.imag), _fmt(abs(a) ** 2), s.method.value, _fmt(e)]))
        text = "\n".join(lines) + "\n"
    return text, _failed(s)


def _default_fit_window(psi):
    ts = psi.time_scale
    return (1e2 * ts, 1e4 * ts)


def run_asymptotics(cfg):
    psi = make_state(cfg)
    model = build_model(psi, cfg.order, tol=cfg.tol, strict=True)
    m = model.detected_m
    lo, hi = cfg.fit_window or _default_fit_window(psi)
    s = _series(cfg, psi, np.logspace(math.log10(lo), math.log10(hi), FIT_POINTS))
    failed = _failed(s)
    if failed:
        return None, failed
    fit = fit_power_law(s, (lo, hi))
    x = np.log(s.times)
    resid = s.log_abs2 - (fit.log_prefactor + fit.exponent * x)
    report = {
        "metadata": _metadata(cfg, "asymptotics"),
        "detected_m": "beyond range" if m is None else m,
        "order_n": model.order_n,
        "coefficients": [
            {"j": j, "re": _jnum(c.real), "im": _jnum(c.imag), "abs_err": _jnum(e)}
            for j, (c, e) in enumerate(zip(model.coeffs, model.coeff_err))
        ],
        "leading_constant": None if m is None else _jnum(leading_constant(psi, tol=cfg.tol)),
        "fit": {
            "window": [_jnum(lo), _jnum(hi)],
            "n_points": fit.n_points,
            "exponent": _jnum(fit.exponent),
            "log_prefactor": _jnum(fit.log_prefactor),
            "rms_residual": _jnum(fit.rms_residual),
            "residuals": [_jnum(r) for r in resid],
        },
    }
    if m is None:
        report["expected_exponent"] = None
        report["pass"] = "super-polynomial"
    else:
        report["expected_exponent"] = -(2 * m + 1)
        report["pass"] = bool(abs(fit.exponent + (2 * m + 1)) <= 0.05)
    return _dump_json(report), None


def run_timeop(cfg):
    psi = make_state(cfg)
    rep = t0_norm(psi, tol=cfg.tol)
    report = {
        "metadata": _metadata(cfg, "timeop"),
        "finite": rep.finite,
        "norm_value": _jnum(rep.norm_value),
        "singular_terms": [{"re": _jnum(z.real), "im": _jnum(z.imag)} for z in rep.singular_terms],
    }
    failed = None
    times = cfg.times()
    if not rep.finite:
        report["bound_status"] = "vacuous"
    elif times.size:
        s = _series(cfg, psi, times)
        ok = check_decay_bound(psi, s, rep)
        bound = decay_bound(rep, psi.normalization, s.times)
        report["bound"] = {
            "all_hold": bool(ok.all()),
            "points": [
                {"t": _jnum(t), "abs2_A": _jnum(math.exp(la)) if np.isfinite(la) else _jnum(abs(a) ** 2),
                 "bound": _jnum(b), "holds": bool(h)}
                for t, a, la, b, h in zip(s.times, s.amps, s.log_abs2, bound, ok)
            ],
        }
        failed = _failed(s)
    return _dump_json(report), failed


def _dump_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


RUNNERS = {"survival": run_survival, "asymptotics": run_asymptotics, "timeop": run_timeop}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        cfg = make_config(args)
        text, failure = RUNNERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"freedecay: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FreeDecayError as exc:
        print(f"freedecay {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if text is not None:
        if cfg.out:
            with open(cfg.out, "w", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    if failure:
        print(f"freedecay {cfg.command}: {failure}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK
