"""Exact free evolution under ``H0 = P^2``.

Survival amplitude::

    A(t) = <psi, exp(-i t H0) psi> = int |psi_hat(k)|^2 exp(-i t k^2) dk

Three independent routes are available (:class:`Method`):

* ``ClosedForm`` -- the Laplace-transform formula of the Gaussian family;
* ``MomentumQuadrature`` -- the k-integral above. Below the crossover
  ``|t| K^2 <= 50`` an adaptive Gauss-Kronrod rule on the real axis is
  used. Above it the integral is taken along a steepest-descent contour when
  the state supplies an analytic continuation of ``|psi_hat|^2``, and by a
  Filon rule in ``lam = k^2`` otherwise;
* ``PositionKernel`` -- ``<psi, psi(., t)>`` with ``psi(., t)`` from the free
  propagator ``(4 pi i t)^(-1/2) exp(i (x-y)^2 / 4t)``.

Amplitudes of super-polynomially decaying states underflow long before the
fits that detect them run out, so every estimate also carries
``log |A|^2`` computed without forming ``A``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
import math

import numpy as np

from .errors import FreeDecayError, NormLossError, QuadratureError
from .quadrature import (
    adaptive_gauss_kronrod,
    composite_gauss_legendre,
    filon_chirp,
    segment_rule,
)
from .wavefunctions import MAX_RULE_NODES, SQRT_2PI, WaveFunction

__all__ = [
    "Method",
    "AmplitudeEstimate",
    "AmplitudeSeries",
    "CROSSOVER",
    "AMPLITUDE_TOL",
    "amplitude_estimate",
    "survival_amplitude",
    "survival_series",
    "propagate",
    "nonescape_probability",
]

CROSSOVER = 50.0
AMPLITUDE_TOL = 1e-8
NORM_TOL = 1e-6
_KERNEL_PHASE_PER_PANEL = 8.0
_KERNEL_WINDOW_POWER = 8


class Method(str, Enum):
    CLOSED_FORM = "ClosedForm"
    MOMENTUM_QUADRATURE = "MomentumQuadrature"
    POSITION_KERNEL = "PositionKernel"


@dataclass(frozen=True)
class AmplitudeEstimate:
    """One survival amplitude with its error estimate and scheme tag.

    ``log_abs2`` stays finite when ``value`` underflows to zero.
    """

    t: float
    value: complex
    err: float
    log_abs2: float
    method: Method
    scheme: str


@dataclass(frozen=True)
class AmplitudeSeries:
    """Survival amplitudes on a time grid.

    ``log_abs2`` defaults to ``log |amps|^2``; quadrature paths fill it
    directly so that it survives underflow of ``amps``.
    """

    times: np.ndarray
    amps: np.ndarray
    method: Method
    err_est: np.ndarray
    log_abs2: np.ndarray | None = None
    schemes: tuple = ()

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        amps = np.asarray(self.amps, dtype=complex).ravel()
        err = np.broadcast_to(np.asarray(self.err_est, dtype=float), times.shape).copy()
        if amps.shape != times.shape:
            raise ValueError("times and amps must have the same length")
        if self.log_abs2 is None:
            with np.errstate(divide="ignore"):
                logs = 2.0 * np.log(np.abs(amps))
        else:
            logs = np.asarray(self.log_abs2, dtype=float).ravel()
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "err_est", err)
        object.__setattr__(self, "log_abs2", logs)
        object.__setattr__(self, "method", Method(self.method))

    def __len__(self):
        return len(self.times)

    @property
    def abs2(self):
        return np.abs(self.amps) ** 2


def _log_abs2(value):
    a = abs(value)
    return 2.0 * math.log(a) if a > 0 else -math.inf


def _estimate(t, value, err, method, scheme, log_abs2=None):
    value = complex(value)
    if log_abs2 is None:
        log_abs2 = _log_abs2(value)
    return AmplitudeEstimate(float(t), value, float(err), float(log_abs2), method, scheme)


def _rho(psi):
    return lambda k: np.abs(psi.psi_hat(k)) ** 2


def _contour_amplitude(psi, t, path, panels=24, order=20):
    """``int rho(k) exp(-i t k^2) dk`` along ``path``; returns (scaled value, log scale, err)."""

    def run(npan):
        nodes, wts = [], []
        for z0, z1 in zip(path[:-1], path[1:]):
            z, w = segment_rule(z0, z1, npan, order)
            nodes.append(z)
            wts.append(w)
        z = np.concatenate(nodes)
        w = np.concatenate(wts)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            logf = psi.log_rho(z) - 1j * t * z * z
        logf = np.where(np.isfinite(logf.real), logf, -np.inf + 0j)
        return z, w, logf

    z, w, logf = run(panels)
    ref = float(np.max(logf.real))
    fine = np.sum(w * np.exp(logf - ref))
    _, wc, logc = run(panels // 2)
    coarse = np.sum(wc * np.exp(logc - ref))
    scale = float(np.sum(np.abs(w) * np.exp(logf.real - ref)))
    err = abs(fine - coarse) + 64 * np.finfo(float).eps * scale
    return complex(fine), ref, err


def _momentum_quadrature(psi, t, scheme=None):
    K = psi.momentum_extent
    if t == 0:
        n = psi.normalization
        return _estimate(t, n * n, 0.0, Method.MOMENTUM_QUADRATURE, "identity")
    if scheme is None:
        if abs(t) * K * K <= CROSSOVER:
            scheme = "gauss-kronrod"
        elif psi.descent_path(t) is not None:
            scheme = "steepest-descent"
        else:
            scheme = "filon"
    rho = _rho(psi)
    if scheme == "gauss-kronrod":
        rule = psi.momentum_rule()
        lo, hi = float(rule.nodes.min()), float(rule.nodes.max())
        if rule.uniform:
            lo, hi = -K, K
        if psi.kind == "bump":
            lo, hi = psi.d - psi.k0, psi.d + psi.k0
        f = lambda k: rho(np.array([k]))[0] * np.exp(-1j * t * k * k)
        val, err = adaptive_gauss_kronrod(f, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=2000)
        return _estimate(t, val, err, Method.MOMENTUM_QUADRATURE, scheme)
    if scheme == "filon":
        h = 2.0 * K / max(psi.position_extent, 1.0)
        val, err = filon_chirp(rho, t, K, h, tol=1e-11)
        return _estimate(t, val, err, Method.MOMENTUM_QUADRATURE, scheme)
    if scheme == "steepest-descent":
        path = psi.descent_path(t)
        if path is None:
            raise QuadratureError(f"no descent contour available for this state at t={t}")
        scaled, ref, err = _contour_amplitude(psi, t, path)
        # amplitude = scaled * exp(ref); keep the logarithm when it underflows
        log_abs2 = 2.0 * (ref + math.log(abs(scaled))) if scaled != 0 else -math.inf
        # exp underflows quietly to zero; log_abs2 keeps the information
        value = scaled * math.exp(ref)
        return _estimate(t, value, err * math.exp(ref), Method.MOMENTUM_QUADRATURE, scheme, log_abs2)
    raise ValueError(f"unknown quadrature scheme {scheme!r}")


def _kernel_rule(psi, t, extra=0.0):
    X = psi.position_extent
    h = _KERNEL_PHASE_PER_PANEL * 2.0 * abs(t) / (2.0 * X + extra)
    return h


def _checked_rule(rule, bandwidth, what):
    """Reject oversized rules and uniform rules too coarse for the integrand.

    ``bandwidth(X)`` is the largest local wavenumber of the integrand on a
    window of half-width ``X``; a trapezoid rule resolves it when the step
    stays below ``pi / bandwidth``.
    """
    n = len(rule.nodes)
    if n > MAX_RULE_NODES:
        raise QuadratureError(f"{what}: needs {n} nodes (limit {MAX_RULE_NODES})")
    if rule.uniform and n > 1:
        step = float(rule.nodes[1] - rule.nodes[0])
        X = float(np.max(np.abs(rule.nodes)))
        if step * bandwidth(X) > math.pi:
            raise QuadratureError(
                f"{what}: sample spacing {step:.3g} does not resolve the chirp "
                f"(needs < {math.pi / bandwidth(X):.3g})"
            )
    return rule


def _position_kernel(psi, t):
    if t == 0:
        n = psi.normalization
        return _estimate(t, n * n, 0.0, Method.POSITION_KERNEL, "identity")
    h = _kernel_rule(psi, t)
    pref = 1.0 / np.sqrt(4j * np.pi * t)

    def run(coarse):
        # the kernel pairs psi with psi, so the window must bound the L1 tail too
        rule = _checked_rule(psi.position_rule(weight_power=_KERNEL_WINDOW_POWER, h_max=h, coarse=coarse),
                             lambda X: psi.momentum_extent + X / abs(t), f"position kernel at t={t}")
        x, a = rule.nodes, rule.weights * rule.values
        left = np.conj(a) * np.exp(1j * x * x / (4 * t))
        right = a * np.exp(1j * x * x / (4 * t))
        total = 0.0 + 0.0j
        for s in range(0, len(x), 1024):
            xs = x[s:s + 1024]
            total += left[s:s + 1024] @ (np.exp(-1j * xs[:, None] * x[None, :] / (2 * t)) @ right)
        return pref * total, rule

    fine, rule = run(False)
    coarse, _ = run(True)
    a = np.abs(rule.weights * rule.values)
    edge = np.argsort(np.abs(rule.nodes))[-max(16, len(a) // 20):]
    l1 = float(a.sum())
    tail = 2.0 * abs(pref) * l1 * float(a[edge].sum())
    err = abs(fine - coarse) + tail + 64 * np.finfo(float).eps * abs(pref) * l1 * l1
    return _estimate(t, fine, err, Method.POSITION_KERNEL, "gauss-legendre")


def amplitude_estimate(psi: WaveFunction, t: float, method=None, scheme=None) -> AmplitudeEstimate:
    """Survival amplitude with error estimate; ``method`` defaults to the closed form if any."""
    t = float(t)
    if method is None:
        method = Method.CLOSED_FORM if psi.closed_form_amplitude(0.0) is not None else Method.MOMENTUM_QUADRATURE
    method = Method(method)
    if method is Method.CLOSED_FORM:
        val = psi.closed_form_amplitude(t)
        if val is None:
            raise ValueError(f"no closed form for state kind {psi.kind!r}")
        # principal-branch power: rounding only
        m = getattr(psi, "m", 0)
        return _estimate(t, val, 8 * (m + 1) * np.finfo(float).eps * abs(val), method, "closed-form")
    if method is Method.MOMENTUM_QUADRATURE:
        return _momentum_quadrature(psi, t, scheme)
    return _position_kernel(psi, t)


def survival_amplitude(psi: WaveFunction, t: float, method=None, scheme=None, tol=AMPLITUDE_TOL) -> complex:
    """``<psi, exp(-i t H0) psi>``.

    Raises :class:`QuadratureError` (carrying the achieved estimate) when
    the error estimate exceeds ``tol``.
    """
    est = amplitude_estimate(psi, t, method, scheme)
    if not est.err <= tol:
        raise QuadratureError(
            f"survival_amplitude at t={t}: error estimate {est.err:.3g} above {tol:.3g}",
            achieved=est.err,
        )
    return est.value


def survival_series(psi: WaveFunction, times, method=None, scheme=None, workers=None, tol=AMPLITUDE_TOL) -> AmplitudeSeries:
    """Amplitudes on a strictly increasing time grid.

    Points that fail are kept with ``amp = nan`` and ``err_est = inf``.
    With ``workers`` the points run on a thread pool; each point uses its
    own fixed quadrature mesh, so the result is identical to a sequential run.
    """
    times = np.asarray(times, dtype=float).ravel()
    if times.size > 1 and not np.all(np.diff(times) > 0):
        raise ValueError("times must be strictly increasing")
    if method is None:
        method = Method.CLOSED_FORM if psi.closed_form_amplitude(0.0) is not None else Method.MOMENTUM_QUADRATURE
    method = Method(method)

    def one(t):
        try:
            est = amplitude_estimate(psi, t, method, scheme)
            if not est.err <= tol:
                return complex(np.nan, np.nan), math.inf, est.log_abs2, est.scheme + ":failed"
            return est.value, est.err, est.log_abs2, est.scheme
        except FreeDecayError:
            return complex(np.nan, np.nan), math.inf, math.nan, "failed"

    if workers and times.size > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, times))
    else:
        rows = [one(t) for t in times]
    amps = np.array([r[0] for r in rows], dtype=complex)
    errs = np.array([r[1] for r in rows], dtype=float)
    logs = np.array([r[2] for r in rows], dtype=float)
    return AmplitudeSeries(times, amps, method, errs, logs, tuple(r[3] for r in rows))


def _is_uniform(x):
    if x.size < 16:
        return False
    d = np.diff(x)
    return bool(np.all(d > 0) and np.allclose(d, d[0], rtol=1e-9, atol=0))


def propagate(psi: WaveFunction, t: float, x_grid, method="kernel", check_norm=True) -> np.ndarray:
    """``psi(x, t) = (exp(-i t H0) psi)(x)`` on ``x_grid``.

    ``method="kernel"`` integrates the free propagator in position space;
    ``method="momentum"`` multiplies by ``exp(-i t k^2)`` in momentum space.
    When ``x_grid`` is uniform with at least 16 points and ``check_norm`` is
    set, a norm deficit above ``1e-6`` raises :class:`NormLossError`.
    """
    t = float(t)
    x_grid = np.atleast_1d(np.asarray(x_grid, dtype=float))
    xmax = float(np.max(np.abs(x_grid))) if x_grid.size else 0.0
    if method == "kernel":
        if t == 0:
            raise ValueError("t = 0 is the identity; the kernel path needs t != 0")
        h = _KERNEL_PHASE_PER_PANEL * 2.0 * abs(t) / (xmax + psi.position_extent)
        rule = _checked_rule(psi.position_rule(weight_power=_KERNEL_WINDOW_POWER, h_max=h),
                             lambda X: psi.momentum_extent + (X + xmax) / (2 * abs(t)),
                             f"propagate (kernel) at t={t}")
        y, a = rule.nodes, rule.weights * rule.values
        pref = 1.0 / np.sqrt(4j * np.pi * t)
        out = np.empty(x_grid.shape, dtype=complex)
        for s in range(0, x_grid.size, 256):
            xs = x_grid[s:s + 256]
            out[s:s + 256] = np.exp(1j * (xs[:, None] - y[None, :]) ** 2 / (4 * t)) @ a
        out *= pref
    elif method == "momentum":
        K = psi.momentum_extent
        h = _KERNEL_PHASE_PER_PANEL / (xmax + 2.0 * abs(t) * K + 1.0)
        rule = _checked_rule(psi.momentum_rule(weight_power=_KERNEL_WINDOW_POWER, h_max=h),
                             lambda k: xmax + 2.0 * abs(t) * k,
                             f"propagate (momentum) at t={t}")
        k, a = rule.nodes, rule.weights * rule.values * np.exp(-1j * t * rule.nodes ** 2)
        out = np.empty(x_grid.shape, dtype=complex)
        for s in range(0, x_grid.size, 256):
            xs = x_grid[s:s + 256]
            out[s:s + 256] = np.exp(1j * xs[:, None] * k[None, :]) @ a
        out /= SQRT_2PI
    else:
        raise ValueError(f"unknown propagation method {method!r}")
    if check_norm and _is_uniform(x_grid):
        dx = x_grid[1] - x_grid[0]
        got = float(np.sum(np.abs(out) ** 2) * dx)
        want = psi.normalization ** 2
        if want > 0 and (want - got) / want > NORM_TOL:
            raise NormLossError(
                f"propagate: window keeps {got / want:.9f} of the norm at t={t}; widen x_grid"
            )
    return out


def nonescape_probability(psi: WaveFunction, t: float, B, method="kernel") -> float:
    """``int_B |psi(x, t)|^2 dx`` for a bounded interval ``B = (a, b)``."""
    a, b = map(float, B)
    if not (math.isfinite(a) and math.isfinite(b)) or b < a:
        raise ValueError("B must be a bounded interval (a, b) with a <= b")
    if a == b:
        return 0.0
    width = b - a
    panels = max(8, int(math.ceil(width / (0.25 * min(psi.position_extent, width) + 1e-300))))
    panels = min(panels, 4000)
    x, w = composite_gauss_legendre(a, b, panels, 16)
    if t == 0:
        vals = psi.psi(x)
    else:
        vals = propagate(psi, t, x, method=method, check_norm=False)
    return float(np.sum(w * np.abs(vals) ** 2))
