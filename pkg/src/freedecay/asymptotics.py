"""Long-time expansion of the survival amplitude and power-law diagnostics.

The amplitude admits the partial sum

    A(t) ~ sum_{j=0}^{n} c_j (i t)^(-j-1/2),
    c_j = pi^-1 (-1)^(j-1) Gamma(j+1/2) <psi, G_2j psi>,

and when ``psi_hat`` has a zero of exact order ``m`` at the origin the
survival probability behaves like

    |A(t)|^2 ~ t^(-2m-1) Gamma(m+1/2)^2 |psi_hat^(m)(0)|^4 / (m!)^4.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import OrderClampError, SuperPolynomialError
from .moments import (
    MAX_ORDER,
    ZERO_TOL,
    g_inner_products,
    moments,
    psi_hat_deriv_zero,
    zero_momentum_order,
)
from .propagation import AmplitudeSeries, survival_series
from .wavefunctions import WaveFunction

__all__ = [
    "AsymptoticModel",
    "DecayFit",
    "CERT_REL",
    "gamma_half",
    "build_model",
    "eval_partial_sum",
    "leading_constant",
    "leading_survival_probability",
    "fit_power_law",
    "remainder_diagnostic",
]

# three significant digits
CERT_REL = 5e-4
MIN_FIT_POINTS = 8


def gamma_half(j: int) -> float:
    """``Gamma(j + 1/2)`` from ``Gamma(1/2) = sqrt(pi)`` by upward recurrence."""
    if j < 0:
        raise ValueError("j must be non-negative")
    g = math.sqrt(math.pi)
    for i in range(1, j + 1):
        g *= i - 0.5
    return g


@dataclass(frozen=True)
class AsymptoticModel:
    """Coefficients ``c_0..c_n`` of the partial sum.

    ``detected_m`` is ``None`` when every derivative of ``psi_hat`` at the
    origin up to the configured maximum order is zero ("beyond range").
    ``requested_n`` differs from ``order_n`` when uncertified terms were
    dropped.
    """

    order_n: int
    coeffs: np.ndarray
    coeff_err: np.ndarray
    detected_m: int | None
    requested_n: int

    @property
    def beyond_range(self):
        return self.detected_m is None


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit ``log |A|^2 = log_prefactor + exponent * log t``."""

    exponent: float
    log_prefactor: float
    rms_residual: float
    window: tuple
    n_points: int


def _certified(c, err, zero):
    return zero or err <= CERT_REL * abs(c)


def build_model(psi: WaveFunction, n: int, max_order=MAX_ORDER, tol=ZERO_TOL, strict=False) -> AsymptoticModel:
    """Expansion coefficients through order ``n``.

    Moments up to ``max(2n, max_order)`` are needed; ``2n > max_order``
    raises :class:`OrderClampError` because the binomial sums are not
    trusted past that order. Terms whose error does not certify three
    significant digits are dropped from the top: ``order_n`` is clamped to
    the last certified index, or :class:`OrderClampError` is raised if
    ``strict``.
    """
    if n < 0:
        raise ValueError("expansion order must be non-negative")
    if 2 * n > max_order:
        raise OrderClampError(
            f"build_model: order n={n} needs moments through {2 * n}, above the maximum {max_order}",
            certified_order=max_order // 2,
        )
    mom = moments(psi, max_order)
    m = zero_momentum_order(psi, tol=tol, max_order=max_order, mom=mom)
    gip = g_inner_products(psi, n, mom)
    coeffs = np.empty(n + 1, dtype=complex)
    errs = np.empty(n + 1)
    for j in range(n + 1):
        f = (-1) ** (j - 1) * gamma_half(j) / math.pi
        coeffs[j] = f * gip.values[j]
        errs[j] = abs(f) * gip.abs_err[j]
    scale = 1.0 + float(np.sum(np.abs(coeffs)))
    order_n = -1
    for j in range(n + 1):
        # below the detected order the coefficients vanish with the moments
        zero = (m is None or j < m) and abs(coeffs[j]) <= max(tol * scale, errs[j])
        if not _certified(coeffs[j], errs[j], zero):
            break
        if zero:
            coeffs[j] = 0.0
        order_n = j
    if order_n < n:
        msg = (
            f"build_model: coefficient c_{order_n + 1} is not certified to three digits "
            f"(requested order {n}, certified through {order_n})"
        )
        if strict or order_n < 0:
            raise OrderClampError(msg, certified_order=order_n)
    return AsymptoticModel(
        order_n=order_n,
        coeffs=coeffs[: order_n + 1].copy(),
        coeff_err=errs[: order_n + 1].copy(),
        detected_m=m,
        requested_n=n,
    )


def eval_partial_sum(model: AsymptoticModel, t):
    """``sum_j c_j (i t)^(-j-1/2)`` on the principal branch; ``t > 0`` only."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > 0)):
        raise ValueError("eval_partial_sum needs t > 0")
    out = np.zeros(t_arr.shape, dtype=complex)
    for j, c in enumerate(model.coeffs):
        if c == 0:
            continue
        # (i t)^(-j-1/2) = t^(-j-1/2) exp(-i pi (2j+1)/4)
        out += c * t_arr ** (-j - 0.5) * np.exp(-0.25j * math.pi * (2 * j + 1))
    return complex(out) if out.ndim == 0 else out


def _order_or_raise(psi, tol, max_order):
    mom = moments(psi, max_order)
    m = zero_momentum_order(psi, tol=tol, max_order=max_order, mom=mom)
    if m is None:
        raise SuperPolynomialError(
            "super-polynomial class: every derivative of psi_hat at k=0 "
            f"through order {max_order} vanishes"
        )
    return m, mom


def leading_constant(psi: WaveFunction, tol=ZERO_TOL, max_order=MAX_ORDER) -> float:
    """``Gamma(m+1/2)^2 |psi_hat^(m)(0)|^4 / (m!)^4`` for the detected ``m``."""
    m, mom = _order_or_raise(psi, tol, max_order)
    d = abs(psi_hat_deriv_zero(psi, m, mom))
    return gamma_half(m) ** 2 * d ** 4 / math.factorial(m) ** 4


def leading_survival_probability(psi: WaveFunction, t, tol=ZERO_TOL, max_order=MAX_ORDER):
    """Leading-order ``|A(t)|^2``; raises :class:`SuperPolynomialError` for C_i-type states."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > 0)):
        raise ValueError("leading_survival_probability needs t > 0")
    m, _ = _order_or_raise(psi, tol, max_order)
    val = leading_constant(psi, tol, max_order) * t_arr ** (-2 * m - 1)
    return float(val) if val.ndim == 0 else val


def fit_power_law(series: AmplitudeSeries, window=None) -> DecayFit:
    """Fit ``log |A|^2`` against ``log t`` on the closed window.

    Points with infinite error estimates are skipped. Uses the series'
    ``log_abs2`` so underflowed amplitudes still contribute.
    """
    t = series.times
    if window is None:
        window = (float(t.min()), float(t.max())) if t.size else (0.0, 0.0)
    lo, hi = map(float, window)
    if not 0 < lo < hi:
        raise ValueError("fit window must satisfy 0 < t_lo < t_hi")
    sel = (t >= lo) & (t <= hi) & np.isfinite(series.err_est)
    y = series.log_abs2[sel]
    if np.any(~np.isfinite(y)):
        raise ValueError("fit_power_law: |A|^2 vanishes inside the window")
    if sel.sum() < MIN_FIT_POINTS:
        raise ValueError(
            f"fit_power_law: window [{lo:g}, {hi:g}] holds {int(sel.sum())} points, "
            f"need at least {MIN_FIT_POINTS}"
        )
    x = np.log(t[sel])
    A = np.column_stack([np.ones_like(x), x])
    (c0, p), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (c0 + p * x)
    return DecayFit(
        exponent=float(p),
        log_prefactor=float(c0),
        rms_residual=float(np.sqrt(np.mean(resid ** 2))),
        window=(lo, hi),
        n_points=int(sel.sum()),
    )


def remainder_diagnostic(psi: WaveFunction, n: int, times, method=None) -> np.ndarray:
    """Scaled remainder ``|A(t) - S_n(t)| t^(n+1/2)`` on ``times``.

    ``S_n`` is the certified partial sum; uncertified orders raise
    :class:`OrderClampError` rather than silently shortening the sum.
    """
    times = np.asarray(times, dtype=float)
    model = build_model(psi, n, strict=True)
    series = survival_series(psi, times, method=method)
    return np.abs(series.amps - eval_partial_sum(model, times)) * times ** (n + 0.5)
