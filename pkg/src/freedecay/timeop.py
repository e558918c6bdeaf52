"""The Aharonov-Bohm time operator in momentum space.

    (T0 psi)^(k) = (i/4) (2 psi_hat'(k) / k - psi_hat(k) / k^2)

``||T0 psi||`` is finite exactly when ``psi_hat(0) = psi_hat'(0) = 0``, and
then ``|A(t)|^2 <= 4 ||T0 psi||^2 ||psi||^2 / t^2``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import BoundVacuousError, QuadratureError
from .moments import ZERO_TOL, moments, psi_hat_deriv_zero, zero_mask
from .propagation import AmplitudeSeries
from .quadrature import composite_gauss_legendre
from .wavefunctions import WaveFunction

__all__ = [
    "TimeOperatorReport",
    "t0_apply",
    "t0_norm",
    "decay_bound",
    "check_decay_bound",
]

PUNCTURE_START = 1e-2
PUNCTURE_HALVINGS = 20
PUNCTURE_TOL = 1e-8


@dataclass(frozen=True)
class TimeOperatorReport:
    """Finiteness of ``||T0 psi||`` and its value (``inf`` when not finite).

    ``singular_terms`` holds ``(psi_hat(0), psi_hat'(0))``, the coefficients
    of the ``1/k^2`` and ``1/k`` singularities of ``(T0 psi)^``.
    """

    finite: bool
    norm_value: float
    singular_terms: tuple
    puncture_radius: float = math.nan
    halvings: int = 0


def t0_apply(psi: WaveFunction, k) -> np.ndarray:
    """``(T0 psi)^(k)``; ``k = 0`` is rejected."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if np.any(k == 0):
        raise ValueError("t0_apply: k = 0 is a singular point of T0")
    return 0.25j * (2.0 * psi.psi_hat_deriv(k) / k - psi.psi_hat(k) / (k * k))


def _punctured_integral(psi, r, K, k_scale):
    # geometric panels from r out to k_scale, uniform beyond
    edges = [r]
    while edges[-1] < k_scale:
        edges.append(min(2.0 * edges[-1], k_scale))
    inner = np.asarray(edges)
    outer_panels = max(8, int(math.ceil((K - k_scale) / (0.25 * k_scale))))
    total = 0.0
    for a, b in zip(inner[:-1], inner[1:]):
        k, w = composite_gauss_legendre(a, b, 1, 20)
        total += np.sum(w * (np.abs(t0_apply(psi, k)) ** 2 + np.abs(t0_apply(psi, -k)) ** 2))
    if K > k_scale:
        k, w = composite_gauss_legendre(k_scale, K, outer_panels, 20)
        total += np.sum(w * (np.abs(t0_apply(psi, k)) ** 2 + np.abs(t0_apply(psi, -k)) ** 2))
    return float(total)


def t0_norm(psi: WaveFunction, tol=ZERO_TOL) -> TimeOperatorReport:
    """Classify and, when finite, evaluate ``||T0 psi||``.

    The norm is integrated outside a puncture ``|k| < r``. Since
    ``|(T0 psi)^|^2`` is even to leading order and bounded at the origin,
    the truncation error is linear in ``r`` and one Richardson step
    ``2 I(r/2) - I(r)`` removes it. ``r`` starts at ``1e-2 * k_scale`` and is
    halved until successive extrapolated values differ by less than
    ``1e-8``; no convergence within 20 halvings raises
    :class:`QuadratureError`.
    """
    mom = moments(psi, 2)
    d0 = psi_hat_deriv_zero(psi, 0, mom)
    d1 = psi_hat_deriv_zero(psi, 1, mom)
    zeros = zero_mask(mom, tol)
    finite = bool(zeros[0] and zeros[1])
    if not finite:
        return TimeOperatorReport(False, math.inf, (d0, d1))
    ks = psi.k_scale
    K = psi.momentum_extent
    r = PUNCTURE_START * ks
    prev_I = _punctured_integral(psi, r, K, ks)
    prev_R = None
    for h in range(1, PUNCTURE_HALVINGS + 1):
        I = _punctured_integral(psi, r / 2, K, ks)
        R = 2.0 * I - prev_I
        if prev_R is not None and abs(R - prev_R) < PUNCTURE_TOL:
            return TimeOperatorReport(True, math.sqrt(max(R, 0.0)), (d0, d1), r / 2, h)
        prev_I, prev_R, r = I, R, r / 2
    raise QuadratureError(
        f"t0_norm: puncture refinement did not settle after {PUNCTURE_HALVINGS} halvings "
        f"(last change {abs(R - prev_R) if prev_R is not None else math.inf:.3g})",
        achieved=abs(R - prev_R) if prev_R is not None else math.inf,
    )


def decay_bound(report: TimeOperatorReport, norm: float, t):
    """``4 ||T0 psi||^2 ||psi||^2 / t^2`` (``inf`` at ``t = 0``)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        return 4.0 * report.norm_value ** 2 * norm ** 2 / (t * t)


def check_decay_bound(psi: WaveFunction, series: AmplitudeSeries, report: TimeOperatorReport | None = None) -> np.ndarray:
    """Pointwise ``|A(t)|^2 <= 4 ||T0 psi||^2 ||psi||^2 / t^2``.

    Failed series points (infinite error estimate) report ``False``.
    Raises :class:`BoundVacuousError` when ``||T0 psi||`` is infinite.
    """
    report = report if report is not None else t0_norm(psi)
    if not report.finite:
        raise BoundVacuousError(
            "bound vacuous: ||T0 psi|| is infinite (psi_hat(0) or psi_hat'(0) nonzero)"
        )
    bound = decay_bound(report, psi.normalization, series.times)
    with np.errstate(divide="ignore"):
        log_bound = np.log(bound)
    ok = series.log_abs2 <= log_bound
    return ok & np.isfinite(series.err_est)
