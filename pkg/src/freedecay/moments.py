"""Position moments, the integral operators G_j, and the zero-momentum order.

``G_j`` acts as

    (G_j psi)(x) = -1/(2 j!) int |x - y|^j psi(y) dy,

and ``<psi, G_2j psi>`` reduces to a finite binomial sum of moments
``mu_i = int x^i psi(x) dx``. The moment form is the primary route; a
direct double quadrature of the kernel is kept as an independent check.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import MomentError
from .quadrature import composite_gauss_legendre
from .wavefunctions import SQRT_2PI, EDGE_TOL, WaveFunction

__all__ = [
    "MomentVector",
    "GInnerProducts",
    "ZERO_TOL",
    "MAX_ORDER",
    "moments",
    "g_apply",
    "g_kernel_scale",
    "g_inner",
    "g_inner_products",
    "g_inner_direct",
    "psi_hat_deriv_zero",
    "zero_momentum_order",
    "zero_mask",
]

ZERO_TOL = 1e-10
MAX_ORDER = 12


@dataclass(frozen=True)
class MomentVector:
    """``values[j] ~ int x^j psi dx`` with ``|error| <= abs_err[j]``."""

    values: np.ndarray
    abs_err: np.ndarray

    @property
    def j_max(self):
        return len(self.values) - 1

    def __len__(self):
        return len(self.values)

    def __getitem__(self, j):
        return self.values[j]


@dataclass(frozen=True)
class GInnerProducts:
    """``values[j] = <psi, G_2j psi>`` for j = 0..n."""

    values: np.ndarray
    abs_err: np.ndarray


def _tail_fraction(rule, j):
    """Share of ``int |x^j psi|`` carried by the outer 5% of a uniform window."""
    a = np.abs(rule.nodes) ** j * np.abs(rule.values)
    order = np.argsort(np.abs(rule.nodes))
    n_edge = max(1, len(a) // 10)
    total = a.sum()
    return 0.0 if total == 0 else float(a[order[-n_edge:]].sum() / total)


def _quadrature_moments(psi, j_max):
    rule = psi.position_rule(weight_power=j_max)
    coarse = psi.position_rule(weight_power=j_max, coarse=True)
    vals = np.empty(j_max + 1, dtype=complex)
    errs = np.empty(j_max + 1)
    eps = np.finfo(float).eps
    for j in range(j_max + 1):
        if rule.uniform:
            tail = _tail_fraction(rule, j)
            if tail > EDGE_TOL:
                raise MomentError(
                    f"moment of order {j} fails the tail criterion "
                    f"(edge share {tail:.3g} > {EDGE_TOL:g})", order=j,
                )
        xj = rule.nodes ** j
        vals[j] = rule.integrate(xj * rule.values)
        c = coarse.integrate(coarse.nodes ** j * coarse.values)
        absint = float(np.sum(rule.weights * np.abs(xj * rule.values)))
        noise = rule.noise * float(np.sum(rule.weights * np.abs(xj)))
        errs[j] = abs(vals[j] - c) + 32 * eps * absint + noise
    return vals, errs


def moments(psi: WaveFunction, j_max: int, method="auto") -> MomentVector:
    """Moments ``mu_j`` for ``j = 0..j_max``.

    ``method="auto"`` uses closed forms where a family has them (odd or
    even orders vanish exactly by parity for the Gaussian family), and
    quadrature of the position representation otherwise.
    """
    if j_max < 0:
        raise ValueError("j_max must be non-negative")
    exact = psi.exact_moments(j_max) if method == "auto" else None
    if exact is not None:
        err = 4 * np.finfo(float).eps * np.abs(exact)
        return MomentVector(exact, err)
    if method not in ("auto", "quadrature"):
        raise ValueError(f"unknown moment method {method!r}")
    vals, errs = _quadrature_moments(psi, j_max)
    return MomentVector(vals, errs)


def g_apply(psi: WaveFunction, j: int, x_grid) -> np.ndarray:
    """``(G_j psi)(x)`` on ``x_grid`` by direct quadrature of the kernel.

    For odd ``j`` the kernel has a kink at ``y = x``; states with a
    point evaluator are integrated on the two sides separately.
    """
    if j < 0:
        raise ValueError("j must be non-negative")
    x_grid = np.atleast_1d(np.asarray(x_grid, dtype=float))
    rule = psi.position_rule(weight_power=j)
    if rule.uniform:
        for i in range(j + 1):
            tail = _tail_fraction(rule, i)
            if tail > EDGE_TOL:
                raise MomentError(f"G_{j}: moment of order {i} fails the tail criterion", order=i)
    pref = -0.5 / math.factorial(j)
    y, w, v = rule.nodes, rule.weights, rule.values
    if j % 2 == 0 or rule.uniform:
        out = np.array([np.sum(w * np.abs(x - y) ** j * v) for x in x_grid])
        return pref * out
    X = max(float(np.max(np.abs(y))), float(np.max(np.abs(x_grid))))
    panels = max(8, len(y) // 16)
    out = np.empty(x_grid.shape, dtype=complex)
    for i, x in enumerate(x_grid):
        yl, wl = composite_gauss_legendre(-X, x, panels, 16)
        yr, wr = composite_gauss_legendre(x, X, panels, 16)
        out[i] = np.sum(wl * (x - yl) ** j * psi.psi(yl)) + np.sum(wr * (yr - x) ** j * psi.psi(yr))
    return pref * out


def g_kernel_scale(psi: WaveFunction, j: int, x_grid) -> np.ndarray:
    """``1/(2 j!) int |x-y|^j |psi(y)| dy``: magnitude against which G_j psi is judged."""
    x_grid = np.atleast_1d(np.asarray(x_grid, dtype=float))
    rule = psi.position_rule(weight_power=j)
    y, w, a = rule.nodes, rule.weights, np.abs(rule.values)
    return np.array([np.sum(w * np.abs(x - y) ** j * a) for x in x_grid]) / (2 * math.factorial(j))


def _g_from_moments(mu, err, j):
    n = 2 * j
    total = 0.0 + 0.0j
    bound = 0.0
    for i in range(n + 1):
        c = (-1) ** (n - i) * math.comb(n, i)
        total += c * np.conj(mu[n - i]) * mu[i]
        bound += math.comb(n, i) * (abs(mu[n - i]) * err[i] + err[n - i] * abs(mu[i]) + err[i] * err[n - i])
    scale = -2.0 * math.factorial(n)
    return total / scale, bound / abs(scale)


def g_inner(psi: WaveFunction, j: int, mom: MomentVector | None = None) -> complex:
    """``<psi, G_2j psi>`` via the binomial moment identity."""
    if j < 0:
        raise ValueError("j must be non-negative")
    mom = mom if mom is not None and mom.j_max >= 2 * j else moments(psi, 2 * j)
    return complex(_g_from_moments(mom.values, mom.abs_err, j)[0])


def g_inner_products(psi: WaveFunction, n: int, mom: MomentVector | None = None) -> GInnerProducts:
    mom = mom if mom is not None and mom.j_max >= 2 * n else moments(psi, 2 * n)
    pairs = [_g_from_moments(mom.values, mom.abs_err, j) for j in range(n + 1)]
    return GInnerProducts(
        np.array([p[0] for p in pairs], dtype=complex), np.array([p[1] for p in pairs])
    )


def g_inner_direct(psi: WaveFunction, j: int) -> complex:
    """``<psi, G_2j psi>`` by double quadrature of the kernel; O(N^2)."""
    rule = psi.position_rule(weight_power=2 * j)
    x, w, v = rule.nodes, rule.weights, rule.values
    a = w * v
    total = 0.0 + 0.0j
    for s in range(0, len(x), 512):
        xs = x[s:s + 512]
        K = (xs[:, None] - x[None, :]) ** (2 * j)
        total += np.conj(a[s:s + 512]) @ (K @ a)
    return complex(-total / (2 * math.factorial(2 * j)))


def psi_hat_deriv_zero(psi: WaveFunction, m: int, mom: MomentVector | None = None) -> complex:
    """``psi_hat^(m)(0) = (-i)^m (2 pi)^(-1/2) mu_m``."""
    mom = mom if mom is not None and mom.j_max >= m else moments(psi, m)
    return complex((-1j) ** m * mom.values[m] / SQRT_2PI)


def zero_mask(mom: MomentVector, tol=ZERO_TOL):
    """True where a moment is numerically zero.

    The threshold mixes an absolute and a relative guard:
    ``|mu_j| < tol * (1 + sum_i |mu_i|)``, widened by the error estimate.
    """
    a = np.abs(mom.values)
    thresh = np.maximum(tol * (1.0 + a.sum()), mom.abs_err)
    return a <= thresh


def zero_momentum_order(psi: WaveFunction, tol=ZERO_TOL, max_order=MAX_ORDER, mom=None):
    """Smallest ``m <= max_order`` with ``psi_hat^(m)(0)`` nonzero, else ``None``.

    ``None`` stands for "beyond range": every computed derivative is zero,
    as for states vanishing identically near ``k = 0``.
    """
    mom = mom if mom is not None and mom.j_max >= max_order else moments(psi, max_order)
    derivs = np.array(
        [abs(mom.values[j]) / SQRT_2PI for j in range(max_order + 1)]
    )
    scale = derivs.max()
    zeros = zero_mask(MomentVector(mom.values[: max_order + 1], mom.abs_err[: max_order + 1]), tol)
    for j in range(max_order + 1):
        if derivs[j] > tol * scale and not zeros[j]:
            return j
    return None
