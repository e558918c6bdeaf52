"""Quadrature rules used throughout the package.

Three families live here:

* composite Gauss-Legendre rules on real intervals and on straight
  segments of the complex plane (contour integrals),
* an adaptive Gauss-Kronrod wrapper for complex integrands,
* a Filon-type rule for chirped integrals ``int rho(k) exp(-i t k^2) dk``
  that stays accurate and cheap as ``t`` grows.
"""

from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import QuadratureError

__all__ = [
    "gauss_legendre",
    "composite_gauss_legendre",
    "segment_rule",
    "adaptive_gauss_kronrod",
    "exp_monomial_moments",
    "filon_chirp",
]


@lru_cache(maxsize=None)
def gauss_legendre(order):
    """Nodes and weights of the ``order``-point rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_gauss_legendre(a, b, panels, order=16):
    """Nodes and weights of ``panels`` equal Gauss-Legendre panels on [a, b]."""
    if panels < 1:
        raise ValueError("need at least one panel")
    x, w = gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def segment_rule(z0, z1, panels, order=20):
    """Complex nodes and weights (including dz/du) on the segment z0 -> z1."""
    u, w = composite_gauss_legendre(0.0, 1.0, panels, order)
    dz = complex(z1) - complex(z0)
    return complex(z0) + dz * u, dz * w


def adaptive_gauss_kronrod(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=400, points=None):
    """Integrate a complex scalar function with QUADPACK's adaptive G7K15/G10K21.

    Returns ``(value, abs_err)``. Warnings from QUADPACK are turned into an
    inflated error estimate rather than printed.
    """
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(
                f, a, b, complex_func=True, epsabs=epsabs, epsrel=epsrel,
                limit=limit, points=points,
            )
            return complex(val), float(abs(err))
        except integrate.IntegrationWarning:
            pass
    # rerun silently and report what was achieved
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(
            f, a, b, complex_func=True, epsabs=epsabs, epsrel=epsrel,
            limit=limit, points=points,
        )
    return complex(val), max(float(abs(err)), epsabs, epsrel * abs(val))


# -- Filon machinery -------------------------------------------------------

_MOMENT_GL_ORDER = 64
_MOMENT_SWITCH = 24.0


def exp_monomial_moments(theta, degree):
    """``J_r = int_{-1}^{1} u^r exp(-i theta u) du`` for r = 0..degree.

    Small ``|theta|`` uses a 64-point Gauss-Legendre rule (exact to rounding
    there); large ``|theta|`` uses the upward recurrence, which is stable once
    ``|theta|`` exceeds the degree.
    """
    theta = float(theta)
    r = np.arange(degree + 1)
    if abs(theta) <= max(_MOMENT_SWITCH, 2.0 * degree):
        u, w = gauss_legendre(_MOMENT_GL_ORDER)
        ph = w * np.exp(-1j * theta * u)
        return (u[None, :] ** r[:, None]) @ ph
    J = np.empty(degree + 1, dtype=complex)
    ep, em = np.exp(1j * theta), np.exp(-1j * theta)
    J[0] = 2.0 * np.sin(theta) / theta
    for n in range(1, degree + 1):
        boundary = (em - (-1) ** n * ep) / (-1j * theta)
        J[n] = boundary + n * J[n - 1] / (1j * theta)
    return J


@lru_cache(maxsize=None)
def _lobatto_chebyshev(degree):
    u = np.cos(np.pi * np.arange(degree + 1) / degree)[::-1].copy()
    V = u[:, None] ** np.arange(degree + 1)[None, :]
    return u, V


def _filon_panels(lam1, lam_max, h_max, split=1):
    """Panels doubling in width from ``lam1`` up to ``h_max``, each cut into ``split`` pieces.

    The graded panels sit next to the ``1/sqrt(lam)`` singularity, so
    refinement must subdivide them too, not only the wide ones.
    """
    edges = [lam1]
    width = lam1
    while edges[-1] < lam_max:
        width = min(2.0 * width, h_max) if width < h_max else h_max
        nxt = min(edges[-1] + width, lam_max)
        if lam_max - nxt < 0.25 * width:
            nxt = lam_max
        edges.append(nxt)
    edges = np.asarray(edges)
    if split > 1:
        frac = np.arange(split) / split
        edges = np.append((edges[:-1, None] + np.diff(edges)[:, None] * frac[None, :]).ravel(), edges[-1])
    return edges


def _filon_sum(rho, t, lam_edges, degree):
    u, V = _lobatto_chebyshev(degree)
    a, b = lam_edges[:-1], lam_edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    lam = mid[:, None] + half[:, None] * u[None, :]
    sq = np.sqrt(lam)
    f = (rho(sq) + rho(-sq)) / (2.0 * sq)
    total = 0.0 + 0.0j
    scale = 0.0
    for p in range(len(mid)):
        J = exp_monomial_moments(t * half[p], degree)
        w = np.linalg.solve(V.T, J)
        phase = np.exp(-1j * t * mid[p]) * half[p]
        contrib = w * f[p]
        total += phase * contrib.sum()
        scale += half[p] * np.abs(contrib).sum()
    return total, scale


def filon_chirp(rho, t, k_max, h_max, degree=12, tol=1e-10, max_refine=4):
    """Filon-type quadrature of ``int_{-k_max}^{k_max} rho(k) exp(-i t k^2) dk``.

    The central piece ``|k| < k1`` with ``t k1^2 <= 1`` is non-oscillatory and
    handled by Gauss-Legendre in ``k``. Outside it the substitution
    ``lam = k^2`` makes the phase linear; the smooth factor
    ``(rho(sqrt lam) + rho(-sqrt lam)) / (2 sqrt lam)`` is interpolated by
    polynomials on a mesh graded geometrically away from ``lam = k1^2`` and
    integrated against exact moments of ``exp(-i t lam)``. Cost is independent
    of ``t``. The error estimate is the change under halving of the mesh.

    ``rho`` must accept numpy arrays. Returns ``(value, err_est)``.
    """
    t = float(t)
    if t == 0.0:
        x, w = composite_gauss_legendre(-k_max, k_max, 32, 20)
        return complex(np.sum(w * rho(x))), 0.0
    k1 = min(k_max, 1.0 / np.sqrt(abs(t)))
    x, w = composite_gauss_legendre(-k1, k1, 4, 20)
    inner = np.sum(w * rho(x) * np.exp(-1j * t * x * x))
    if k1 >= k_max:
        return complex(inner), 1e-15 * float(np.sum(w * np.abs(rho(x))))
    lam1, lam_max = k1 * k1, k_max * k_max
    h = min(h_max, lam_max - lam1)
    prev, _ = _filon_sum(rho, t, _filon_panels(lam1, lam_max, h), degree)
    best = None
    for level in range(1, max_refine + 2):
        fine, scale = _filon_sum(rho, t, _filon_panels(lam1, lam_max, h, 2 ** level), degree)
        err = abs(fine - prev) + 64 * np.finfo(float).eps * scale
        if best is None or err < best[1]:
            best = (inner + fine, err)
        if err <= tol:
            break
        prev = fine
    return complex(best[0]), float(best[1])


def require(value, err, tol, what):
    """Raise :class:`QuadratureError` if ``err`` exceeds ``tol``."""
    if not np.isfinite(err) or err > tol:
        raise QuadratureError(
            f"{what}: error estimate {err:.3g} above tolerance {tol:.3g}", achieved=err
        )
    return value
