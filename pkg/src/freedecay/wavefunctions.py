"""Initial states of a free particle on the line.

Conventions: ``H0 = P^2`` (no factor 1/2) and

    psi_hat(k) = (2 pi)^(-1/2) int exp(-i k x) psi(x) dx.

Two analytic families carry closed-form evaluators so that downstream
quadrature never has to go through a sampling grid:

* :class:`GaussianFamily` -- ``psi_hat(k) = N_m k^m exp(-a0 k^2)``,
  unit norm, zero of exact order ``m`` at ``k = 0``;
* :class:`MomentumBump` -- the smooth compactly supported bump
  ``exp(-1/(k0^2 - (k-d)^2))`` on ``|k - d| < k0``, normalised numerically.

Sampled states are :class:`PositionGrid` and :class:`MomentumGrid`.
All states are immutable.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
from scipy import integrate
from scipy.special import eval_hermite, gammainccinv

from .errors import GridResolutionError, QuadratureError
from .quadrature import composite_gauss_legendre

__all__ = [
    "Grid",
    "Rule",
    "WaveFunction",
    "GaussianFamily",
    "MomentumBump",
    "PositionGrid",
    "MomentumGrid",
    "WeightedNorm",
    "make_gaussian_family",
    "make_momentum_bump",
    "to_momentum",
    "to_position",
    "weighted_norm",
]

SQRT_2PI = math.sqrt(2.0 * math.pi)
TAIL_TOL = 1e-17          # relative tail mass left outside analytic windows
EDGE_TOL = 1e-6           # tail-mass threshold for grid diagnostics
MIN_SAMPLES = 16
MAX_RULE_NODES = 40000
NOISE_MARGIN = 100.0


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``start + step * arange(n)``."""

    start: float
    step: float
    n: int

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("grid spacing must be positive")
        if self.n < MIN_SAMPLES:
            raise ValueError(f"grid needs at least {MIN_SAMPLES} samples")

    @property
    def points(self):
        return self.start + self.step * np.arange(self.n)

    @classmethod
    def centered(cls, half_width, n):
        """Grid on ``[-half_width, half_width)`` with ``n`` points (FFT layout)."""
        step = 2.0 * half_width / n
        return cls(-half_width, step, n)

    def conjugate(self):
        """Centered grid in the dual variable with ``step * dual_step * n = 2 pi``."""
        dual = 2.0 * math.pi / (self.n * self.step)
        return Grid(-(self.n // 2) * dual, dual, self.n)


@dataclass(frozen=True)
class Rule:
    """Quadrature rule together with the function values at its nodes.

    ``uniform`` marks trapezoid rules on a uniform grid; those support the
    every-other-node error estimate. ``noise`` bounds the absolute error of
    each value where it is known (transformed samples), else 0.
    """

    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    uniform: bool = False
    noise: float = 0.0

    def integrate(self, f_nodes):
        return np.sum(self.weights * f_nodes)


def _readonly(a, dtype=complex):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _edge_fraction(density, n_edge=None):
    """Fraction of ``sum(density)`` sitting in the outer 5% of samples."""
    n = len(density)
    n_edge = n_edge or max(1, n // 20)
    total = float(np.sum(density))
    if total == 0.0:
        return 0.0
    return float(np.sum(density[:n_edge]) + np.sum(density[-n_edge:])) / total


class WaveFunction(ABC):
    """Common interface of all initial states.

    Subclasses provide momentum-space evaluation (``psi_hat``) and
    quadrature rules in both representations. Position-space evaluation at
    arbitrary points (``psi``) is available for every kind, exactly for the
    Gaussian family and by band-limited interpolation elsewhere.
    """

    kind = "abstract"

    @abstractmethod
    def psi_hat(self, k):
        """Momentum amplitude at real ``k`` (array in, array out)."""

    @abstractmethod
    def psi_hat_deriv(self, k):
        """First derivative of ``psi_hat``."""

    @abstractmethod
    def psi(self, x):
        """Position amplitude at real ``x``."""

    @abstractmethod
    def position_rule(self, weight_power=0, h_max=None, coarse=False) -> Rule:
        """Quadrature rule in ``x`` wide enough for integrands ``x^(2q) |psi|^2``."""

    @abstractmethod
    def momentum_rule(self, weight_power=0, h_max=None, coarse=False) -> Rule:
        """Quadrature rule in ``k``."""

    @property
    @abstractmethod
    def momentum_extent(self):
        """``K`` such that ``|psi_hat|^2`` carries negligible mass beyond ``|k| > K``."""

    @property
    @abstractmethod
    def position_extent(self):
        """``X`` such that ``|psi|^2`` carries negligible mass beyond ``|x| > X``."""

    @property
    def time_scale(self):
        """Natural unit of time (``2 a0`` for the Gaussian family)."""
        return 1.0

    @property
    def k_scale(self):
        """Typical momentum width, used to seed punctured integrals."""
        return self.momentum_extent / 8.0

    @cached_property
    def normalization(self):
        rule = self.momentum_rule()
        return float(np.sqrt(rule.integrate(np.abs(rule.values) ** 2).real))

    # Hooks with conservative defaults.

    def exact_moments(self, j_max):
        """Closed-form moments ``int x^j psi dx``, or ``None`` if unknown."""
        return None

    def log_rho(self, k):
        """Analytic continuation of ``log |psi_hat(k)|^2`` off the real axis."""
        raise NotImplementedError

    def descent_path(self, t):
        """Vertices of a contour from the real support for ``int rho e^{-itk^2}``.

        ``None`` means no analytic continuation is available.
        """
        return None

    def closed_form_amplitude(self, t):
        return None


# -- Gaussian family --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaussianFamily(WaveFunction):
    """``psi_hat(k) = N_m k^m exp(-a0 k^2)`` with unit L2 norm."""

    m: int
    a0: float
    kind = "gaussian"

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise ValueError("m must be a non-negative integer")
        if not self.a0 > 0:
            raise ValueError("a0 must be positive")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "a0", float(self.a0))

    @cached_property
    def norm_constant(self):
        """``N_m = [Gamma(m+1/2) / (2 a0)^(m+1/2)]^(-1/2)``."""
        m, a0 = self.m, self.a0
        return math.sqrt((2.0 * a0) ** (m + 0.5) / math.gamma(m + 0.5))

    @cached_property
    def normalization(self):
        return 1.0

    @property
    def time_scale(self):
        return 2.0 * self.a0

    @property
    def k_scale(self):
        return 1.0 / math.sqrt(2.0 * self.a0)

    def psi_hat(self, k):
        k = np.asarray(k, dtype=float)
        return (self.norm_constant * k ** self.m * np.exp(-self.a0 * k * k)).astype(complex)

    def psi_hat_deriv(self, k):
        k = np.asarray(k, dtype=float)
        m, a = self.m, self.a0
        lead = m * k ** (m - 1) if m > 0 else np.zeros_like(k)
        return (self.norm_constant * (lead - 2 * a * k ** (m + 1)) * np.exp(-a * k * k)).astype(complex)

    def psi(self, x):
        # inverse transform of k^m exp(-a k^2) via Hermite polynomials
        x = np.asarray(x, dtype=float)
        m, a = self.m, self.a0
        sa = math.sqrt(a)
        u = x / (2.0 * sa)
        pref = self.norm_constant / math.sqrt(2.0 * a) * (1j / (2.0 * sa)) ** m
        return pref * eval_hermite(m, u) * np.exp(-u * u)

    def _k_window(self, weight_power):
        y = gammainccinv(self.m + weight_power + 0.5, TAIL_TOL)
        return math.sqrt(y / (2.0 * self.a0)) + 0.5 * self.k_scale

    def _x_window(self, weight_power):
        # moments and kernels integrate psi itself, so bound the L1 tail:
        # |psi| mass beyond X is then near TAIL_TOL rather than its square root
        y = gammainccinv(self.m + weight_power + 0.5, TAIL_TOL ** 2)
        return 2.0 * math.sqrt(self.a0) * (math.sqrt(y / 2.0) + 0.5)

    @property
    def momentum_extent(self):
        return self._k_window(0)

    @property
    def position_extent(self):
        return self._x_window(0)

    def position_rule(self, weight_power=0, h_max=None, coarse=False):
        X = self._x_window(weight_power)
        h = 0.5 * math.sqrt(self.a0) if h_max is None else min(h_max, 0.5 * math.sqrt(self.a0))
        panels = max(8, int(math.ceil(2 * X / h)))
        if coarse:
            panels = max(4, panels // 2)
        x, w = composite_gauss_legendre(-X, X, panels, 16)
        return Rule(x, w, self.psi(x))

    def momentum_rule(self, weight_power=0, h_max=None, coarse=False):
        K = self._k_window(weight_power)
        h = 0.5 * self.k_scale if h_max is None else min(h_max, 0.5 * self.k_scale)
        panels = max(8, int(math.ceil(2 * K / h)))
        if coarse:
            panels = max(4, panels // 2)
        k, w = composite_gauss_legendre(-K, K, panels, 16)
        return Rule(k, w, self.psi_hat(k))

    def deriv_at_zero(self, j):
        """Exact ``psi_hat^(j)(0)``: nonzero only for ``j = m + 2l``."""
        l2 = j - self.m
        if l2 < 0 or l2 % 2:
            return 0.0
        l = l2 // 2
        return math.factorial(j) * self.norm_constant * (-self.a0) ** l / math.factorial(l)

    def exact_moments(self, j_max):
        # mu_j = i^j sqrt(2 pi) psi_hat^(j)(0)
        return np.array(
            [(1j ** j) * SQRT_2PI * self.deriv_at_zero(j) for j in range(j_max + 1)],
            dtype=complex,
        )

    def log_rho(self, k):
        k = np.asarray(k, dtype=complex)
        with np.errstate(divide="ignore"):
            return (
                2.0 * math.log(self.norm_constant)
                + 2 * self.m * np.log(k)
                - 2.0 * self.a0 * k * k
            )

    def descent_path(self, t):
        # rotate k -> s exp(-i pi/4 sign t): exp(-i t k^2) becomes exp(-|t| s^2)
        if t == 0:
            return None
        y = gammainccinv(self.m + 0.5, 1e-18)
        S = math.sqrt(y / abs(t)) * 1.2
        rot = np.exp(-1j * np.sign(t) * np.pi / 4)
        return [-S * rot, 0.0, S * rot]

    def closed_form_amplitude(self, t):
        return complex((1.0 + 1j * t / (2.0 * self.a0)) ** (-(self.m + 0.5)))


def make_gaussian_family(m, a0):
    """Unit-norm state ``N_m k^m exp(-a0 k^2)`` in momentum space."""
    return GaussianFamily(m, a0)


# -- compactly supported bump ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class MomentumBump(WaveFunction):
    """``psi_hat(k) ~ exp(-1/(k0^2 - (k-d)^2))`` on ``|k-d| < k0``, zero elsewhere.

    Requires ``d > k0 > 0`` so the support stays away from ``k = 0``; every
    derivative of ``psi_hat`` vanishes at the origin.
    """

    d: float
    k0: float
    fft_size: int = field(default=2 ** 15, repr=False)
    kind = "bump"

    def __post_init__(self):
        if not (self.k0 > 0 and self.d > self.k0):
            raise ValueError("bump needs d > k0 > 0")
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "k0", float(self.k0))
        lo, hi = self.d - self.k0, self.d + self.k0
        val, _ = integrate.quad(
            lambda k: math.exp(2.0 * self._log_shape(k)), lo, hi, epsabs=0, epsrel=1e-13, limit=200
        )
        object.__setattr__(self, "_log_c", -0.5 * math.log(val))

    def _log_shape(self, k):
        return -1.0 / (self.k0 ** 2 - (k - self.d) ** 2)

    @cached_property
    def normalization(self):
        return 1.0

    @property
    def k_scale(self):
        return self.k0

    @property
    def momentum_extent(self):
        return self.d + self.k0

    @cached_property
    def position_extent(self):
        # L2 extent: where the weighted density falls below TAIL_TOL
        xg, vals = self._fft_samples
        x = xg.points
        dens = np.abs(vals) ** 2
        order = np.argsort(np.abs(x))[::-1]
        cut = np.searchsorted(np.cumsum(dens[order]), TAIL_TOL * dens.sum())
        return float(np.abs(x[order[min(cut, len(x) - 1)]]))

    def psi_hat(self, k):
        k = np.asarray(k, dtype=float)
        g = self.k0 ** 2 - (k - self.d) ** 2
        inside = g > 0
        out = np.zeros(k.shape, dtype=complex)
        out[inside] = np.exp(self._log_c - 1.0 / g[inside])
        return out

    def psi_hat_deriv(self, k):
        k = np.asarray(k, dtype=float)
        g = self.k0 ** 2 - (k - self.d) ** 2
        inside = g > 0
        out = np.zeros(k.shape, dtype=complex)
        gi = g[inside]
        out[inside] = np.exp(self._log_c - 1.0 / gi) * (-2.0 * (k[inside] - self.d) / gi ** 2)
        return out

    def momentum_rule(self, weight_power=0, h_max=None, coarse=False):
        lo, hi = self.d - self.k0, self.d + self.k0
        panels = 32 if h_max is None else max(32, int(math.ceil((hi - lo) / h_max)))
        if coarse:
            panels //= 2
        k, w = composite_gauss_legendre(lo, hi, panels, 16)
        return Rule(k, w, self.psi_hat(k))

    @cached_property
    def _fft_samples(self):
        K = self.d + self.k0
        kg = Grid.centered(K, self.fft_size)
        xg = kg.conjugate()
        vals = _dft_to_position(self.psi_hat(kg.points), kg, xg)
        return xg, vals

    @cached_property
    def _signal_extent(self):
        # psi decays like exp(-c sqrt|x|), far below roundoff at the window
        # edge, so the outer quarter measures the transform's noise floor;
        # keeping everything above it bounds the L1 tail, not just the L2 one
        xg, vals = self._fft_samples
        ax, a = np.abs(xg.points), np.abs(vals)
        floor = float(np.max(a[ax > 0.75 * ax.max()]))
        above = ax[a > NOISE_MARGIN * floor]
        return min(float(ax.max()), 1.25 * float(above.max())), floor

    def _position_samples(self, weight_power=0):
        # the weight is left to the callers' tail criterion: noise times
        # |x|^j near the edge then shows up as an honest failure
        xg, vals = self._fft_samples
        keep = np.abs(xg.points) <= self._signal_extent[0]
        return xg.points[keep], vals[keep], xg.step

    def psi(self, x):
        # direct trapezoid transform over the support (spectrally accurate)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.d - self.k0, self.d + self.k0
        n = max(2048, int(4 * (hi - lo) * (np.max(np.abs(x)) if x.size else 0) / math.pi))
        k = np.linspace(lo, hi, n + 1)
        dk = k[1] - k[0]
        f = self.psi_hat(k) * dk
        out = np.empty(x.shape, dtype=complex)
        for s in range(0, x.size, 256):
            xs = x[s:s + 256]
            out[s:s + 256] = np.exp(1j * xs[:, None] * k[None, :]) @ f
        return out / SQRT_2PI

    def position_rule(self, weight_power=0, h_max=None, coarse=False):
        x, vals, dx = self._position_samples(weight_power)
        if h_max is not None:
            # chirped integrands: Gauss-Legendre with direct evaluation;
            # weighted windows are noise-limited here, so pad the plain one
            X = 1.25 * self.position_extent
            h = min(h_max, 1.0 / self.momentum_extent)
            panels = int(math.ceil(2 * X / h))
            if coarse:
                panels = max(4, panels // 2)
            if 16 * panels > MAX_RULE_NODES:
                raise QuadratureError(
                    f"bump position rule needs {16 * panels} nodes for spacing {h_max:.3g}"
                )
            xs, w = composite_gauss_legendre(-X, X, panels, 16)
            return Rule(xs, w, self.psi(xs))
        if coarse:
            x, vals = x[::2], vals[::2]
            dx = 2 * dx
        return Rule(x, np.full(x.shape, dx), vals, uniform=True, noise=self._signal_extent[1])

    def exact_moments(self, j_max):
        # support excludes a neighbourhood of k = 0: every derivative vanishes there
        return np.zeros(j_max + 1, dtype=complex)

    def log_rho(self, k):
        k = np.asarray(k, dtype=complex)
        return 2.0 * self._log_c - 2.0 / (self.k0 ** 2 - (k - self.d) ** 2)

    def _dlog(self, k, t):
        g = self.k0 ** 2 - (k - self.d) ** 2
        d1 = -4.0 * (k - self.d) / g ** 2 - 2j * t * k
        d2 = -4.0 / g ** 2 - 16.0 * (k - self.d) ** 2 / g ** 3 - 2j * t
        return d1, d2

    def _saddle(self, guess, t):
        k = complex(guess)
        for _ in range(60):
            d1, d2 = self._dlog(k, t)
            step = d1 / d2
            k -= step
            if abs(step) < 1e-15 * abs(k):
                return k
        return None

    def descent_path(self, t):
        """Polygon through the two saddle points of ``log rho - i t k^2``.

        For ``t > 0`` the path leaves the left edge of the support into the
        lower half plane, passes the saddle near it, dives to depth ``Y``
        where the integrand is below ``e^-60`` of the saddle value, crosses,
        and climbs back through the right saddle to the right edge. ``t < 0``
        mirrors it into the upper half plane.
        """
        if t == 0:
            return None
        at = abs(t)
        kl, kr, k0 = self.d - self.k0, self.d + self.k0, self.k0
        sl = self._saddle(kl + np.exp(-1j * np.pi / 4) / math.sqrt(2 * at * kl * k0), at)
        sr = self._saddle(kr + np.exp(1.25j * np.pi) / math.sqrt(2 * at * kr * k0), at)
        if sl is None or sr is None:
            return None
        if not (kl < sl.real < sr.real < kr and sl.imag < 0 and sr.imag < 0):
            return None
        # endpoints must be approached inside the sectors where rho -> 0
        if not (sl.real - kl > 0 and kr - sr.real > 0):
            return None
        ref = max(self._phase(sl, at).real, self._phase(sr, at).real)
        Y = max((abs(ref) + 60.0) / (2.0 * at * kl), -2.0 * sl.imag, -2.0 * sr.imag)
        pts = [kl, sl, complex(sl.real, -Y), complex(sr.real, -Y), sr, kr]
        if t < 0:
            pts = [np.conj(p) for p in pts]
        return [complex(p) for p in pts]

    def _phase(self, k, t):
        return complex(self.log_rho(k)) - 1j * t * k * k


def make_momentum_bump(d, k0):
    return MomentumBump(d, k0)


# -- sampled states -------------------------------------------------------------


def _dft_to_momentum(samples, xg: Grid, kg: Grid):
    """Trapezoid transform from uniform ``xg`` samples to the conjugate grid ``kg``."""
    n = xg.n
    idx = np.arange(n)
    k = kg.points
    pre = samples * np.exp(-1j * kg.start * idx * xg.step)
    return xg.step / SQRT_2PI * np.exp(-1j * k * xg.start) * np.fft.fft(pre)


def _dft_to_position(samples, kg: Grid, xg: Grid):
    n = kg.n
    idx = np.arange(n)
    x = xg.points
    pre = samples * np.exp(1j * idx * kg.step * xg.start)
    return kg.step / SQRT_2PI * np.exp(1j * kg.start * x) * (n * np.fft.ifft(pre))


def _is_conjugate(a: Grid, b: Grid):
    return a.n == b.n and math.isclose(a.step * b.step * a.n, 2 * math.pi, rel_tol=1e-12)


def _direct_sum(samples, src, step, dst, sign):
    shape = np.shape(dst)
    dst = np.ravel(dst)
    out = np.empty(dst.shape, dtype=complex)
    for s in range(0, dst.size, 512):
        ds = dst[s:s + 512]
        out[s:s + 512] = np.exp(sign * 1j * ds[:, None] * src[None, :]) @ samples
    return (out * step / SQRT_2PI).reshape(shape)


def _sinc_interp(samples, start, step, at):
    at = np.atleast_1d(np.asarray(at, dtype=float))
    flat = at.ravel()
    nodes = start + step * np.arange(len(samples))
    out = np.empty(flat.shape, dtype=complex)
    for s in range(0, flat.size, 512):
        a = flat[s:s + 512]
        out[s:s + 512] = np.sinc((a[:, None] - nodes[None, :]) / step) @ samples
    return out.reshape(at.shape)


def _fd4(samples, step):
    """Fourth-order central differences, one-sided fourth order at the ends."""
    f = samples
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * step)
    c = np.array([-25, 48, -36, 16, -3]) / (12 * step)
    d[0] = c @ f[:5]
    d[1] = c @ f[1:6]
    d[-1] = -(c @ f[::-1][:5])
    d[-2] = -(c @ f[::-1][1:6])
    return d


@dataclass(frozen=True, eq=False)
class PositionGrid(WaveFunction):
    """Samples of ``psi(x)`` on ``x_min + dx * arange(n)``."""

    samples: np.ndarray
    x_min: float
    dx: float
    kind = "position_grid"

    def __post_init__(self):
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        s = _readonly(self.samples)
        if s.ndim != 1 or s.size < MIN_SAMPLES:
            raise ValueError(f"need a 1-D array of at least {MIN_SAMPLES} samples")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "dx", float(self.dx))

    @property
    def grid(self):
        return Grid(self.x_min, self.dx, self.samples.size)

    @cached_property
    def normalization(self):
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.dx))

    @cached_property
    def _momentum_image(self):
        kg = self.grid.conjugate()
        return MomentumGrid(_dft_to_momentum(self.samples, self.grid, kg), kg.start, kg.step)

    @property
    def momentum_extent(self):
        return math.pi / self.dx

    @property
    def position_extent(self):
        x = self.grid.points
        return float(np.max(np.abs(x)))

    def psi(self, x):
        return _sinc_interp(self.samples, self.x_min, self.dx, x)

    def psi_hat(self, k):
        k = np.atleast_1d(np.asarray(k, dtype=float))
        out = _direct_sum(self.samples, self.grid.points, self.dx, k, -1)
        out[np.abs(k) > math.pi / self.dx] = 0.0
        return out

    def psi_hat_deriv(self, k):
        return self._momentum_image.psi_hat_deriv(k)

    def position_rule(self, weight_power=0, h_max=None, coarse=False):
        x, v, dx = self.grid.points, self.samples, self.dx
        if coarse:
            x, v, dx = x[::2], v[::2], 2 * dx
        return Rule(x, np.full(x.shape, dx), v, uniform=True)

    def momentum_rule(self, weight_power=0, h_max=None, coarse=False):
        return self._momentum_image.momentum_rule(coarse=coarse)


@dataclass(frozen=True, eq=False)
class MomentumGrid(WaveFunction):
    """Samples of ``psi_hat(k)`` on ``k_min + dk * arange(n)``."""

    samples: np.ndarray
    k_min: float
    dk: float
    kind = "momentum_grid"

    def __post_init__(self):
        if not self.dk > 0:
            raise ValueError("dk must be positive")
        s = _readonly(self.samples)
        if s.ndim != 1 or s.size < MIN_SAMPLES:
            raise ValueError(f"need a 1-D array of at least {MIN_SAMPLES} samples")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "k_min", float(self.k_min))
        object.__setattr__(self, "dk", float(self.dk))

    @property
    def grid(self):
        return Grid(self.k_min, self.dk, self.samples.size)

    @cached_property
    def normalization(self):
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.dk))

    @cached_property
    def _position_image(self):
        xg = self.grid.conjugate()
        return PositionGrid(_dft_to_position(self.samples, self.grid, xg), xg.start, xg.step)

    @cached_property
    def _deriv_samples(self):
        return _fd4(self.samples, self.dk)

    @property
    def momentum_extent(self):
        k = self.grid.points
        return float(np.max(np.abs(k)))

    @property
    def position_extent(self):
        return math.pi / self.dk

    def psi_hat(self, k):
        return _sinc_interp(self.samples, self.k_min, self.dk, k)

    def psi_hat_deriv(self, k):
        return _sinc_interp(self._deriv_samples, self.k_min, self.dk, k)

    def psi(self, x):
        return self._position_image.psi(x)

    def position_rule(self, weight_power=0, h_max=None, coarse=False):
        return self._position_image.position_rule(coarse=coarse)

    def momentum_rule(self, weight_power=0, h_max=None, coarse=False):
        k, v, dk = self.grid.points, self.samples, self.dk
        if coarse:
            k, v, dk = k[::2], v[::2], 2 * dk
        return Rule(k, np.full(k.shape, dk), v, uniform=True)


# -- transforms ----------------------------------------------------------------


def _check_capture(out, step, norm, what):
    dens = np.abs(out) ** 2
    edge = _edge_fraction(dens)
    captured = float(np.sum(dens) * step)
    deficit = 1.0 - captured / norm ** 2 if norm > 0 else 0.0
    tail = max(edge, deficit)
    if tail > EDGE_TOL:
        raise GridResolutionError(
            f"{what}: tail-mass estimate {tail:.3g} exceeds {EDGE_TOL:g}; "
            "grid too coarse or too narrow", tail_mass=tail,
        )


def _check_source_edges(samples, what):
    edge = _edge_fraction(np.abs(samples) ** 2)
    if edge > EDGE_TOL:
        raise GridResolutionError(
            f"{what}: input samples carry tail mass {edge:.3g} at the window edges",
            tail_mass=edge,
        )


def to_momentum(psi: WaveFunction, grid: Grid | None = None) -> MomentumGrid:
    """Sample ``psi_hat`` on ``grid`` (conjugate grid for sampled inputs by default).

    Raises :class:`GridResolutionError` when the source window truncates
    the state or the output grid misses more than ``1e-6`` of the mass.
    """
    if isinstance(psi, MomentumGrid):
        if grid is None or grid == psi.grid:
            return psi
        out = psi.psi_hat(grid.points)
    elif isinstance(psi, PositionGrid):
        _check_source_edges(psi.samples, "to_momentum")
        grid = grid or psi.grid.conjugate()
        if _is_conjugate(psi.grid, grid):
            out = _dft_to_momentum(psi.samples, psi.grid, grid)
        else:
            out = psi.psi_hat(grid.points)
    else:
        if grid is None:
            K = psi.momentum_extent
            grid = Grid.centered(K, 1024)
        out = psi.psi_hat(grid.points)
    _check_capture(out, grid.step, psi.normalization, "to_momentum")
    return MomentumGrid(out, grid.start, grid.step)


def to_position(psi: WaveFunction, grid: Grid | None = None) -> PositionGrid:
    """Sample ``psi(x)`` on ``grid``; mirror image of :func:`to_momentum`."""
    if isinstance(psi, PositionGrid):
        if grid is None or grid == psi.grid:
            return psi
        out = psi.psi(grid.points)
    elif isinstance(psi, MomentumGrid):
        _check_source_edges(psi.samples, "to_position")
        grid = grid or psi.grid.conjugate()
        if _is_conjugate(psi.grid, grid):
            out = _dft_to_position(psi.samples, psi.grid, grid)
        else:
            out = _direct_sum(psi.samples, psi.grid.points, psi.dk, grid.points, +1)
    else:
        if grid is None:
            grid = Grid.centered(psi.position_extent, 1024)
        out = psi.psi(grid.points)
    _check_capture(out, grid.step, psi.normalization, "to_position")
    return PositionGrid(out, grid.start, grid.step)


# -- weighted norms --------------------------------------------------------------


@dataclass(frozen=True)
class WeightedNorm:
    """``[int (1 + x^2)^s |psi(x)|^2 dx]^(1/2)``; ``inf`` when it fails to converge."""

    s: float
    value: float

    @property
    def bounded(self):
        return math.isfinite(self.value)


def weighted_norm(psi: WaveFunction, s: float) -> WeightedNorm:
    if s < 0:
        raise ValueError("weight exponent s must be non-negative")
    if s == 0:
        return WeightedNorm(0.0, psi.normalization)
    rule = psi.position_rule(weight_power=math.ceil(s))
    x = rule.nodes
    dens = (1.0 + x * x) ** s * np.abs(rule.values) ** 2
    if rule.uniform and _edge_fraction(dens) > EDGE_TOL:
        return WeightedNorm(float(s), math.inf)
    return WeightedNorm(float(s), float(np.sqrt(np.sum(rule.weights * dens))))
