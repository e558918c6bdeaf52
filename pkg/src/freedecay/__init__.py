"""Exact evolution, survival probability and long-time asymptotics of free wave packets.

Conventions: ``H0 = P^2`` and ``psi_hat(k) = (2 pi)^(-1/2) int exp(-ikx) psi(x) dx``.
"""

__version__ = "0.1.0"

from .errors import (
    BoundVacuousError,
    FreeDecayError,
    GridResolutionError,
    MomentError,
    NormLossError,
    OrderClampError,
    QuadratureError,
    SuperPolynomialError,
)
from .wavefunctions import (
    GaussianFamily,
    Grid,
    MomentumBump,
    MomentumGrid,
    PositionGrid,
    WaveFunction,
    WeightedNorm,
    make_gaussian_family,
    make_momentum_bump,
    to_momentum,
    to_position,
    weighted_norm,
)
from .moments import (
    GInnerProducts,
    MomentVector,
    g_apply,
    g_inner,
    g_inner_direct,
    g_inner_products,
    moments,
    psi_hat_deriv_zero,
    zero_momentum_order,
)
from .propagation import (
    AmplitudeSeries,
    Method,
    amplitude_estimate,
    nonescape_probability,
    propagate,
    survival_amplitude,
    survival_series,
)
from .asymptotics import (
    AsymptoticModel,
    DecayFit,
    build_model,
    eval_partial_sum,
    fit_power_law,
    gamma_half,
    leading_constant,
    leading_survival_probability,
    remainder_diagnostic,
)
from .timeop import TimeOperatorReport, check_decay_bound, t0_apply, t0_norm
