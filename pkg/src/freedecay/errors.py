"""Exception hierarchy for numerical failures.

Bad arguments (negative widths, malformed grids) raise ``ValueError``;
everything below signals that a computation could not be certified.
"""


class FreeDecayError(Exception):
    """Base class for numerical failures."""


class GridResolutionError(FreeDecayError):
    """A sampling grid truncates the state or under-resolves it."""

    def __init__(self, message, tail_mass=None):
        super().__init__(message)
        self.tail_mass = tail_mass


class MomentError(FreeDecayError):
    """A position moment failed the tail criterion."""

    def __init__(self, message, order):
        super().__init__(message)
        self.order = order


class QuadratureError(FreeDecayError):
    """Quadrature did not reach its tolerance after maximal refinement."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class NormLossError(FreeDecayError):
    """An evaluation window lost a measurable part of the norm."""


class OrderClampError(FreeDecayError):
    """Requested expansion order exceeds what the moments certify."""

    def __init__(self, message, certified_order):
        super().__init__(message)
        self.certified_order = certified_order


class SuperPolynomialError(FreeDecayError):
    """State has no finite zero-momentum order (super-polynomial class)."""


class BoundVacuousError(FreeDecayError):
    """The time-operator bound is vacuous because the norm is infinite."""
