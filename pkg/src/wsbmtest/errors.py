"""Exception hierarchy shared by all modules."""


class WSBMError(Exception):
    """Base class for library errors."""


class EdgeListError(WSBMError, ValueError):
    """Malformed edge-list input."""


class ZeroVarianceError(WSBMError, ArithmeticError):
    """A statistic's normalizing variance vanishes (constant weights)."""


class DegenerateDichotomyError(WSBMError, ArithmeticError):
    """Dichotomized edge probability is 0 or 1."""


class DomainError(WSBMError, ValueError):
    """A parameter lies outside its admissible domain."""


class QuadratureError(WSBMError, ArithmeticError):
    """Numerical integration failed to converge."""
