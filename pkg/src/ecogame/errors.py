"""Exception hierarchy shared by every ecogame module."""


class EcoGameError(Exception):
    """Base class for all package errors."""


class InvalidParameter(EcoGameError, ValueError):
    """A parameter is non-finite or outside its admissible range."""


class AssumptionViolation(EcoGameError):
    """A configuration breaks one of the standing model assumptions.

    ``inequality`` names the first violated inequality; ``violations`` holds
    all of them.
    """

    def __init__(self, inequality, violations=()):
        self.inequality = inequality
        self.violations = tuple(violations) or (inequality,)
        super().__init__(inequality)


class DegenerateDenominator(EcoGameError, ArithmeticError):
    """A closed form would divide by zero."""


class BoundaryPolicy(EcoGameError):
    """The policy sits on a separating curve where no classification applies."""


class OutOfRegion(EcoGameError):
    """The policy lies outside the region where a closed form is valid."""


class NonFiniteState(EcoGameError, FloatingPointError):
    """Integration produced NaN or Inf."""
