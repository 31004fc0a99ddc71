"""Exception types raised across the package."""


class MultiradialError(Exception):
    """Base class for all package errors."""


class NonInteriorCenter(MultiradialError):
    """A ray search could not bracket a boundary crossing from the center."""


class DegenerateNormal(MultiradialError):
    """A normal vector had nonpositive inner product with the ray direction."""


class ZeroDenominator(MultiradialError):
    """The radial subgradient formula hit a nonpositive denominator."""


class CenterNotStrict(MultiradialError):
    """A reference point does not satisfy f(e) > 0."""


class NotPositiveDefinite(MultiradialError):
    pass


class BacktrackOverflow(MultiradialError):
    """Backtracking doubled the smoothness estimate too many times."""


class BudgetExhausted(MultiradialError):
    """An iteration or time budget ran out before the stopping rule fired.

    ``result`` carries whatever partial output was produced.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class InfeasibleStart(BudgetExhausted):
    pass


class BracketFailure(MultiradialError):
    pass


class EmptyFeasibleGrid(MultiradialError):
    pass


class SlaterViolation(MultiradialError):
    pass


class MalformedCsv(MultiradialError):
    pass
