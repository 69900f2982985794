"""Exception types raised across the library."""


class QdsvError(ValueError):
    """Base class for all library errors."""


class InvalidParams(QdsvError):
    pass


class NotMartingale(QdsvError):
    """Raised when an operation needs R1 >= rho * nu and the params violate it."""


class DegenerateSteadyState(QdsvError):
    """The volatility converges to zero, so there is no steady-state density."""


class MomentDoesNotExist(QdsvError):
    pass


class SingularGram(QdsvError):
    """The projection Gram matrix could not be factorized even after regularization."""


class OutOfBounds(QdsvError):
    """An option price lies outside the no-arbitrage bounds."""


class NonFiniteIntegrand(QdsvError):
    pass


class NonFiniteMoments(QdsvError):
    """The matrix exponential overflowed."""
