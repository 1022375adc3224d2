"""Exception types shared across the package."""


class GelfandError(Exception):
    """Base class for all package-specific failures."""


class ExpressionError(GelfandError):
    """Raised on a malformed arithmetic expression; carries line/column."""

    def __init__(self, message, line, col):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class ConfigError(GelfandError):
    """Raised on a malformed or semantically invalid config document.

    ``line``/``col`` are set for syntax errors and are None for semantic
    errors (which instead name the offending key in the message).
    """

    def __init__(self, message, line=None, col=None, key=None):
        loc = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.col = col
        self.key = key


class QuadratureError(GelfandError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class TauNotConverged(GelfandError):
    """The curvature-exponent estimate did not settle; carries the estimate."""

    def __init__(self, estimate, message="tau estimate did not converge"):
        super().__init__(message)
        self.estimate = estimate


class InconsistentQuartic(GelfandError):
    """Quartic violates the value-at-one sign invariant; no root bracketed."""


class NoSolution(GelfandError):
    """Both Newton and monotone iteration failed at this lambda."""

    def __init__(self, lam, message=None):
        super().__init__(message or f"no solution found at lambda={lam!r}")
        self.lam = lam


class SingularTouch(GelfandError):
    """An iterate reached the domain endpoint of a singular nonlinearity."""

    def __init__(self, lam, message=None):
        super().__init__(message or f"iterate touched the domain endpoint at lambda={lam!r}")
        self.lam = lam


class EigenIterationError(GelfandError):
    """Inverse iteration for the stability eigenvalue did not converge."""
