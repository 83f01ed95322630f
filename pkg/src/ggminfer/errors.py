"""Exception types raised by the estimation routines."""


class NotPositiveDefinite(ArithmeticError):
    """Cholesky pivot fell below the scaled tolerance."""

    def __init__(self, pivot, value=None):
        self.pivot = int(pivot)
        self.value = value
        super().__init__(f"matrix is not positive definite (pivot {self.pivot})")


class SingularPair(ArithmeticError):
    """The 2x2 residual Gram matrix of a node pair is (numerically) singular."""


class NoConvergence(RuntimeError):
    pass


class DomainError(ValueError):
    pass


class ZeroColumn(ValueError):
    def __init__(self, column):
        self.column = int(column)
        super().__init__(f"design column {self.column} has zero norm")


class RankDeficientSupport(ArithmeticError):
    """Gram matrix of the selected columns is not positive definite."""


class DegenerateResidual(RuntimeWarning):
    """Issued when a fit ends with the noise level at its floor."""
