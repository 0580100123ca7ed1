"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    """Input violates a precondition (shape, range, unitarity, ...)."""


class NumericFailure(ArithmeticError):
    """A numerical routine failed or produced an inconsistent result."""


class NotPSDError(InvalidArgument):
    """Matrix expected to be positive semidefinite has a negative eigenvalue."""

    def __init__(self, eigenvalue: float):
        self.eigenvalue = float(eigenvalue)
        super().__init__(f"matrix is not PSD: eigenvalue {self.eigenvalue:.3e}")


class DegenerateMapError(InvalidArgument):
    """Mapped operator has (numerically) zero trace and cannot be normalized."""
