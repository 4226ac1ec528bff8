"""Exception hierarchy.

Hypothesis violations are kept apart from numerical failures so that a
malformed instance is never counted as a counterexample.
"""


class OpineqError(Exception):
    """Base class for every error raised by this package."""


class LinalgError(OpineqError, ValueError):
    pass


class ShapeError(LinalgError):
    pass


class NotHermitianError(LinalgError):
    def __init__(self, defect, limit):
        super().__init__(
            f"matrix is not Hermitian: symmetrization defect {defect:.3e} exceeds {limit:.3e}"
        )
        self.defect = defect
        self.limit = limit


class NonFiniteError(LinalgError):
    pass


class SingularMatrixError(LinalgError):
    pass


class ConvergenceError(LinalgError):
    """Jacobi sweeps hit the cap before the off-diagonal mass vanished."""

    def __init__(self, residual, sweeps):
        super().__init__(
            f"eigensolver did not converge after {sweeps} sweeps "
            f"(off-diagonal Frobenius mass {residual:.3e})"
        )
        self.residual = residual
        self.sweeps = sweeps


class DomainError(LinalgError):
    """Spectrum outside the domain of the function being applied."""


class UnsupportedInputError(LinalgError):
    pass


class HypothesisViolation(OpineqError, ValueError):
    """Inputs do not satisfy the hypotheses of the statement being checked."""
