"""Exception hierarchy shared by all modules."""


class ModlabError(Exception):
    """Base class for every error raised by the package."""


class InvalidBasisError(ModlabError, ValueError):
    pass


class BasisMismatchError(ModlabError, ValueError):
    pass


class SymmetryError(ModlabError, ValueError):
    """Raised when a matrix that must be Hermitian is not."""

    def __init__(self, asymmetry: float, tolerance: float):
        self.asymmetry = asymmetry
        self.tolerance = tolerance
        super().__init__(
            f"matrix is not Hermitian: ||M - M^H|| = {asymmetry:.3e} "
            f"exceeds {tolerance:.3e}"
        )


class DomainError(ModlabError, ValueError):
    pass


class ConditioningError(ModlabError, ValueError):
    def __init__(self, ratio: float, threshold: float):
        self.ratio = ratio
        self.threshold = threshold
        super().__init__(
            f"matrix is numerically singular: s_min/s_max = {ratio:.3e} "
            f"<= {threshold:.3e}"
        )


class ConsistencyError(ModlabError, RuntimeError):
    """Two independent evaluation routes disagree (indicates a bug)."""


class WrongAlgebraError(ModlabError, ValueError):
    pass


class TruncationRiskError(ModlabError, ValueError):
    pass


class DegeneracyError(ModlabError, RuntimeError):
    pass


class TailMassWarning(UserWarning):
    """Top oscillator levels carry non-negligible weight."""


class IdealMembershipWarning(UserWarning):
    """A KMS vector failed the truncation-sweep membership diagnostic."""
