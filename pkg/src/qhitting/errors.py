"""Exception hierarchy shared by every module of the package."""


class QHittingError(Exception):
    pass


class DimensionError(QHittingError, ValueError):
    pass


class ValidationError(QHittingError, ValueError):
    pass


class SingularSystem(QHittingError):
    """Raised when a linear system is singular to working precision."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class PreconditionViolated(QHittingError):
    """The restricted map has spectral radius >= 1: the hitting time is infinite."""

    def __init__(self, message, spectral_radius=None):
        super().__init__(message)
        self.spectral_radius = spectral_radius


class NonConvergent(QHittingError):
    pass


class AllCensored(QHittingError):
    pass


class TrajectoryAborted(QHittingError):
    pass
