"""Exception hierarchy shared by all modules."""


class SbpGreenError(Exception):
    """Base class for every error raised by this package."""


class SingularMatrix(SbpGreenError):
    """A pivot fell below the singularity threshold during LU factorization."""


class NotSymmetric(SbpGreenError):
    pass


class GridTooSmall(SbpGreenError):
    pass


class OddN(SbpGreenError):
    pass


class NonIntegerSequence(SbpGreenError):
    """An exact division in the integer sequence tables left a remainder."""


class SingularSystem(SbpGreenError):
    """The assembled discretization matrix is singular."""


class SingularPenalty(SingularSystem):
    """sigma_L = 0 makes the advection matrix singular."""


class SingularQbar(SingularSystem):
    pass


class SingularAbar(SingularSystem):
    pass


class SingularSigma(SingularSystem):
    """The 4x4 boundary matrix is singular.

    ``condition`` is ``"BC"`` when the boundary-condition block vanishes and
    ``"penalty"`` when the penalty block does.
    """

    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


class NotWideStencil(SbpGreenError):
    pass


class NotCentrosymmetric(SbpGreenError):
    pass


class DegenerateBC(SbpGreenError):
    pass


class UnstableStep(SbpGreenError):
    """Energy grew during a homogeneous run that should be dissipative."""

    def __init__(self, message, step, growth):
        super().__init__(message)
        self.step = step
        self.growth = growth
