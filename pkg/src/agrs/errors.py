"""Exception types shared across the package."""


class AGRSError(Exception):
    """Base class for every error raised by this package."""


class DomainError(AGRSError, ValueError):
    pass


class ConvergenceError(AGRSError, ArithmeticError):
    pass


class SamplerError(AGRSError):
    pass


class DegenerateSurvival(SamplerError):
    pass


class MassInconsistency(SamplerError):
    pass


class IterationCap(SamplerError):
    pass


class SurvivalUnderflow(SamplerError):
    pass


class BoundsViolation(SamplerError):
    pass


class ContainmentViolation(BoundsViolation):
    """The target superlevel set does not fit inside the shared bound width."""


class WindowOverflow(AGRSError):
    pass


class ChainTruncated(SamplerError):
    pass


class DecodeError(AGRSError, ValueError):
    pass


class IndexRecoveryError(DecodeError):
    pass
