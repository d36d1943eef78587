"""Exception types raised by inner_clt."""


class InnerCLTError(ValueError):
    """Base class for all package errors."""


class ZeroOnBoundary(InnerCLTError):
    pass


class RotationInput(InnerCLTError):
    pass


class GridMismatch(InnerCLTError):
    pass


class NyquistViolation(InnerCLTError):
    pass


class LambdaNotContractive(InnerCLTError):
    pass


class AllZero(InnerCLTError):
    pass


class NonpositiveVariance(InnerCLTError):
    pass


class EmptySample(InnerCLTError):
    pass


class DeltaTooSmall(InnerCLTError):
    pass


class DegenerateSigma(InnerCLTError):
    pass


class NoiseFloor(InnerCLTError):
    pass


class TruncationTooCoarse(InnerCLTError):
    pass


class ConfigError(InnerCLTError):
    """Malformed or unreadable experiment configuration."""
