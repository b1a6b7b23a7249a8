"""Exception hierarchy shared by every dyadgen module."""


class DyadgenError(Exception):
    """Base class for all errors raised by this package."""


# grid
class ModesExceedNyquist(DyadgenError, ValueError):
    pass


class ResolutionBelowModeSupport(DyadgenError, ValueError):
    pass


class ResolutionMismatch(DyadgenError, ValueError):
    pass


# random fields
class CholeskyFailure(DyadgenError, RuntimeError):
    pass


class TooFewSamples(DyadgenError, ValueError):
    pass


class ChannelCountNotOne(DyadgenError, ValueError):
    pass


# neural operators
class ChannelMismatch(DyadgenError, ValueError):
    pass


class TapeMismatch(DyadgenError, ValueError):
    pass


class NoFunctionalHead(DyadgenError, ValueError):
    pass


class InvalidArchitecture(DyadgenError, ValueError):
    pass


class CheckpointFormatError(DyadgenError, ValueError):
    pass


class CheckpointArchMismatch(DyadgenError, ValueError):
    pass


# training
class ShapeMismatch(DyadgenError, ValueError):
    pass


class BadJointIndex(DyadgenError, IndexError):
    pass


class NonFiniteLoss(DyadgenError, FloatingPointError):
    pass


class ConfigError(DyadgenError, ValueError):
    pass


# metrics
class NotSymmetric(DyadgenError, ValueError):
    pass


class OddCount(DyadgenError, ValueError):
    pass


class EmptySet(DyadgenError, ValueError):
    pass


class LengthMismatch(DyadgenError, ValueError):
    pass


# data
class MotionFormatError(DyadgenError, ValueError):
    """Base for every rejected PMO file."""


class BadMagic(MotionFormatError):
    pass


class TruncatedFile(MotionFormatError):
    pass


class TrailingData(MotionFormatError):
    pass


class BadHeader(MotionFormatError):
    pass


class NonFiniteValue(MotionFormatError):
    pass


class BadDelay(DyadgenError, ValueError):
    pass


class EmptyDataset(DyadgenError, ValueError):
    pass
