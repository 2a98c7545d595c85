"""Exception types raised across the package."""


class SupermapError(Exception):
    """Base class for every error raised by :mod:`qsupermaps`."""


class DuplicateLabelError(SupermapError, ValueError):
    pass


class UnknownLabelError(SupermapError, KeyError):
    pass


class ShapeMismatchError(SupermapError, ValueError):
    pass


class DimensionMismatchError(SupermapError, ValueError):
    pass


class NotPSDError(SupermapError, ValueError):
    pass


class MarginalMismatchError(SupermapError, ValueError):
    pass


class DimensionOrderError(SupermapError, ValueError):
    pass


class NotCPTNIError(SupermapError, ValueError):
    pass


class NonLinearActionError(SupermapError, ValueError):
    pass


class BadMarginalError(SupermapError, ValueError):
    pass


class NumericalFailureError(SupermapError, ArithmeticError):
    pass


class SolverFailureError(SupermapError, RuntimeError):
    pass


class NotCPPError(SupermapError, ValueError):
    pass


class NotCompletelyCPTNIError(SupermapError, ValueError):
    """The supermap has complete-CPTNI value above one, so no completion exists."""

    def __init__(self, message: str, alpha: float):
        super().__init__(message)
        self.alpha = alpha


class NotSuperchannelError(SupermapError, ValueError):
    pass


class BranchesDoNotSumToSuperchannelError(SupermapError, ValueError):
    pass


class NotValidInstrumentError(SupermapError, ValueError):
    pass


class IndexOutOfRangeError(SupermapError, IndexError):
    pass


class ParseError(SupermapError, ValueError):
    pass
