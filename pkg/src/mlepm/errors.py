"""Exception types raised across the package.

Every error derives from :class:`MlEpmError`; most also derive from
``ValueError`` so callers that only care about bad input can catch that.
"""


class MlEpmError(Exception):
    """Base class for all package errors."""


# tensor algebra
class DegenerateTke(MlEpmError, ValueError):
    """Turbulent kinetic energy at or below the normalization floor."""


class NoConvergence(MlEpmError, ArithmeticError):
    """Iterative eigensolver did not converge."""


class NonRealizableEigenvalues(MlEpmError, ValueError):
    """Anisotropy eigenvalues outside the realizable interval."""


class InvalidBarycentric(MlEpmError, ValueError):
    pass


# perturbation
class InvalidDelta(MlEpmError, ValueError):
    pass


class EmptySpecList(MlEpmError, ValueError):
    pass


# network
class InputTooShort(MlEpmError, ValueError):
    pass


class DegenerateBatch(MlEpmError, ValueError):
    """Batch normalization in training mode needs at least two samples."""


class ShapeMismatch(MlEpmError, ValueError):
    pass


class EmptyBatch(MlEpmError, ValueError):
    pass


class LengthMismatch(MlEpmError, ValueError):
    pass


class EmptyPartition(MlEpmError, ValueError):
    pass


class CheckpointError(MlEpmError):
    """Missing, unreadable or incompatible model checkpoint."""


# data
class DatasetError(MlEpmError, ValueError):
    """Base for problems found while reading a dataset file."""


class ParseError(DatasetError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NegativeTke(ParseError):
    pass


class NonMonotoneProfile(DatasetError):
    pass


class MissingFreestream(DatasetError):
    pass


class NonPositiveFreestream(MlEpmError, ValueError):
    pass


class TooFewProfiles(MlEpmError, ValueError):
    pass


class DegenerateSpread(MlEpmError, ValueError):
    pass


class InvalidConfig(MlEpmError, ValueError):
    pass
