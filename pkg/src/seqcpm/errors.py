"""Exception hierarchy.

The CLI maps the three top-level families onto exit codes: ``ConfigError``
to 2, ``DataError`` to 3 and ``NumericalError`` to 4.
"""


class SeqCPMError(Exception):
    """Base class for all package errors."""


class ConfigError(SeqCPMError):
    pass


class DataError(SeqCPMError):
    pass


class NumericalError(SeqCPMError):
    pass


class DimensionMismatch(DataError, ValueError):
    pass


class MissingHeader(DataError):
    pass


class NonBinaryOutcome(DataError):
    def __init__(self, row, value):
        super().__init__(f"row {row}: outcome {value!r} is not 0 or 1")
        self.row = row
        self.value = value


class MissingValue(DataError):
    def __init__(self, row, column):
        super().__init__(f"row {row}: missing value in column {column!r}")
        self.row = row
        self.column = column


class DuplicateOrder(DataError):
    pass


class EmptyFile(DataError):
    pass


class CohortTooSmall(DataError):
    pass


class FitError(NumericalError):
    """A model could not be fitted to the data it was given."""


class DegenerateOutcome(FitError):
    pass


class NonConvergence(FitError):
    pass


class QuasiSeparation(FitError):
    pass


class SingularDesign(FitError):
    pass


class UnsplittableCohort(FitError):
    pass


class ConstantLogit(NumericalError):
    pass


class TooManyDegenerateReplicates(NumericalError):
    pass


class RootBracketFailure(NumericalError):
    pass


class InvalidR2(NumericalError):
    pass


class InsufficientPoints(DataError):
    pass


class ZeroChi2Warning(RuntimeWarning):
    pass
