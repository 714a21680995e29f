"""Exception hierarchy.

Errors fall into two families that the CLI maps onto exit codes: problems
with the input data or arguments (``DataError``, exit code 2) and numerical
breakdowns during estimation (``NumericalError``, exit code 3).
"""


class SarimaError(Exception):
    """Base class for every error raised by sarimakit."""

    exit_code = 2


class DataError(SarimaError, ValueError):
    exit_code = 2


class NumericalError(SarimaError, ArithmeticError):
    exit_code = 3


# series / calendar
class LengthTooShort(DataError):
    pass


class ArityMismatch(DataError):
    pass


class OutOfRange(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class InsufficientData(DataError):
    pass


class HorizonZero(DataError):
    pass


# metrics / counterfactual
class LengthMismatch(DataError):
    pass


class ZeroActualForMape(DataError):
    pass


class RangeMismatch(DataError):
    pass


class ZeroProjection(DataError):
    pass


class EmptyReport(DataError):
    pass


# diagnostics
class LagTooLarge(DataError):
    pass


class DegreesOfFreedomNonPositive(DataError):
    pass


class DegenerateSampleSize(DataError):
    pass


class ZeroVariance(DataError):
    pass


# search
class EmptySearchSpace(DataError):
    pass


class EmptyShortlist(DataError):
    pass


# ingestion
class IoError(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class GapInCalendar(DataError):
    def __init__(self, month):
        super().__init__(f"gap in calendar: {month} is missing")
        self.month = month


class DuplicateMonth(DataError):
    def __init__(self, month):
        super().__init__(f"duplicate month: {month}")
        self.month = month


class SchemaError(DataError):
    pass


class EmptySeries(DataError):
    pass


class NetworkError(DataError):
    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class CacheCorrupt(DataError):
    pass


# numerical
class NonStationaryParams(NumericalError):
    pass


class NumericalFailure(NumericalError):
    pass


class NonFiniteLikelihood(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NotConverged(NumericalError):
    pass


class SingularToeplitz(NumericalError):
    pass


class CollinearRegressors(NumericalError):
    pass


class AllCellsFailed(NumericalError):
    pass
