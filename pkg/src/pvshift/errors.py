"""Exception types raised across the package.

Everything a caller can fix by changing the input derives from
:class:`InputError`; :class:`InvariantViolation` signals a bug.
"""


class PvShiftError(Exception):
    """Base class for all package errors."""


class InputError(PvShiftError, ValueError):
    """Invalid or unusable input."""


class InvariantViolation(PvShiftError, AssertionError):
    """An internal consistency check failed."""


class EmptyInput(InputError):
    pass


class UnsortedInput(InputError):
    pass


class MissingPreviousDay(InputError):
    pass


class NonDivisorInterval(InputError):
    pass


class WindowTooLarge(InputError):
    pass


class NonPositiveSigma(InputError):
    pass


class EmptySearchSpace(InputError):
    pass


class WrongHistoryLength(InputError):
    pass


class AllDaysZeroActual(InputError):
    pass


class SearchOutOfDay(InputError):
    pass


class NoEvents(InputError):
    pass


class NoOffSeconds(InputError):
    pass


class NonPositiveTemperature(InputError):
    pass


class StartOverflowsDay(InputError):
    pass


class BaselineMissing(InputError):
    pass


class TooFewDays(InputError):
    pass


class InvalidParams(InputError):
    pass


class NoFilesFound(InputError):
    pass


class MalformedCsv(InputError):
    def __init__(self, path, line, reason=""):
        self.path = str(path)
        self.line = line
        msg = f"{self.path}:{line}: malformed CSV row"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class IoFailure(PvShiftError, OSError):
    pass
