"""Exception hierarchy shared across the package."""


class UamasError(Exception):
    """Base class for all package errors."""


# -- dataset ----------------------------------------------------------------

class MissingFile(UamasError):
    pass


class RowCountMismatch(UamasError):
    pass


class NonNumericValue(UamasError):
    """A sample could not be parsed as a finite number.

    Carries file, row and column (0-based) of the offending cell.
    """

    def __init__(self, message: str, file: str = "", row: int = -1, col: int = -1):
        super().__init__(message)
        self.file = file
        self.row = row
        self.col = col


class LengthMismatch(UamasError):
    pass


class UnknownLabel(UamasError):
    pass


# -- features ---------------------------------------------------------------

class TooShort(UamasError):
    pass


class NonFinite(UamasError):
    pass


class EmptyTrainingSet(UamasError):
    pass


# -- model ------------------------------------------------------------------

class NonFiniteLoss(UamasError):
    """Training loss diverged; carries the epoch/batch diagnostic in args."""


class ShapeMismatch(UamasError):
    pass


# -- evaluation -------------------------------------------------------------

class InvalidK(UamasError):
    pass


class EmptyRecords(UamasError):
    pass


# -- agent runtime ----------------------------------------------------------

class DuplicateName(UamasError):
    pass


class UnknownAgent(UamasError):
    pass


class MailboxClosed(UamasError):
    pass


# -- monitoring pipeline ----------------------------------------------------

class InvalidModel(UamasError):
    pass


class UnknownTask(UamasError):
    pass


class NoModelDeployed(UamasError):
    pass
