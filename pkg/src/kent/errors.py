"""Exception hierarchy shared by every kent module."""


class KentError(Exception):
    """Base class for all domain errors raised by kent."""


class InvalidSubsystem(KentError, ValueError):
    pass


class InvalidPermutation(KentError, ValueError):
    pass


class DimensionError(KentError, ValueError):
    pass


class NotHermitian(KentError, ValueError):
    pass


class NotPositive(KentError, ValueError):
    pass


class InvalidK(KentError, ValueError):
    pass


class NotAPartition(KentError, ValueError):
    pass


class InvalidParameter(KentError, ValueError):
    pass


class UnknownState(KentError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class EmptyDatabase(KentError, ValueError):
    pass


class BracketError(KentError, ValueError):
    pass


class FormatError(KentError, ValueError):
    pass


class IntegrityError(KentError, ValueError):
    pass


class VersionError(KentError, ValueError):
    pass
