"""Exception types shared across the package."""


class EtauditError(Exception):
    """Base class for all etaudit errors."""


class DataError(EtauditError):
    """Malformed input data: missing files, bad columns, unparseable cells."""


class FitError(EtauditError):
    """A model could not be fitted (singular system, unusable target)."""


class UsageError(EtauditError):
    """Invalid command-line usage."""
