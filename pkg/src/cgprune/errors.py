"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class CGPruneError(Exception):
    exit_code = 1


class UsageError(CGPruneError):
    """Bad arguments, configuration, or precondition violation."""

    exit_code = 2


class IntegrityError(CGPruneError):
    """Input data violates a structural invariant."""

    exit_code = 3


class FormatError(IntegrityError):
    """Input document cannot be parsed or has the wrong shape."""


class DegenerateDatasetError(IntegrityError):
    """Dataset lacks the edges a computation requires (e.g. no retain edges)."""


class StalenessError(IntegrityError):
    """Chained pipeline stages were produced under inconsistent configs."""


class NumericError(CGPruneError):
    """Non-finite value encountered during numeric computation."""

    exit_code = 4
