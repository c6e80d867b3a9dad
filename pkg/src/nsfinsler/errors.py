"""Exception hierarchy shared by every module of the package."""


class FinslerError(Exception):
    pass


class InvalidInput(FinslerError, ValueError):
    """Malformed matrices: wrong shape, non-finite entries, asymmetry."""


class PreconditionViolated(FinslerError):
    """An operation was called on an instance outside its hypotheses."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class WitnessSearchFailed(FinslerError):
    """A violation is known to exist but no explicit vector was located."""


class BudgetExhausted(FinslerError):
    """The line-search bracket reached its width limit without turning.

    ``result`` carries the best point found so far.
    """

    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


class InternalInconsistency(FinslerError):
    """Two routes that must agree by theory returned different answers."""

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}
