class WeakHopfError(ValueError):
    """Base class for every error raised by the package."""


class NotPositiveError(WeakHopfError):
    pass


class NotClosedError(WeakHopfError):
    """A subspace that should be an algebra is not closed under products."""


class NotInLegError(WeakHopfError):
    pass


class NotUnitalError(WeakHopfError):
    pass


class NoAntipodeError(WeakHopfError):
    pass


class NotWhaError(WeakHopfError):
    """Raised when an operation needs a regular unital MPI (C*-WHA)."""


class InvalidPresentationError(WeakHopfError):
    def __init__(self, failures):
        self.failures = dict(failures)
        names = ", ".join(f"{k} ({v:.3g})" for k, v in self.failures.items())
        super().__init__(f"invalid presentation: {names}")


class RepresentationError(WeakHopfError):
    pass


class ActionError(WeakHopfError):
    pass
