class Ap4Error(Exception):
    """Base class for all package errors."""


class InputError(Ap4Error, ValueError):
    """Caller supplied data outside an operation's domain."""


class CostGuardError(Ap4Error):
    """A brute-force routine was asked to run above its size guard."""

    def __init__(self, guard, limit, value):
        self.guard = guard
        self.limit = limit
        self.value = value
        super().__init__(f"{guard}: p={value} exceeds the limit p <= {limit} "
                         f"(pass guard_override=True to lift it)")


class DefectError(Ap4Error, RuntimeError):
    """Internal consistency check failed; indicates a bug or numerical trouble."""


class PipelineFailure(Ap4Error):
    """A labelled stage of the density-increment pipeline could not proceed."""

    def __init__(self, stage, reason, detail=None):
        self.stage = stage
        self.reason = reason
        self.detail = detail or {}
        super().__init__(f"{stage}: {reason}")
