"""Exception types shared across the package."""


class RuleSieveError(Exception):
    """Base class for all package-specific errors."""


class DataError(RuleSieveError, ValueError):
    """Invalid or inconsistent input data: corpus files, labels, budgets."""


class InternalError(RuleSieveError, RuntimeError):
    """An internal consistency check failed; indicates a bug, not bad input."""


class PipelineStageError(RuleSieveError):
    """A pipeline stage failed; carries the stage name, wraps the cause."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
