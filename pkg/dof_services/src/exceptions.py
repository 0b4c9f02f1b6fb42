"""Error hierarchy shared by the services and the command line."""
from typing import Optional

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DEGENERATE = 4


class RelayDofError(Exception):
    exit_code: int = EXIT_DEGENERATE

    def __init__(self, message: str, stage: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.stage = stage

    def with_stage(self, stage: str) -> "RelayDofError":
        if self.stage is None:
            self.stage = stage
        return self

    def __str__(self) -> str:
        if self.stage:
            return f"[{self.stage}] {self.message}"
        return self.message


class InvalidInputError(RelayDofError, ValueError):
    exit_code = EXIT_USAGE


class InvalidParameterError(RelayDofError, ValueError):
    exit_code = EXIT_USAGE


class UnsupportedRegionError(RelayDofError, ValueError):
    exit_code = EXIT_USAGE


class UnreachableTargetError(RelayDofError, ValueError):
    exit_code = EXIT_USAGE


class InfeasibleError(RelayDofError):
    pass


class InfeasibleAlignmentError(InfeasibleError):
    pass


class InfeasibleDimensionError(InfeasibleError):
    pass


class DegenerateInstanceError(RelayDofError):
    def __init__(self, message: str, attempts: int = 0, stage: Optional[str] = None):
        super().__init__(message, stage=stage)
        self.attempts = attempts


class InternalContractError(RelayDofError):
    pass


class PreconditionError(RelayDofError):
    pass


class ArtifactIOError(RelayDofError):
    exit_code = EXIT_IO
