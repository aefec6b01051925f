"""Exception hierarchy.

Each error carries the CLI exit code it maps to, so the runner never has to
inspect messages to decide how to terminate.
"""

from __future__ import annotations

EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4
EXIT_IO = 5


class LargeSolError(Exception):
    exit_code = EXIT_SOLVER

    def __init__(self, message: str, where: str | None = None):
        super().__init__(message)
        self.where = where

    def __str__(self) -> str:
        msg = super().__str__()
        return f"[{self.where}] {msg}" if self.where else msg


# input / configuration problems
class InvalidDomainError(LargeSolError, ValueError):
    exit_code = EXIT_CONFIG


class EmptyErosionError(InvalidDomainError):
    pass


class InvalidResolutionError(InvalidDomainError):
    pass


class InvalidInputError(LargeSolError, ValueError):
    exit_code = EXIT_CONFIG


class InvalidNonlinearityError(InvalidInputError):
    pass


class ParameterRangeError(InvalidInputError):
    pass


class ConfigError(InvalidInputError):
    pass


# numerical failures
class SolverFailure(LargeSolError):
    pass


class ShootingFailure(SolverFailure):
    pass


class ConvergenceFailure(SolverFailure):
    pass


class CoverageError(SolverFailure):
    pass


class CompositionError(SolverFailure):
    pass


class RangeError(SolverFailure):
    pass


class UndefinedTransformError(SolverFailure):
    pass


class PsiDomainError(SolverFailure, ValueError):
    pass


class VerificationFailure(LargeSolError):
    exit_code = EXIT_VERIFY
