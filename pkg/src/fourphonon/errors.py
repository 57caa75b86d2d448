"""Exception types shared across the package.

Each class carries the CLI exit code it maps to.
"""


class FourPhononError(Exception):
    exit_code = 4


class DimensionError(FourPhononError, ValueError):
    """Invalid or mismatched Hilbert-space dimension."""

    exit_code = 2


class DomainError(FourPhononError, ValueError):
    """Argument outside the supported domain."""

    exit_code = 2


class TruncationError(FourPhononError):
    """Population or amplitude in the top Fock levels exceeds tolerance."""

    exit_code = 2


class UndefinedError(FourPhononError, ArithmeticError):
    """Quantity is mathematically undefined for the given input (e.g. 0/0)."""

    exit_code = 2


class ConvergenceError(FourPhononError):
    """Series or time evolution failed to converge."""

    exit_code = 3

    def __init__(self, message, residual=None, partial=None):
        super().__init__(message)
        self.residual = residual
        self.partial = partial


class IntegrationError(ConvergenceError):
    """Trace drift or non-finite values during time integration."""
