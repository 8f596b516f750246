"""
Exception Hierarchy
File: utils/errors.py
"""


class GeopercError(Exception):
    """Base class for every error raised by geoperc"""


class ParameterError(GeopercError, ValueError):
    """Invalid argument or violated precondition"""


class QueryError(ParameterError):
    """Query outside the window of a realization"""


class ConfigError(ParameterError):
    """Invalid experiment configuration (CLI exit code 2)"""


class ContractViolation(GeopercError, RuntimeError):
    """Runtime contract broken during a simulation (CLI exit code 3)"""


class PaddingError(ContractViolation):
    """Sampled region is too small for the leakage pad"""


class BracketError(ContractViolation):
    """Bisection bracket endpoints fail the finite-size classification"""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ReplicationError(ContractViolation):
    """A single Monte Carlo replication aborted"""

    def __init__(self, replication, cause):
        super().__init__(f"replication {replication} failed: {cause}")
        self.replication = replication
        self.cause = cause
