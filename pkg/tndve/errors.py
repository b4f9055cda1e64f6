"""
Error hierarchy for tndve.

Every error carries a machine-readable ``code`` and the CLI ``exit_code`` used
when it escapes a command.
"""
from typing import Optional


class TndveError(Exception):
    """Base class for all library errors."""
    code = "error"
    exit_code = 1

    def to_dict(self):
        return {'error': self.code, 'message': str(self)}


# =====================================
# Input / configuration
# =====================================

class ConfigError(TndveError):
    code = "config_error"
    exit_code = 10


class FileError(TndveError):
    code = "file_error"
    exit_code = 11


class SchemaError(TndveError):
    code = "schema_error"
    exit_code = 12


class DomainValueError(TndveError, ValueError):
    """A cell value outside its allowed domain (y outside {0,1,2}, v outside {0,1}, ...)."""
    code = "domain_value"
    exit_code = 13


# =====================================
# Fitting / solving
# =====================================

class RankDeficient(TndveError):
    code = "rank_deficient"
    exit_code = 20


class Separation(TndveError):
    code = "separation"
    exit_code = 21


class NotConverged(TndveError):
    code = "not_converged"
    exit_code = 22

    def __init__(self, message: str, step: Optional[int] = None):
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)
        self.step = step


class SingularJacobian(TndveError):
    code = "singular_jacobian"
    exit_code = 23


class DimensionMismatch(TndveError):
    code = "dimension_mismatch"
    exit_code = 24


# =====================================
# Estimation
# =====================================

class DegenerateData(TndveError):
    code = "degenerate_data"
    exit_code = 30


class DegenerateEstimand(TndveError):
    code = "degenerate_estimand"
    exit_code = 31


class TooManyFailures(TndveError):
    code = "too_many_failures"
    exit_code = 40

    def __init__(self, message: str, failures: int = 0, total: int = 0):
        super().__init__(message)
        self.failures = failures
        self.total = total


# =====================================
# Simulation
# =====================================

class UnknownScenario(TndveError):
    code = "unknown_scenario"
    exit_code = 41


class InvalidProbability(TndveError):
    code = "invalid_probability"
    exit_code = 42


ERROR_CLASSES = [
    ConfigError, FileError, SchemaError, DomainValueError,
    RankDeficient, Separation, NotConverged, SingularJacobian, DimensionMismatch,
    DegenerateData, DegenerateEstimand, TooManyFailures,
    UnknownScenario, InvalidProbability,
]
