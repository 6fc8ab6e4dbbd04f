from typing import Any, Optional

from .enums import ErrorCodes, ExitCodes


class EBDException(Exception):
    """Base of every error the pipeline raises on purpose."""

    exit_code = ExitCodes.INTERNAL
    error_code = ErrorCodes.SERVER_ERROR

    def __init__(self, message: str, details: Optional[Any] = None):
        super().__init__(message)
        self.detail = message
        self.details = details


class ConfigError(EBDException):
    exit_code = ExitCodes.CONFIG
    error_code = ErrorCodes.CONFIG_ERROR


class InputError(EBDException):
    exit_code = ExitCodes.INPUT
    error_code = ErrorCodes.INPUT_ERROR


class InvalidFundamentalError(InputError):
    error_code = ErrorCodes.INVALID_FUNDAMENTAL

    def __init__(self, message="Fundamental matrix must have rank 2", details=None):
        super().__init__(message, details)


class DegeneratePointError(InputError):
    error_code = ErrorCodes.DEGENERATE_POINT

    def __init__(self, message="Point coincides with the epipole", details=None):
        super().__init__(message, details)


class DegeneratePairError(InputError):
    error_code = ErrorCodes.DEGENERATE_PAIR

    def __init__(self, message="Sampson denominator underflow", details=None):
        super().__init__(message, details)


class DegenerateMapError(InputError):
    error_code = ErrorCodes.DEGENERATE_MAP

    def __init__(self, message="Affine map has no similarity part", details=None):
        super().__init__(message, details)


class GeometryError(InputError):
    error_code = ErrorCodes.GEOMETRY_ERROR


class EstimationError(InputError):
    error_code = ErrorCodes.ESTIMATION_FAILED


class CoverageError(InputError):
    error_code = ErrorCodes.COVERAGE_ERROR


class OrientationError(ConfigError):
    error_code = ErrorCodes.ORIENTATION_UNDETERMINED

    def __init__(self, message="Epipolar line orientation could not be determined", details=None):
        super().__init__(message, details)


class SolverError(EBDException):
    exit_code = ExitCodes.SOLVER
    error_code = ErrorCodes.SOLVER_FAILED


class OutputError(EBDException):
    exit_code = ExitCodes.IO
    error_code = ErrorCodes.OUTPUT_ERROR
