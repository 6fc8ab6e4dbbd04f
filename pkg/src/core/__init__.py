from .enums import ErrorCodes, ExitCodes, SolverStatus
from .exception_handlers import (
    ebd_exception_handler,
    general_exception_handler,
    handle_exception,
    validation_exception_handler,
)
from .exceptions import (
    ConfigError,
    CoverageError,
    DegenerateMapError,
    DegeneratePairError,
    DegeneratePointError,
    EBDException,
    EstimationError,
    GeometryError,
    InputError,
    InvalidFundamentalError,
    OrientationError,
    OutputError,
    SolverError,
)
from .logging import setup_logging

__all__ = [
    "ExitCodes",
    "ErrorCodes",
    "SolverStatus",
    "EBDException",
    "ConfigError",
    "InputError",
    "InvalidFundamentalError",
    "DegeneratePointError",
    "DegeneratePairError",
    "DegenerateMapError",
    "GeometryError",
    "EstimationError",
    "CoverageError",
    "OrientationError",
    "SolverError",
    "OutputError",
    "ebd_exception_handler",
    "validation_exception_handler",
    "general_exception_handler",
    "handle_exception",
    "setup_logging",
]
