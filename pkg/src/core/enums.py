from enum import Enum


class ExitCodes(Enum):
    OK = 0
    INTERNAL = 1
    CONFIG = 2
    INPUT = 3
    SOLVER = 4
    IO = 5


class ErrorCodes(Enum):
    CONFIG_ERROR = "CONFIG_ERROR"
    INPUT_ERROR = "INPUT_ERROR"
    INVALID_FUNDAMENTAL = "INVALID_FUNDAMENTAL"
    DEGENERATE_POINT = "DEGENERATE_POINT"
    DEGENERATE_PAIR = "DEGENERATE_PAIR"
    DEGENERATE_MAP = "DEGENERATE_MAP"
    ORIENTATION_UNDETERMINED = "ORIENTATION_UNDETERMINED"
    GEOMETRY_ERROR = "GEOMETRY_ERROR"
    ESTIMATION_FAILED = "ESTIMATION_FAILED"
    SOLVER_FAILED = "SOLVER_FAILED"
    COVERAGE_ERROR = "COVERAGE_ERROR"
    OUTPUT_ERROR = "OUTPUT_ERROR"
    SERVER_ERROR = "SERVER_ERROR"


class SolverStatus(str, Enum):
    OPTIMAL = "optimal"
    INACCURATE = "inaccurate"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max-iterations"
    NUMERICAL_ERROR = "numerical-error"
