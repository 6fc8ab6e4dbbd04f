import logging

from pydantic import ValidationError
from rich.console import Console

from .enums import ErrorCodes, ExitCodes
from .exceptions import EBDException

logger = logging.getLogger(__name__)

_stderr = Console(stderr=True)


def _render(error_code: str, message: str, details=None) -> None:
    _stderr.print(f"[bold red]{error_code}[/bold red]: {message}")
    if details is not None:
        _stderr.print(details)


def ebd_exception_handler(exc: EBDException) -> int:
    _render(exc.error_code.value, exc.detail, exc.details)
    return exc.exit_code.value


def validation_exception_handler(exc: ValidationError) -> int:
    _render(ErrorCodes.CONFIG_ERROR.value, "Validation error", exc.errors(include_url=False))
    return ExitCodes.CONFIG.value


def general_exception_handler(exc: Exception) -> int:
    logger.debug("unhandled exception", exc_info=exc)
    _render(ErrorCodes.SERVER_ERROR.value, "An unexpected error occurred", str(exc))
    return ExitCodes.INTERNAL.value


def handle_exception(exc: Exception) -> int:
    if isinstance(exc, EBDException):
        return ebd_exception_handler(exc)
    if isinstance(exc, ValidationError):
        return validation_exception_handler(exc)
    return general_exception_handler(exc)
