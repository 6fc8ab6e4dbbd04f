import sys
from typing import Annotated, Optional

import click
import typer

from src.commands import pipeline_app as app
from src.config import get_settings
from src.core import ExitCodes, handle_exception, setup_logging


@app.callback()
def root(
    log_level: Annotated[Optional[str], typer.Option("--log-level", help="DEBUG, INFO, WARNING or ERROR")] = None,
):
    """Epipolar bounded-distortion matching: generate, match, solve, evaluate, plot."""
    setup_logging(log_level or get_settings().log_level)


def main(argv: Optional[list[str]] = None) -> int:
    """Run the CLI and map every failure onto the exit-code taxonomy."""
    command = typer.main.get_command(app)
    try:
        result = command.main(args=argv, prog_name="ebd", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        return ExitCodes.INTERNAL.value
    except Exception as exc:
        return handle_exception(exc)
    return result if isinstance(result, int) else ExitCodes.OK.value


if __name__ == "__main__":
    sys.exit(main())
