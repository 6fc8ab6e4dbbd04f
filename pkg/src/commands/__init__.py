from src.commands.pipeline_commands import app as pipeline_app

__all__ = [
    "pipeline_app"
]
