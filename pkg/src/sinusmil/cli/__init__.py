"""CLI commands for sinusmil."""

from sinusmil.cli.main import app

__all__ = ["app"]
