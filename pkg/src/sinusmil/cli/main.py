"""Main CLI application.

Entry point is configured in pyproject.toml as `sinusmil`.
"""

import logging
from typing import Annotated

import typer
from rich.console import Console
from rich.logging import RichHandler

from sinusmil import __version__

app = typer.Typer(
    name="sinusmil",
    help="sinusmil - multiple instance ensembling for sinus anomaly classification",
    no_args_is_help=True,
    pretty_exceptions_enable=False,  # Cleaner error output
)


def version_callback(value: bool) -> None:
    """Print version and exit."""
    if value:
        typer.echo(f"sinusmil version {__version__}")
        raise typer.Exit()


def configure_logging(verbose: bool, quiet: bool) -> None:
    """Route the package logger through rich on stderr."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logger = logging.getLogger("sinusmil")
    logger.handlers.clear()
    logger.addHandler(
        RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=verbose)
    )
    logger.setLevel(level)
    logger.propagate = False


@app.callback()
def main(
    version: Annotated[
        bool | None,
        typer.Option(
            "--version",
            "-v",
            help="Show version and exit.",
            callback=version_callback,
            is_eager=True,
        ),
    ] = None,
    verbose: Annotated[
        bool, typer.Option("--verbose", "-V", help="Log per-epoch and per-subject detail.")
    ] = False,
    quiet: Annotated[bool, typer.Option("--quiet", "-q", help="Only log warnings.")] = False,
) -> None:
    """sinusmil - multiple instance ensembling for sinus anomaly classification."""
    configure_logging(verbose, quiet)


# Import and register subcommands
from sinusmil.cli.data import extract, fit_centroids, phantom, register, split  # noqa: E402
from sinusmil.cli.examples import examples_app  # noqa: E402
from sinusmil.cli.model import evaluate, gradcheck, predict, train  # noqa: E402
from sinusmil.cli.results import report, sweep  # noqa: E402
from sinusmil.cli.validate import validate  # noqa: E402

app.command("phantom")(phantom)
app.command("register")(register)
app.command("fit-centroids")(fit_centroids)
app.command("extract")(extract)
app.command("split")(split)
app.command("train")(train)
app.command("predict")(predict)
app.command("evaluate")(evaluate)
app.command("gradcheck")(gradcheck)
app.command("sweep")(sweep)
app.command("report")(report)
app.command("validate")(validate)
app.add_typer(examples_app, name="examples")


if __name__ == "__main__":
    app()
