"""Examples command: bundled pipeline configurations.

Commands:
- sinusmil examples list: Show available configs
- sinusmil examples show <name>: Print a config (or write it with --output)
"""

from __future__ import annotations

from pathlib import Path
from typing import Annotated

import typer
from rich.console import Console
from rich.table import Table

EXAMPLES: dict[str, dict[str, str]] = {
    "reference": {
        "file": "reference.yaml",
        "description": "Full protocol: 299-subject phantom, full network, N=15, P=35",
        "features": "100 epochs, 3 folds, axis-wise N/P sweep",
    },
    "smoke": {
        "file": "smoke.yaml",
        "description": "Desk-scale run: 20 subjects at 64^3, tiny network",
        "features": "Few epochs on CPU, small sweep grid",
    },
}


def _get_configs_dir() -> Path:
    """Directory of the configs bundled with the package."""
    import sinusmil

    configs_dir = Path(sinusmil.__file__).parent / "configs"
    if configs_dir.is_dir():
        return configs_dir
    raise FileNotFoundError(
        "Bundled configs not found. Please ensure the package is installed correctly."
    )


def read_example(name: str) -> str:
    """Text of a bundled config.

    Raises:
        FileNotFoundError: If the example does not exist.
    """
    if name not in EXAMPLES:
        raise FileNotFoundError(f"Example '{name}' not found")

    file_path = _get_configs_dir() / EXAMPLES[name]["file"]
    if not file_path.exists():
        raise FileNotFoundError(f"Example file not found: {file_path}")

    return file_path.read_text(encoding="utf-8")


examples_app = typer.Typer(
    name="examples",
    help="Show bundled pipeline configurations",
    no_args_is_help=True,
)


@examples_app.command("list")
def list_examples() -> None:
    """List bundled pipeline configs."""
    console = Console()

    table = Table(title="Available Examples", show_header=True, header_style="bold cyan")
    table.add_column("Name", style="green", no_wrap=True)
    table.add_column("Description", style="white")
    table.add_column("Features", style="dim")

    for name, info in EXAMPLES.items():
        table.add_row(name, info["description"], info["features"])

    console.print(table)
    console.print()
    console.print("[dim]Use 'sinusmil examples show <name>' to view a config[/dim]")


@examples_app.command("show")
def show_example(
    name: Annotated[str, typer.Argument(help="Name of the config to show (reference, smoke)")],
    output: Annotated[
        Path | None,
        typer.Option("--output", "-o", help="Write to file instead of stdout"),
    ] = None,
) -> None:
    """Show a bundled config; use --output to save it as a starting point."""
    console = Console(stderr=True)

    try:
        content = read_example(name)
    except FileNotFoundError as e:
        console.print(f"[red]Error:[/red] {e}")
        available = ", ".join(EXAMPLES.keys())
        console.print(f"[dim]Available examples: {available}[/dim]")
        raise typer.Exit(1)

    if output:
        output.write_text(content, encoding="utf-8")
        console.print(f"[green]✓[/green] Example saved to: {output}")
    else:
        print(content, end="")
