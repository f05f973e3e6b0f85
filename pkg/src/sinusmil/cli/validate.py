"""Validate command: manifest directories and pipeline configs."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Any, NoReturn

import typer
from pydantic import ValidationError

from sinusmil.cli.stage import EXIT_FAILURE, EXIT_VALIDATION, print_diagnostics
from sinusmil.core.validation import (
    filter_errors,
    filter_warnings,
    has_errors,
    validate_config,
    validate_manifest,
)
from sinusmil.errors import ParseError
from sinusmil.io.tables import read_manifest
from sinusmil.io.yaml import load_config
from sinusmil.models.diagnostic import Diagnostic


def validate(
    target: Annotated[
        Path,
        typer.Argument(
            help="Manifest directory (subjects.tsv, ...) or pipeline config YAML.",
            exists=False,  # existence is checked below for a clearer message
        ),
    ],
    json_output: Annotated[
        bool,
        typer.Option("--json", "-j", help="Output results in JSON format for machine processing."),
    ] = False,
    no_warnings: Annotated[
        bool,
        typer.Option("--no-warnings", help="Report errors only."),
    ] = False,
) -> None:
    """Check a manifest or a config and list every violation.

    Exit codes:
    - 0: Valid (may have warnings)
    - 1: Validation or parse errors
    - 2: Target not found
    """
    if not target.exists():
        _fail(json_output, f"File not found: {target}", EXIT_FAILURE)

    kind = "Manifest" if target.is_dir() else "Config"
    try:
        if target.is_dir():
            diagnostics = validate_manifest(
                read_manifest(target), include_warnings=not no_warnings
            )
        else:
            diagnostics = validate_config(load_config(target), include_warnings=not no_warnings)
    except ParseError as e:
        _fail(json_output, str(e), EXIT_VALIDATION, line=e.line, column=e.column)
    except (ValidationError, FileNotFoundError, ValueError) as e:
        _fail(json_output, str(e), EXIT_VALIDATION)

    if json_output:
        _output_json_diagnostics(diagnostics)
    else:
        print_diagnostics(diagnostics, f"{kind} {target}")
        if not diagnostics:
            typer.echo(f"{kind} {target} is valid")

    raise typer.Exit(code=EXIT_VALIDATION if has_errors(diagnostics) else 0)


def _fail(json_output: bool, message: str, code: int, **location: Any) -> NoReturn:
    if json_output:
        _output_json({"valid": False, "error": message, **location})
    else:
        typer.echo(f"Error: {message}", err=True)
    raise typer.Exit(code=code)


def _output_json(data: dict[str, Any]) -> None:
    typer.echo(json.dumps(data, indent=2))


def _output_json_diagnostics(diagnostics: list[Diagnostic]) -> None:
    errors = filter_errors(diagnostics)
    warnings = filter_warnings(diagnostics)
    _output_json(
        {
            "valid": not errors,
            "errors": [d.model_dump(mode="json", exclude_none=True) for d in errors],
            "warnings": [d.model_dump(mode="json", exclude_none=True) for d in warnings],
            "summary": {"error_count": len(errors), "warning_count": len(warnings)},
        }
    )
