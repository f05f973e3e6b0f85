"""Shared plumbing of the pipeline subcommands.

Every stage resolves its config (defaults < YAML < flags < environment),
checks it, takes the output directory lock, writes config.resolved.yaml
into its own directory and maps failures onto exit codes:

    0  success
    1  validation error (config or manifest diagnostics, parse errors)
    2  stage failure (missing prerequisite, lock held, error during work)
"""

from __future__ import annotations

import logging
import os
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Annotated

import typer
from pydantic import ValidationError
from rich.console import Console

from sinusmil.core.validation import filter_errors, filter_warnings, validate_config
from sinusmil.errors import ParseError, PrerequisiteError, SinusMilError, StageLockedError
from sinusmil.io.tables import read_manifest
from sinusmil.io.yaml import dump_config, load_config
from sinusmil.models.diagnostic import Diagnostic
from sinusmil.models.manifest import Manifest
from sinusmil.models.settings import PipelineConfig

logger = logging.getLogger(__name__)

DATA_ROOT_ENV = "SINUSMIL_DATA_ROOT"
LOCK_FILE = ".sinusmil.lock"
RESOLVED_CONFIG = "config.resolved.yaml"

EXIT_VALIDATION = 1
EXIT_FAILURE = 2

console = Console()
err_console = Console(stderr=True)


class NetworkChoice(str, Enum):
    FULL = "full"
    TINY = "tiny"


# =============================================================================
# Shared options
# =============================================================================

ConfigOption = Annotated[
    Path | None,
    typer.Option("--config", "-c", help="Pipeline config YAML (defaults: N=15, P=35, 3 folds)."),
]
SeedOption = Annotated[int | None, typer.Option("--seed", help="Master seed.")]
SampleSizeOption = Annotated[
    int | None, typer.Option("--n", help="Instances drawn per side per subject (N).")
]
PatchSizeOption = Annotated[
    int | None, typer.Option("--patch-size", help="Crop size P in registered voxels.")
]
FoldsOption = Annotated[int | None, typer.Option("--folds", help="Cross-validation folds.")]
NetworkOption = Annotated[
    NetworkChoice | None, typer.Option("--network", help="Network preset.")
]
EnsembleOption = Annotated[
    bool | None,
    typer.Option("--ensemble/--no-ensemble", help="Score per region (ensembled) or per instance."),
]
OutOption = Annotated[Path | None, typer.Option("--out", "-o", help="Run output directory.")]
DataRootOption = Annotated[
    Path | None,
    typer.Option("--data-root", envvar=DATA_ROOT_ENV, help="Input data directory."),
]


def resolve_config(
    config_path: Path | None = None,
    *,
    data_root: Path | None = None,
    out: Path | None = None,
    seed: int | None = None,
    n: int | None = None,
    patch_size: int | None = None,
    folds: int | None = None,
    network: NetworkChoice | None = None,
    ensemble: bool | None = None,
) -> PipelineConfig:
    """Load the config file (if any) and apply flag overrides; exit 1 on errors."""
    try:
        config = load_config(config_path) if config_path is not None else PipelineConfig()
        return config.with_overrides(
            data_root=str(data_root) if data_root is not None else None,
            output_dir=str(out) if out is not None else None,
            seed=seed,
            n=n,
            patch_size=patch_size,
            folds=folds,
            network=network.value if network is not None else None,
            ensemble=ensemble,
        )
    except FileNotFoundError as e:
        err_console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(EXIT_VALIDATION)
    except ParseError as e:
        err_console.print(f"[red]Parse error:[/red] {e}")
        raise typer.Exit(EXIT_VALIDATION)
    except ValidationError as e:
        err_console.print(f"[red]Invalid config:[/red] {e}")
        raise typer.Exit(EXIT_VALIDATION)


def print_diagnostics(diagnostics: list[Diagnostic], subject: str) -> None:
    """Human-readable diagnostics followed by a one-line summary."""
    errors = filter_errors(diagnostics)
    warnings = filter_warnings(diagnostics)
    for d in [*errors, *warnings]:
        style = "red" if d.is_error else "yellow"
        err_console.print(f"[{style}]{d.severity.value}[/{style}] [{d.rule_id}] at {d.path}")
        err_console.print(f"  {d.message}")
        if d.fix:
            err_console.print(f"  [dim]Fix: {d.fix}[/dim]")
    if errors:
        err_console.print(
            f"{subject} is invalid: {len(errors)} error(s), {len(warnings)} warning(s)"
        )
    elif warnings:
        err_console.print(f"{subject} is valid with {len(warnings)} warning(s)")


@dataclass(frozen=True)
class Stage:
    """A running subcommand and its namespaced output directory."""

    name: str
    config: PipelineConfig

    @property
    def root(self) -> Path:
        return Path(self.config.output_dir)

    @property
    def dir(self) -> Path:
        return self.root / self.name

    @property
    def data_root(self) -> Path:
        return Path(self.config.data_root)

    def output_of(self, stage: str, *parts: str) -> Path:
        return self.root.joinpath(stage, *parts)

    def require(self, stage: str, *parts: str) -> Path:
        """Path of another stage's output, or PrerequisiteError naming that stage."""
        path = self.output_of(stage, *parts)
        if not path.exists():
            raise PrerequisiteError(stage, path)
        return path

    def manifest_of(self, stage: str) -> Manifest:
        return read_manifest(self.require(stage, "manifest"))


@contextmanager
def _lock(root: Path) -> Iterator[None]:
    root.mkdir(parents=True, exist_ok=True)
    lock_path = root / LOCK_FILE
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise StageLockedError(lock_path) from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock_path.unlink(missing_ok=True)


@contextmanager
def run_stage(name: str, config: PipelineConfig) -> Iterator[Stage]:
    """Validate the config, lock the run directory and translate failures to exit codes."""
    diagnostics = validate_config(config)
    print_diagnostics(diagnostics, "Config")
    if filter_errors(diagnostics):
        raise typer.Exit(EXIT_VALIDATION)

    stage = Stage(name=name, config=config)
    try:
        with _lock(stage.root):
            stage.dir.mkdir(parents=True, exist_ok=True)
            dump_config(config, stage.dir / RESOLVED_CONFIG)
            logger.info("Stage '%s' writing to %s", name, stage.dir)
            yield stage
    except (ParseError, ValidationError) as e:
        err_console.print(f"[red]Invalid input:[/red] {e}")
        raise typer.Exit(EXIT_VALIDATION)
    except (SinusMilError, FileNotFoundError, KeyError, ValueError) as e:
        err_console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(EXIT_FAILURE)
