"""YAML I/O for pipeline configs and centroid models.

Uses ruamel.yaml so written files keep the model's field order.
"""

from __future__ import annotations

from io import StringIO
from pathlib import Path
from typing import Any

from pydantic import BaseModel
from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

from sinusmil.errors import ParseError
from sinusmil.models.anatomy import CentroidModel
from sinusmil.models.settings import PipelineConfig

__all__ = [
    "ParseError",
    "dump_centroid_model",
    "dump_config",
    "load_centroid_model",
    "load_config",
    "parse_yaml",
]


def _create_yaml() -> YAML:
    """Create a YAML instance with block style output."""
    yaml = YAML()
    yaml.default_flow_style = False
    return yaml


def _plain(data: Any) -> Any:
    """Recursively turn tuples and ruamel containers into lists and dicts."""
    if isinstance(data, dict):
        return {str(k): _plain(v) for k, v in data.items()}
    if isinstance(data, list | tuple):
        return [_plain(item) for item in data]
    return data


def parse_yaml(path: Path) -> dict[str, Any]:
    """Parse YAML file and return dictionary.

    Args:
        path: Path to YAML file.

    Returns:
        Parsed dictionary with preserved key order.

    Raises:
        FileNotFoundError: If file does not exist.
        ParseError: If YAML syntax is invalid or the document is not a mapping.
    """
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")

    yaml = _create_yaml()

    try:
        with path.open("r", encoding="utf-8") as f:
            data = yaml.load(f)
    except YAMLError as e:
        line = None
        column = None
        if hasattr(e, "problem_mark") and e.problem_mark is not None:
            line = e.problem_mark.line + 1  # Convert to 1-based
            column = e.problem_mark.column + 1
        raise ParseError(message=str(e), file_path=path, line=line, column=column) from e

    if data is None:
        raise ParseError(message="Empty YAML file", file_path=path, line=1, column=1)
    if not isinstance(data, dict):
        raise ParseError(message="Top-level YAML value must be a mapping", file_path=path, line=1)

    plain: dict[str, Any] = _plain(data)
    return plain


def _dump(model: BaseModel, path: Path | None) -> str | None:
    yaml = _create_yaml()
    data = _plain(model.model_dump(mode="json"))

    if path is None:
        stream = StringIO()
        yaml.dump(data, stream)
        return stream.getvalue()

    with path.open("w", encoding="utf-8") as f:
        yaml.dump(data, f)
    return None


def load_config(path: Path) -> PipelineConfig:
    """Load and validate a pipeline config.

    Raises:
        FileNotFoundError: If file does not exist.
        ParseError: If YAML syntax is invalid.
        pydantic.ValidationError: If data does not match the schema.
    """
    return PipelineConfig.model_validate(parse_yaml(path))


def dump_config(config: PipelineConfig, path: Path | None = None) -> str | None:
    """Serialize a config to YAML; returns the text if no path is given."""
    return _dump(config, path)


def load_centroid_model(path: Path) -> CentroidModel:
    """Load a fitted centroid model."""
    return CentroidModel.model_validate(parse_yaml(path))


def dump_centroid_model(model: CentroidModel, path: Path | None = None) -> str | None:
    """Serialize a centroid model to YAML; returns the text if no path is given."""
    return _dump(model, path)
