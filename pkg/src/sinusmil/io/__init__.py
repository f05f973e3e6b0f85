"""Thin I/O layer: NIfTI volumes, YAML configs, JSON reports, TSV tables, checkpoints.

Checkpoints pull in torch, so import them from sinusmil.io.checkpoint directly.
"""

from sinusmil.io.json import dump_report, load_report, parse_json
from sinusmil.io.nifti import load_volume, save_volume
from sinusmil.io.tables import (
    read_annotations,
    read_ground_truth,
    read_manifest,
    read_sweep_results,
    read_transform_record,
    write_annotations,
    write_ground_truth,
    write_manifest,
    write_predictions,
    write_sweep_results,
    write_transform_record,
)
from sinusmil.io.yaml import (
    ParseError,
    dump_centroid_model,
    dump_config,
    load_centroid_model,
    load_config,
    parse_yaml,
)

__all__ = [
    # NIfTI
    "load_volume",
    "save_volume",
    # YAML
    "ParseError",
    "parse_yaml",
    "load_config",
    "dump_config",
    "load_centroid_model",
    "dump_centroid_model",
    # JSON
    "parse_json",
    "load_report",
    "dump_report",
    # tables
    "read_manifest",
    "write_manifest",
    "read_annotations",
    "write_annotations",
    "read_ground_truth",
    "write_ground_truth",
    "read_transform_record",
    "write_transform_record",
    "write_predictions",
    "read_sweep_results",
    "write_sweep_results",
]
