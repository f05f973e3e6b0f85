"""Composite validation orchestrators for manifests and configs."""

from __future__ import annotations

from sinusmil.core.rules import (
    validate_annotations_exist,
    validate_assignments_complete,
    validate_excluded_sides,
    validate_instance_labels,
    validate_instance_subjects,
    validate_no_leakage,
    validate_patch_fits,
    validate_patch_size,
    validate_patch_sizes,
    validate_sample_size,
    validate_schema_version,
    validate_split_ratios,
    validate_unique_subjects,
    warn_fraction_drift,
    warn_full_network_on_cpu,
    warn_uneven_instances,
)
from sinusmil.models.diagnostic import Diagnostic
from sinusmil.models.manifest import Manifest
from sinusmil.models.settings import PipelineConfig


def validate_manifest(manifest: Manifest, *, include_warnings: bool = True) -> list[Diagnostic]:
    """Check every manifest invariant and return the findings.

    Args:
        manifest: Manifest to check.
        include_warnings: If True, include WARN diagnostics (default True).

    Returns:
        Diagnostics sorted by (severity, rule_id, path); empty if consistent.
    """
    diagnostics: list[Diagnostic] = []

    # ==========================================================================
    # ERROR rules
    # ==========================================================================
    diagnostics.extend(validate_schema_version(manifest))
    diagnostics.extend(validate_unique_subjects(manifest))
    diagnostics.extend(validate_instance_subjects(manifest))
    diagnostics.extend(validate_no_leakage(manifest))
    diagnostics.extend(validate_instance_labels(manifest))
    diagnostics.extend(validate_excluded_sides(manifest))
    diagnostics.extend(validate_assignments_complete(manifest))
    diagnostics.extend(validate_patch_sizes(manifest))

    # ==========================================================================
    # WARN rules (if enabled)
    # ==========================================================================
    if include_warnings:
        diagnostics.extend(warn_uneven_instances(manifest))
        diagnostics.extend(warn_fraction_drift(manifest))

    diagnostics.sort(key=lambda d: d.sort_key)
    return diagnostics


def validate_config(config: PipelineConfig, *, include_warnings: bool = True) -> list[Diagnostic]:
    """Semantic checks on a resolved pipeline config, run before any stage work."""
    diagnostics: list[Diagnostic] = []

    diagnostics.extend(validate_sample_size(config))
    diagnostics.extend(validate_patch_size(config))
    diagnostics.extend(validate_patch_fits(config))
    diagnostics.extend(validate_split_ratios(config))
    diagnostics.extend(validate_annotations_exist(config))
    if include_warnings:
        diagnostics.extend(warn_full_network_on_cpu(config))

    diagnostics.sort(key=lambda d: d.sort_key)
    return diagnostics


def has_errors(diagnostics: list[Diagnostic]) -> bool:
    """Check if any diagnostics are ERROR severity."""
    return any(d.is_error for d in diagnostics)


def filter_errors(diagnostics: list[Diagnostic]) -> list[Diagnostic]:
    """Return only ERROR diagnostics."""
    return [d for d in diagnostics if d.is_error]


def filter_warnings(diagnostics: list[Diagnostic]) -> list[Diagnostic]:
    """Return only WARN diagnostics."""
    return [d for d in diagnostics if not d.is_error]
