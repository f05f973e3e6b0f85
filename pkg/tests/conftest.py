"""Shared pytest fixtures for sinusmil tests."""

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from sinusmil.models.anatomy import CentroidModel, Label, SideCentroidModel
from sinusmil.models.manifest import Manifest, SubjectRecord
from sinusmil.models.phantom import PhantomSpec


@pytest.fixture
def fixtures_dir() -> Path:
    """Return the path to the test fixtures directory."""
    return Path(__file__).parent / "fixtures"


@pytest.fixture
def valid_fixtures_dir(fixtures_dir: Path) -> Path:
    """Return the path to valid test fixtures."""
    return fixtures_dir / "valid"


@pytest.fixture
def invalid_fixtures_dir(fixtures_dir: Path) -> Path:
    """Return the path to invalid test fixtures."""
    return fixtures_dir / "invalid"


@pytest.fixture
def warn_fixtures_dir(fixtures_dir: Path) -> Path:
    """Return the path to fixtures that validate with warnings."""
    return fixtures_dir / "warn"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def centroid_model() -> CentroidModel:
    """Centroid model near the nominal cavity positions of the default phantom."""
    return CentroidModel(
        left=SideCentroidModel(mean=(44.0, 80.0, 46.0), std=(2.0, 2.5, 1.5), n_annotations=20),
        right=SideCentroidModel(mean=(83.0, 80.0, 46.0), std=(2.0, 2.5, 1.5), n_annotations=20),
    )


@pytest.fixture
def small_spec() -> PhantomSpec:
    """A 32^3 phantom small enough to render in unit tests."""
    return PhantomSpec(n_subjects=6, n_annotated=4, noise_std=0.0, seed=7).scaled_to(32)


def _make_manifest(n_subjects: int, anomalous: set[tuple[int, str]] | None = None) -> Manifest:
    """Manifest of n subjects; `anomalous` lists (index, side) regions with a lesion."""
    anomalous = anomalous or set()
    subjects = tuple(
        SubjectRecord(
            subject_id=f"sub-{i:03d}",
            left_label=Label.ANOMALY if (i, "left") in anomalous else Label.NORMAL,
            right_label=Label.ANOMALY if (i, "right") in anomalous else Label.NORMAL,
            source_path=f"volumes/sub-{i:03d}.nii.gz",
        )
        for i in range(n_subjects)
    )
    return Manifest(subjects=subjects)


@pytest.fixture
def labelled_manifest() -> Manifest:
    """30 subjects with roughly a third of the regions anomalous."""
    anomalous = {(i, "left") for i in range(0, 30, 3)} | {(i, "right") for i in range(1, 30, 4)}
    return _make_manifest(30, anomalous)


@pytest.fixture
def manifest_factory() -> Callable[..., Manifest]:
    return _make_manifest
