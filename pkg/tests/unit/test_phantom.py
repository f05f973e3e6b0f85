"""Unit tests for the synthetic phantom and its oracle classifier."""

import numpy as np
import pytest

from sinusmil.core.phantom import (
    REFERENCE_INDEX,
    annotations_for,
    generate_subject_records,
    oracle_classifier,
    render_subject,
    render_template,
    subject_ids,
    subject_truths,
    to_registered,
)
from sinusmil.core.sampling import crop_window
from sinusmil.core.volume import crop
from sinusmil.models.anatomy import Label, Side
from sinusmil.models.phantom import LesionAssignment, PhantomSpec
from sinusmil.models.transform import RigidTransform
from sinusmil.models.volume import Volume

# Large enough to contain the whole cavity and any lesion
ORACLE_PATCH = 31


@pytest.fixture(scope="module")
def lesion_spec() -> PhantomSpec:
    """Full-size, noise-free cohort with half of the regions anomalous."""
    return PhantomSpec(n_subjects=6, n_annotated=2, lesion_probability=0.5, noise_std=0.0, seed=21)


def _crop_at(volume: Volume, centroid: tuple[float, float, float], patch_size: int) -> Volume:
    return crop(volume, crop_window(centroid, patch_size, volume.shape), patch_size)


class TestCohortPlan:
    """Labels, exclusions and annotations drawn for the cohort."""

    def test_ids_are_zero_padded(self) -> None:
        assert subject_ids(PhantomSpec(n_subjects=3, n_annotated=0))[:2] == ["sub-000", "sub-001"]

    def test_records_are_deterministic(self) -> None:
        spec = PhantomSpec(n_subjects=40, n_annotated=5, seed=4)

        assert generate_subject_records(spec) == generate_subject_records(spec)

    def test_quota_assigns_exact_lesion_count(self) -> None:
        spec = PhantomSpec(n_subjects=100, n_annotated=5, excluded_sinuses=10, seed=1)
        records = generate_subject_records(spec)
        anomalous = sum(
            record.label(side) is Label.ANOMALY
            for record in records
            for side in record.included_sides()
        )

        assert anomalous == round(0.32 * 190)

    def test_exclusions_and_annotations(self) -> None:
        spec = PhantomSpec(n_subjects=50, n_annotated=7, excluded_sinuses=9, seed=2)
        records = generate_subject_records(spec)

        assert sum(len(r.excluded_sides) for r in records) == 9
        assert sum(r.annotated for r in records) == 7

    @pytest.mark.parametrize("assignment", list(LesionAssignment))
    def test_zero_probability_gives_no_lesions(self, assignment: LesionAssignment) -> None:
        spec = PhantomSpec(
            n_subjects=30, n_annotated=2, lesion_probability=0.0, lesion_assignment=assignment
        )
        labels = {r.label(side) for r in generate_subject_records(spec) for side in Side}

        assert labels == {Label.NORMAL}

    @pytest.mark.parametrize("assignment", list(LesionAssignment))
    def test_unit_probability_gives_only_lesions(self, assignment: LesionAssignment) -> None:
        spec = PhantomSpec(
            n_subjects=30, n_annotated=2, lesion_probability=1.0, lesion_assignment=assignment
        )
        labels = {r.label(side) for r in generate_subject_records(spec) for side in Side}

        assert labels == {Label.ANOMALY}


class TestSpecValidation:
    """Geometry checks on the phantom spec."""

    def test_lesion_must_fit_cavity(self) -> None:
        with pytest.raises(ValueError, match="do not fit"):
            PhantomSpec(lesion_radius_range=(3.0, 12.0))

    def test_levels_must_exceed_noise(self) -> None:
        with pytest.raises(ValueError, match="noise_std"):
            PhantomSpec(noise_std=0.2)

    def test_annotations_cannot_exceed_cohort(self) -> None:
        with pytest.raises(ValueError, match="n_annotated"):
            PhantomSpec(n_subjects=5)

    def test_scaled_geometry_stays_valid(self) -> None:
        scaled = PhantomSpec().scaled_to(64)

        assert scaled.dims == (64, 64, 64)
        assert scaled.cavity_radius_range == pytest.approx((5.5, 7.0))


class TestGroundTruth:
    """Perturbations and region geometry."""

    def test_reference_subject_is_unperturbed(self, lesion_spec: PhantomSpec) -> None:
        truths = subject_truths(lesion_spec)

        assert truths[REFERENCE_INDEX].perturbation == RigidTransform.identity()

    def test_perturbations_respect_bounds(self) -> None:
        spec = PhantomSpec(n_subjects=30, n_annotated=0, seed=8)
        for truth in subject_truths(spec):
            assert max(abs(a) for a in truth.perturbation.rotation) <= spec.max_rotation
            assert max(abs(t) for t in truth.perturbation.translation) <= spec.max_translation

    def test_lesions_match_labels(self, lesion_spec: PhantomSpec) -> None:
        records = generate_subject_records(lesion_spec)
        for truth, record in zip(subject_truths(lesion_spec), records):
            for side in Side:
                assert truth.region(side).has_lesion == (record.label(side) is Label.ANOMALY)

    def test_to_registered_aligns_voxel_centers(self) -> None:
        assert to_registered((0.0, 31.5, 63.0), (64, 64, 64), (128, 128, 128)) == pytest.approx(
            (0.5, 63.5, 126.5)
        )

    def test_annotations_only_for_annotated_subjects(self, lesion_spec: PhantomSpec) -> None:
        records = generate_subject_records(lesion_spec)
        annotations = annotations_for(lesion_spec, subject_truths(lesion_spec), records)
        annotated = {r.subject_id for r in records if r.annotated}

        assert {a.subject_id for a in annotations} == annotated
        assert len(annotations) == 2 * len(annotated)


class TestRendering:
    """Rendered anatomy of a phantom subject."""

    def test_cavity_center_is_dark(self, lesion_spec: PhantomSpec) -> None:
        truth = subject_truths(lesion_spec)[0]
        template = render_template(lesion_spec, truth)
        levels = lesion_spec.levels
        for side in Side:
            region = truth.region(side)
            if region.has_lesion:
                continue
            index = tuple(int(round(c)) for c in region.centroid)
            assert template.data[index] < (levels.cavity + levels.tissue) / 2

    def test_rendered_volume_is_perturbed_template(self, lesion_spec: PhantomSpec) -> None:
        truth = subject_truths(lesion_spec)[1]
        rendered = render_subject(lesion_spec, truth, 1)

        assert rendered.volume.shape == lesion_spec.dims
        assert not np.allclose(rendered.volume.data, rendered.template.data)


class TestOracleClassifier:
    """The rule-based classifier on noise-free crops."""

    def test_detects_every_lesion_at_the_true_centroid(self, lesion_spec: PhantomSpec) -> None:
        for truth in subject_truths(lesion_spec):
            template = render_template(lesion_spec, truth)
            for side in Side:
                region = truth.region(side)
                label = oracle_classifier(_crop_at(template, region.centroid, ORACLE_PATCH))
                expected = Label.ANOMALY if region.has_lesion else Label.NORMAL
                assert label is expected, f"{truth.subject_id} {side.value}"

    def test_lesion_free_subjects_are_always_normal(self) -> None:
        spec = PhantomSpec(n_subjects=3, n_annotated=0, lesion_probability=0.0, seed=5)
        rng = np.random.default_rng(0)
        for truth in subject_truths(spec):
            template = render_template(spec, truth)
            for side in Side:
                center = np.asarray(truth.region(side).centroid) + rng.normal(0, 4, 3)
                crop_ = _crop_at(template, (center[0], center[1], center[2]), 25)
                assert oracle_classifier(crop_) is Label.NORMAL

    def test_small_patches_miss_some_off_center_lesions(self) -> None:
        """Crops far smaller than the cavity do not always contain the lesion."""
        spec = PhantomSpec(
            n_subjects=4, n_annotated=0, lesion_probability=1.0, lesion_border_bias=1.0, seed=9
        )
        rng = np.random.default_rng(1)
        misses = 0
        trials = 0
        for truth in subject_truths(spec):
            template = render_template(spec, truth)
            for side in Side:
                for _ in range(10):
                    center = np.asarray(truth.region(side).centroid) + rng.normal(0, 2.5, 3)
                    crop_ = _crop_at(template, (center[0], center[1], center[2]), 7)
                    misses += oracle_classifier(crop_) is Label.NORMAL
                    trials += 1

        assert 0 < misses < trials

    def test_accepts_raw_arrays(self) -> None:
        data = np.full((10, 10, 10), 0.1)
        data[4:7, 4:7, 4:7] = 2.2

        assert oracle_classifier(data) is Label.ANOMALY
