"""Synthetic head phantoms with two air-filled cavities and optional lesions.

Geometry lives in template space (the phantom grid). Subject 0 is left
unperturbed and serves as the registration reference, so registered space
coincides with template space. Every other subject is a rigidly perturbed
copy of its own template-space anatomy.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy import ndimage

from sinusmil.core.registration import apply_transform
from sinusmil.models.anatomy import CentroidAnnotation, Label, Side
from sinusmil.models.manifest import SubjectRecord
from sinusmil.models.phantom import (
    IntensityLevels,
    LesionAssignment,
    PhantomSpec,
    RegionTruth,
    SubjectTruth,
)
from sinusmil.models.settings import REGISTERED_DIMS
from sinusmil.models.transform import RigidTransform
from sinusmil.models.volume import Vector3, Volume

logger = logging.getLogger(__name__)

REFERENCE_INDEX = 0
MIN_LESION_VOXELS = 4
# Smoothing leaves a transition band between lesion core and air
AIR_MARGIN_VOXELS = 3

# Stream ids for SeedSequence spawning
_COHORT_STREAM = 0
_GEOMETRY_STREAM = 1
_NOISE_STREAM = 2


@dataclass(frozen=True)
class RenderedSubject:
    """Volumes of one phantom subject.

    Attributes:
        truth: Geometry and perturbation ground truth
        template: Noise-free anatomy in template space
        volume: Perturbed anatomy with noise (what a scanner would return)
    """

    truth: SubjectTruth
    template: Volume
    volume: Volume


def subject_ids(spec: PhantomSpec) -> list[str]:
    width = max(3, len(str(spec.n_subjects - 1)))
    return [f"sub-{i:0{width}d}" for i in range(spec.n_subjects)]


def _rng(spec: PhantomSpec, *stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([spec.seed, *stream]))


def _cohort_plan(spec: PhantomSpec) -> tuple[dict[int, Side], set[tuple[int, Side]], set[int]]:
    """Draw exclusions, lesion-bearing regions and annotated subjects."""
    rng = _rng(spec, _COHORT_STREAM)
    n = spec.n_subjects

    excluded_subjects = rng.choice(n, size=spec.excluded_sinuses, replace=False)
    excluded = {int(i): Side.LEFT if rng.random() < 0.5 else Side.RIGHT for i in excluded_subjects}

    included = [(i, side) for i in range(n) for side in Side if excluded.get(i) is not side]
    if spec.lesion_assignment is LesionAssignment.QUOTA:
        quota = int(round(spec.lesion_probability * len(included)))
        picks = rng.choice(len(included), size=quota, replace=False)
        lesions = {included[int(k)] for k in picks}
    else:
        draws = rng.random(len(included))
        lesions = {region for region, u in zip(included, draws) if u < spec.lesion_probability}

    annotated = {int(i) for i in rng.choice(n, size=spec.n_annotated, replace=False)}
    return excluded, lesions, annotated


def generate_subject_records(spec: PhantomSpec) -> list[SubjectRecord]:
    """Labels and exclusions of the cohort, without rendering any volume."""
    excluded, lesions, annotated = _cohort_plan(spec)
    records = []
    for i, subject_id in enumerate(subject_ids(spec)):
        labels = {
            side: Label.ANOMALY if (i, side) in lesions else Label.NORMAL for side in Side
        }
        records.append(
            SubjectRecord(
                subject_id=subject_id,
                left_label=labels[Side.LEFT],
                right_label=labels[Side.RIGHT],
                source_path=f"volumes/{subject_id}.nii.gz",
                excluded_sides=(excluded[i],) if i in excluded else (),
                annotated=i in annotated,
            )
        )
    return records


def _region(
    spec: PhantomSpec, side: Side, has_lesion: bool, rng: np.random.Generator
) -> RegionTruth:
    nominal = np.asarray(spec.nominal_centroid(side))
    centroid = nominal + rng.normal(0.0, 1.0, 3) * np.asarray(spec.centroid_jitter)
    semi_axes = rng.uniform(*spec.cavity_radius_range, size=3)
    # Consume the lesion draws either way so geometry does not depend on labels
    radius = float(rng.uniform(*spec.lesion_radius_range))
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    on_border = rng.random() < spec.lesion_border_bias
    depth = rng.uniform(0.0, 0.5)
    if not has_lesion:
        return RegionTruth(centroid=_vec(centroid), semi_axes=_vec(semi_axes))

    # Largest offset keeping the sphere inside the cavity along `direction`
    reach = 1.0 / np.sqrt(np.sum((direction / semi_axes) ** 2))
    room = max(reach - radius, 0.0)
    offset = room if on_border else depth * room
    center = centroid + offset * direction
    return RegionTruth(
        centroid=_vec(centroid),
        semi_axes=_vec(semi_axes),
        lesion_center=_vec(center),
        lesion_radius=radius,
    )


def _vec(values: npt.ArrayLike) -> Vector3:
    v = np.asarray(values, dtype=np.float64)
    return (float(v[0]), float(v[1]), float(v[2]))


def subject_truths(spec: PhantomSpec) -> list[SubjectTruth]:
    """Ground-truth geometry and perturbation of every subject."""
    truths = []
    for i, record in enumerate(generate_subject_records(spec)):
        rng = _rng(spec, _GEOMETRY_STREAM, i)
        left = _region(spec, Side.LEFT, record.left_label is Label.ANOMALY, rng)
        right = _region(spec, Side.RIGHT, record.right_label is Label.ANOMALY, rng)
        rotation = rng.uniform(-spec.max_rotation, spec.max_rotation, 3)
        translation = rng.uniform(-spec.max_translation, spec.max_translation, 3)
        if i == REFERENCE_INDEX:
            perturbation = RigidTransform.identity()
        else:
            perturbation = RigidTransform(rotation=_vec(rotation), translation=_vec(translation))
        truths.append(
            SubjectTruth(
                subject_id=record.subject_id,
                perturbation=perturbation,
                left=left,
                right=right,
                excluded_side=record.excluded_sides[0] if record.excluded_sides else None,
            )
        )
    return truths


def _ellipsoid(
    grid: tuple[npt.NDArray[np.float64], ...], center: Vector3, semi_axes: Vector3
) -> npt.NDArray[np.bool_]:
    distance = sum(((g - c) / a) ** 2 for g, c, a in zip(grid, center, semi_axes))
    mask: npt.NDArray[np.bool_] = distance <= 1.0
    return mask


def render_template(spec: PhantomSpec, truth: SubjectTruth) -> Volume:
    """Noise-free, smoothed anatomy of one subject in template space."""
    levels = spec.levels
    axes = np.ogrid[0 : spec.dims[0], 0 : spec.dims[1], 0 : spec.dims[2]]
    grid = tuple(a.astype(np.float64) for a in axes)
    center = _vec((np.asarray(spec.dims) - 1) / 2.0)
    head = np.asarray(spec.head_semi_axes)

    data = np.full(spec.dims, levels.cavity, dtype=np.float64)
    data[_ellipsoid(grid, center, _vec(head))] = levels.shell
    inner = np.maximum(head - spec.shell_thickness, 1.0)
    data[_ellipsoid(grid, center, _vec(inner))] = levels.tissue

    # Anterior midline ridge breaks the head's rotational symmetry
    nose_center = (center[0], center[1] + 0.9 * head[1], center[2] - 0.2 * head[2])
    nose_axes = (0.12 * head[0], 0.25 * head[1], 0.3 * head[2])
    data[_ellipsoid(grid, nose_center, _vec(nose_axes))] = levels.tissue

    for region in (truth.left, truth.right):
        data[_ellipsoid(grid, region.centroid, region.semi_axes)] = levels.cavity
        if region.lesion_center is not None and region.lesion_radius is not None:
            radius = region.lesion_radius
            data[_ellipsoid(grid, region.lesion_center, (radius, radius, radius))] = levels.lesion

    if spec.smoothing_sigma > 0:
        data = ndimage.gaussian_filter(data, sigma=spec.smoothing_sigma, mode="nearest")
    return Volume(data=data, spacing=spec.spacing)


def render_subject(spec: PhantomSpec, truth: SubjectTruth, index: int) -> RenderedSubject:
    """Render template anatomy, apply the perturbation and add noise."""
    template = render_template(spec, truth)
    perturbed = apply_transform(template, truth.perturbation, spec.dims, spec.spacing)
    noise = _rng(spec, _NOISE_STREAM, index).normal(0.0, spec.noise_std, spec.dims)
    volume = Volume(data=perturbed.data + noise, spacing=spec.spacing)
    logger.debug("Rendered %s (perturbation %s)", truth.subject_id, truth.perturbation.to_record())
    return RenderedSubject(truth=truth, template=template, volume=volume)


def to_registered(
    point: Vector3,
    dims: tuple[int, int, int],
    registered_dims: tuple[int, int, int] = REGISTERED_DIMS,
) -> Vector3:
    """Map a template voxel coordinate onto the registered grid (centers aligned)."""
    return _vec(
        [(p + 0.5) * r / d - 0.5 for p, d, r in zip(point, dims, registered_dims)]
    )


def annotations_for(
    spec: PhantomSpec,
    truths: list[SubjectTruth],
    records: list[SubjectRecord],
    registered_dims: tuple[int, int, int] = REGISTERED_DIMS,
) -> list[CentroidAnnotation]:
    """Centroid annotations of the annotated subjects, in registered space."""
    annotations = []
    for truth, record in zip(truths, records):
        if not record.annotated:
            continue
        for side in Side:
            centroid = to_registered(truth.region(side).centroid, spec.dims, registered_dims)
            annotations.append(
                CentroidAnnotation(subject_id=truth.subject_id, side=side, centroid=centroid)
            )
    return annotations


def oracle_classifier(crop: Volume | npt.ArrayLike, levels: IntensityLevels | None = None) -> Label:
    """Rule-based label of an un-normalized phantom crop.

    ANOMALY iff a connected component brighter than midway between shell and
    lesion, of at least MIN_LESION_VOXELS voxels, touches the cavity (air)
    mask dilated by AIR_MARGIN_VOXELS.
    """
    levels = levels or IntensityLevels()
    data = crop.data if isinstance(crop, Volume) else np.asarray(crop, dtype=np.float64)
    bright = data > (levels.shell + levels.lesion) / 2.0
    if not bright.any():
        return Label.NORMAL
    air = ndimage.binary_dilation(
        data < (levels.cavity + levels.tissue) / 2.0, iterations=AIR_MARGIN_VOXELS
    )
    components, count = ndimage.label(bright)
    for index in range(1, count + 1):
        component = components == index
        if component.sum() >= MIN_LESION_VOXELS and (component & air).any():
            return Label.ANOMALY
    return Label.NORMAL
