"""NIfTI-1 reader and writer for Volumes.

Volumes are canonicalized on load (closest RAS orientation), so axis 0 runs
left to right, axis 1 posterior to anterior and axis 2 inferior to superior.
Plain (.nii) and gzip-compressed (.nii.gz) files are both supported.
"""

from __future__ import annotations

import logging
from pathlib import Path

import nibabel as nib
import numpy as np
import numpy.typing as npt
from nibabel.affines import voxel_sizes
from nibabel.filebasedimages import ImageFileError
from nibabel.spatialimages import HeaderDataError

from sinusmil.errors import VolumeFormatError, VolumeShapeError
from sinusmil.models.volume import Volume

logger = logging.getLogger(__name__)

# NIfTI stores spacing and affines as float32
_HEADER_DECIMALS = 6

_AXIS_OF_CODE = {"R": 0, "L": 0, "A": 1, "P": 1, "S": 2, "I": 2}


def _orientation_affine(volume: Volume) -> npt.NDArray[np.float64]:
    affine = np.eye(4)
    affine[:3, :3] = 0.0
    for axis, code in enumerate(volume.orientation):
        sign = 1.0 if code in ("R", "A", "S") else -1.0
        affine[_AXIS_OF_CODE[code], axis] = sign * volume.spacing[axis]
    affine[:3, 3] = volume.origin
    return affine


def load_volume(path: Path | str) -> Volume:
    """Load a 3D NIfTI file as a canonical float64 Volume.

    Trailing singleton dimensions (e.g. shape (X, Y, Z, 1)) are dropped.

    Raises:
        FileNotFoundError: If the file does not exist.
        VolumeFormatError: If the header cannot be parsed.
        VolumeShapeError: If the payload is not 3D.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")

    try:
        image = nib.load(str(path))
    except (ImageFileError, HeaderDataError, EOFError, ValueError, OSError) as e:
        raise VolumeFormatError(str(e), file_path=path) from e
    if not isinstance(image, nib.Nifti1Image | nib.Nifti2Image):
        raise VolumeFormatError(f"not a NIfTI image ({type(image).__name__})", file_path=path)

    shape = tuple(int(s) for s in image.shape)
    while len(shape) > 3 and shape[-1] == 1:
        shape = shape[:-1]
    if len(shape) != 3:
        raise VolumeShapeError(shape, file_path=path)
    if len(image.shape) > 3:
        image = nib.Nifti1Image(np.asanyarray(image.dataobj).reshape(shape), image.affine)

    try:
        canonical = nib.as_closest_canonical(image)
        data = canonical.get_fdata(dtype=np.float64)
    except (HeaderDataError, EOFError, ValueError, OSError) as e:
        raise VolumeFormatError(str(e), file_path=path) from e

    affine = canonical.affine
    spacing = tuple(round(float(s), _HEADER_DECIMALS) for s in voxel_sizes(affine))
    origin = tuple(round(float(o), _HEADER_DECIMALS) for o in affine[:3, 3])
    orientation = tuple(str(c) for c in nib.aff2axcodes(affine))
    logger.debug("Loaded %s shape=%s spacing=%s", path, data.shape, spacing)
    return Volume(data=data, spacing=spacing, origin=origin, orientation=orientation)  # type: ignore[arg-type]


def save_volume(
    volume: Volume,
    path: Path | str,
    *,
    dtype: npt.DTypeLike | None = None,
) -> None:
    """Write a Volume as NIfTI-1 (gzip-compressed when the name ends in .gz).

    Args:
        volume: Volume to write.
        path: Destination file.
        dtype: On-disk dtype; defaults to float64 for exact round-trips.

    Raises:
        FileNotFoundError: If the destination directory does not exist.
        PermissionError: If the destination is not writable.
    """
    path = Path(path)
    if not path.parent.is_dir():
        raise FileNotFoundError(f"Directory not found: {path.parent}")
    data = np.asarray(volume.data, dtype=dtype or np.float64)
    image = nib.Nifti1Image(data, _orientation_affine(volume))
    image.header.set_xyzt_units("mm")
    image.set_qform(image.affine, code=1)
    image.set_sform(image.affine, code=1)
    nib.save(image, str(path))
    logger.debug("Saved %s shape=%s", path, volume.shape)
