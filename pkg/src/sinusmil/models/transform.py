"""Rigid transform model.

A transform maps a point x of the grid it is defined on to
    T(x) = M (x - c) + c + t
where c is the grid center, t the translation in voxels and
M = A^-1 R A the rotation R (Euler angles about the canonical axes,
degrees) expressed in voxel units of a grid with spacing A.
"""

from __future__ import annotations

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel
from scipy.spatial.transform import Rotation

Vector3 = tuple[float, float, float]

# Extrinsic rotations about axis 0, then 1, then 2.
EULER_SEQUENCE = "xyz"


def _spacing_matrix(spacing: Vector3) -> npt.NDArray[np.float64]:
    return np.diag(np.asarray(spacing, dtype=np.float64))


class RigidTransform(BaseModel, frozen=True):
    """Six-parameter rigid transform.

    Attributes:
        rotation: Euler angles (degrees) about canonical axes 0, 1, 2,
            applied about the volume center
        translation: Shift in voxels of the fixed grid
    """

    rotation: Vector3 = (0.0, 0.0, 0.0)
    translation: Vector3 = (0.0, 0.0, 0.0)

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls()

    @classmethod
    def from_matrix(
        cls,
        matrix: npt.NDArray[np.float64],
        translation: npt.ArrayLike,
        spacing: Vector3 = (1.0, 1.0, 1.0),
    ) -> RigidTransform:
        """Build a transform from a voxel-space rotation matrix and translation."""
        a = _spacing_matrix(spacing)
        rotation = a @ matrix @ np.linalg.inv(a)
        angles = Rotation.from_matrix(rotation).as_euler(EULER_SEQUENCE, degrees=True)
        t = np.asarray(translation, dtype=np.float64)
        return cls(
            rotation=(float(angles[0]), float(angles[1]), float(angles[2])),
            translation=(float(t[0]), float(t[1]), float(t[2])),
        )

    def rotation_matrix(self) -> npt.NDArray[np.float64]:
        """Pure rotation matrix R in physical space (orthonormal)."""
        matrix: npt.NDArray[np.float64] = Rotation.from_euler(
            EULER_SEQUENCE, self.rotation, degrees=True
        ).as_matrix()
        return matrix

    def voxel_matrix(self, spacing: Vector3 = (1.0, 1.0, 1.0)) -> npt.NDArray[np.float64]:
        """Rotation expressed in voxel units of a grid with the given spacing."""
        a = _spacing_matrix(spacing)
        result: npt.NDArray[np.float64] = np.linalg.inv(a) @ self.rotation_matrix() @ a
        return result

    def compose(self, other: RigidTransform, spacing: Vector3 = (1.0, 1.0, 1.0)) -> RigidTransform:
        """Return self after other: x -> self(other(x))."""
        m1 = self.voxel_matrix(spacing)
        m2 = other.voxel_matrix(spacing)
        t = m1 @ np.asarray(other.translation) + np.asarray(self.translation)
        return RigidTransform.from_matrix(m1 @ m2, t, spacing)

    def inverse(self, spacing: Vector3 = (1.0, 1.0, 1.0)) -> RigidTransform:
        m_inv = np.linalg.inv(self.voxel_matrix(spacing))
        t = -m_inv @ np.asarray(self.translation)
        return RigidTransform.from_matrix(m_inv, t, spacing)

    def rotation_angle(self) -> float:
        """Magnitude of the rotation (degrees), independent of the Euler split."""
        return float(np.degrees(Rotation.from_matrix(self.rotation_matrix()).magnitude()))

    def translation_norm(self) -> float:
        return float(np.linalg.norm(self.translation))

    def to_record(self) -> str:
        """Six-number text record: three angles then three translations."""
        values = (*self.rotation, *self.translation)
        return " ".join(f"{v:.10g}" for v in values)

    @classmethod
    def from_record(cls, record: str) -> RigidTransform:
        values = [float(v) for v in record.split()]
        if len(values) != 6:
            raise ValueError(f"transform record needs 6 numbers, got {len(values)}")
        return cls(
            rotation=(values[0], values[1], values[2]),
            translation=(values[3], values[4], values[5]),
        )
