"""
Best rigid alignment of two point clouds (Kabsch), used to compare a
reconstructed immersion with a reference parametrization.
"""
import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import orthogonal_procrustes

from immerse.geometry.errors import ShapeError

logger = logging.getLogger(__name__)


@dataclass
class Alignment:
    rotation: NDArray[np.float64]
    translation: NDArray[np.float64]
    max_error: float
    rms_error: float

    def apply(self, points) -> NDArray[np.float64]:
        return np.asarray(points, dtype=float) @ self.rotation + self.translation

    def to_dict(self) -> dict:
        return {
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
            "max_error": self.max_error,
            "rms_error": self.rms_error,
        }


def rigid_alignment(points, reference, allow_reflection: bool = False) -> Alignment:
    """
    Rotation R and translation t minimizing |points R + t - reference|.

    Args:
        points: (m, d) array, or any array whose last axis is d
        reference: array of the same shape
        allow_reflection: accept orthogonal R with det -1

    Returns:
        Alignment with the residual errors after alignment
    """
    P = np.asarray(points, dtype=float)
    Q = np.asarray(reference, dtype=float)
    if P.shape != Q.shape:
        raise ShapeError(f"Cannot align point sets of shapes {P.shape} and {Q.shape}")
    P = P.reshape(-1, P.shape[-1])
    Q = Q.reshape(-1, Q.shape[-1])
    p_mean, q_mean = P.mean(axis=0), Q.mean(axis=0)
    Pc, Qc = P - p_mean, Q - q_mean
    R, _ = orthogonal_procrustes(Pc, Qc)
    if not allow_reflection and np.linalg.det(R) < 0:
        U, _, Vt = np.linalg.svd(Pc.T @ Qc)
        D = np.eye(R.shape[0])
        D[-1, -1] = -1.0
        R = U @ D @ Vt
    t = q_mean - p_mean @ R
    errors = np.linalg.norm(P @ R + t - Q, axis=1)
    alignment = Alignment(R, t, float(np.max(errors)), float(np.sqrt(np.mean(errors ** 2))))
    logger.debug(f"Rigid alignment of {P.shape[0]} points: max error {alignment.max_error:.3e}")
    return alignment
