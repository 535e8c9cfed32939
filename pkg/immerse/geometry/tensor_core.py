"""
Dense small-dimension linear algebra used by every other geometry module:
bilinear forms, adjoints with respect to a form, conjugation by frames and
projections back onto the isometry group of a form.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import fractional_matrix_power

from immerse.geometry import settings
from immerse.geometry.errors import DegenerateForm, ShapeError, SingularFrame, SpecViolation

logger = logging.getLogger(__name__)

VecN = NDArray[np.float64]
LinMap = NDArray[np.float64]
EndoMatrix = NDArray[np.float64]


def as_vector(values, dim: Optional[int] = None) -> VecN:
    """
    Converts values to a finite float vector, optionally checking its length.
    """
    vec = np.asarray(values, dtype=float).reshape(-1)
    if dim is not None and vec.shape[0] != dim:
        raise ShapeError(f"Expected a vector of length {dim}, got {vec.shape[0]}")
    if not np.all(np.isfinite(vec)):
        raise ShapeError("Vector has non-finite entries")
    return vec


def as_matrix(values, rows: Optional[int] = None, cols: Optional[int] = None) -> NDArray[np.float64]:
    """
    Converts values to a finite float matrix, optionally checking its shape.
    """
    mat = np.atleast_2d(np.asarray(values, dtype=float))
    if mat.ndim != 2:
        raise ShapeError(f"Expected a matrix, got an array of shape {mat.shape}")
    if rows is not None and mat.shape[0] != rows:
        raise ShapeError(f"Expected {rows} rows, got {mat.shape[0]}")
    if cols is not None and mat.shape[1] != cols:
        raise ShapeError(f"Expected {cols} columns, got {mat.shape[1]}")
    if not np.all(np.isfinite(mat)):
        raise ShapeError("Matrix has non-finite entries")
    return mat


def standard_form(dim: int, index: int = 0) -> NDArray[np.float64]:
    """
    Matrix of the standard inner product of the given index: the first
    dim - index entries are +1, the last index entries are -1.
    """
    if not 0 <= index <= dim:
        raise ShapeError(f"Index {index} out of range for dimension {dim}")
    return np.diag(np.concatenate([np.ones(dim - index), -np.ones(index)]))


def complex_structure(dim: int) -> NDArray[np.float64]:
    """
    J0(v, w) = (-w, v) on R^l + R^l.
    """
    if dim % 2:
        raise ShapeError(f"A complex structure needs an even dimension, got {dim}")
    half = dim // 2
    J = np.zeros((dim, dim))
    J[:half, half:] = -np.eye(half)
    J[half:, :half] = np.eye(half)
    return J


@dataclass(frozen=True)
class Bilinear:
    """
    Nondegenerate symmetric bilinear form with a declared signature (pos, neg).
    """
    entries: NDArray[np.float64]
    signature: Optional[Tuple[int, int]] = None
    eigenvalues: NDArray[np.float64] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mat = as_matrix(self.entries)
        if mat.shape[0] != mat.shape[1]:
            raise ShapeError(f"Bilinear form must be square, got {mat.shape}")
        scale = max(1.0, float(np.max(np.abs(mat))))
        if np.max(np.abs(mat - mat.T)) > settings.SIGNATURE_TOL * scale:
            raise SpecViolation("Bilinear form is not symmetric")
        mat = 0.5 * (mat + mat.T)
        mat.setflags(write=False)
        eig = np.linalg.eigvalsh(mat)
        pos = int(np.sum(eig > settings.SIGNATURE_TOL))
        neg = int(np.sum(eig < -settings.SIGNATURE_TOL))
        if pos + neg != mat.shape[0]:
            raise DegenerateForm(f"Bilinear form is degenerate (eigenvalues {eig})")
        if self.signature is not None and tuple(self.signature) != (pos, neg):
            raise DegenerateForm(f"Declared signature {tuple(self.signature)} does not match ({pos}, {neg})")
        object.__setattr__(self, "entries", mat)
        object.__setattr__(self, "signature", (pos, neg))
        object.__setattr__(self, "eigenvalues", eig)

    @classmethod
    def standard(cls, dim: int, index: int = 0) -> "Bilinear":
        return cls(standard_form(dim, index), (dim - index, index))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def index(self) -> int:
        return self.signature[1]

    def __call__(self, v, w) -> float:
        return float(np.asarray(v) @ self.entries @ np.asarray(w))

    def inverse(self) -> NDArray[np.float64]:
        if abs(np.linalg.det(self.entries)) < settings.DET_LIMIT:
            raise DegenerateForm("Bilinear form has |det| below the degeneracy threshold")
        return np.linalg.inv(self.entries)


def as_form(form) -> NDArray[np.float64]:
    """
    Matrix of a Bilinear or of a raw symmetric matrix.
    """
    return form.entries if isinstance(form, Bilinear) else np.asarray(form, dtype=float)


def require_invertible(p) -> NDArray[np.float64]:
    """
    Raises SingularFrame when p is not square or too badly conditioned.
    """
    mat = np.asarray(p, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise SingularFrame(f"Frame must be square, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise SingularFrame("Frame has non-finite entries")
    if np.linalg.cond(mat) >= settings.CONDITION_LIMIT:
        raise SingularFrame("Frame is singular within the condition limit")
    return mat


def ad_conjugate(p, X) -> EndoMatrix:
    """
    Conjugation p X p^-1.

    Args:
        p: invertible square matrix
        X: endomorphism of the domain of p

    Returns:
        The endomorphism p X p^-1 of the codomain of p
    """
    p = require_invertible(p)
    X = as_matrix(X, p.shape[0], p.shape[0])
    return np.linalg.solve(p.T, (p @ X).T).T


def transpose_wrt(form, T) -> EndoMatrix:
    """
    Adjoint of T with respect to a nondegenerate form B: B(Tv, w) = B(v, T* w).
    """
    B = as_form(form)
    if abs(np.linalg.det(B)) < settings.DET_LIMIT:
        raise DegenerateForm("Cannot transpose with respect to a degenerate form")
    T = np.asarray(T, dtype=float)
    return np.linalg.solve(B, T.T @ B)


def commutator(X, Y) -> EndoMatrix:
    return X @ Y - Y @ X


def symmetric_part(form, T) -> EndoMatrix:
    return 0.5 * (T + transpose_wrt(form, T))


def antisymmetric_part(form, T) -> EndoMatrix:
    return 0.5 * (T - transpose_wrt(form, T))


def complex_linear_part(J, T) -> EndoMatrix:
    return 0.5 * (T - J @ T @ J)


def contract(stack, v) -> NDArray[np.float64]:
    """
    Contracts the leading index of a stack of matrices with a vector.
    """
    return np.tensordot(np.asarray(v, dtype=float), stack, axes=(0, 0))


def hat(v) -> NDArray[np.float64]:
    """
    Matrix of w -> v x w in R^3.
    """
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def oriented_cross(form, u, w, orientation: int = 1) -> VecN:
    """
    Cross product on an oriented 3-dimensional space with a positive-definite form:
    <u x w, z> is the oriented volume of (u, w, z).
    """
    G = as_form(form)
    if G.shape != (3, 3):
        raise ShapeError("Cross product needs a 3-dimensional space")
    raw = np.cross(u, w)
    return orientation * np.sqrt(np.linalg.det(G)) * np.linalg.solve(G, raw)


def form_polar(Q, form) -> NDArray[np.float64]:
    """
    Nearest element of the isometry group of a form: Q (eta Q^T eta Q)^-1/2.
    For the Euclidean form this is the orthogonal polar factor.
    """
    eta = as_form(form)
    M = np.linalg.solve(eta, Q.T @ eta @ Q)
    root = fractional_matrix_power(M, -0.5)
    return np.real_if_close(Q @ root, tol=1e6).real


def isometry_defect(Q, form) -> float:
    eta = as_form(form)
    return float(np.max(np.abs(Q.T @ eta @ Q - eta)))


def gram_schmidt(columns, form, index: Optional[int] = None, keep_order: bool = False) -> NDArray[np.float64]:
    """
    Orthonormalizes columns in order with respect to a nondegenerate form.
    Vectors of positive norm are placed first and negative ones last, which
    matches the ordering of standard_form.

    Args:
        columns: square matrix whose columns span the space
        form: symmetric matrix or Bilinear
        index: expected number of negative vectors (checked when given)
        keep_order: leave the columns in their input order

    Returns:
        Matrix p with p^T G p = standard_form(dim, index)
    """
    G = as_form(form)
    basis = np.asarray(columns, dtype=float)
    done, signs = [], []
    for j in range(basis.shape[1]):
        vec = basis[:, j].copy()
        for prev, sign in zip(done, signs):
            vec = vec - sign * (prev @ G @ vec) * prev
        norm = vec @ G @ vec
        if abs(norm) < settings.DET_LIMIT:
            raise DegenerateForm("Gram-Schmidt met a null vector")
        done.append(vec / np.sqrt(abs(norm)))
        signs.append(1.0 if norm > 0 else -1.0)
    order = [j for j, s in enumerate(signs) if s > 0] + [j for j, s in enumerate(signs) if s < 0]
    if keep_order:
        order = list(range(len(done)))
    if index is not None and sum(1 for s in signs if s < 0) != index:
        raise DegenerateForm(f"Form does not have index {index}")
    return np.column_stack([done[j] for j in order])


def complete_basis(partial) -> NDArray[np.float64]:
    """
    Completes the columns of partial to a basis using standard basis vectors.
    """
    partial = np.asarray(partial, dtype=float)
    dim = partial.shape[0]
    cols = [partial[:, j] for j in range(partial.shape[1])]
    for i in range(dim):
        if len(cols) == dim:
            break
        candidate = np.column_stack(cols + [np.eye(dim)[:, i]])
        if np.linalg.matrix_rank(candidate, tol=1e-8) == candidate.shape[1]:
            cols.append(np.eye(dim)[:, i])
    if len(cols) != dim:
        raise ShapeError("Could not complete the basis")
    return np.column_stack(cols)
