"""
Matrix-group realizations of the G-structure bundles of the model spaces.

A realization integrates dF = F A(s) where A takes values in the Lie algebra
of the group. to_algebra maps a value (u, X) of the canonical and connection
forms to that Lie algebra, from_algebra inverts it; point and frame read the
target point and the adapted frame (in ambient coordinates) off F.

Families:
    AffineRealization            flat space forms, real or Hermitian
    QuadricRealization           spheres and hyperboloids in R^{n+1}
    ComplexProjectiveRealization complex projective and hyperbolic spaces
    NilRealization               E(0, tau), 4x4 unipotent model
    BergerRealization            E(kappa, tau), kappa != 0
    MatrixLieRealization         Lie groups with a matrix basis
    SecondKindRealization        Lie groups in exponential coordinates of the second kind
    ProductRealization           block direct sums
"""
import logging
from abc import ABC, abstractmethod
from typing import Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import expm, fractional_matrix_power, logm, polar

from immerse.geometry import settings
from immerse.geometry.errors import UnsupportedModel
from immerse.geometry.g_structure import standard_algebra_part
from immerse.geometry.homogeneous_models import (
    ComplexSpaceForm,
    EKappaTau,
    LieGroupLeftInvariant,
    ModelSpace,
    Product,
    SpaceForm,
)
from immerse.geometry.tensor_core import (
    as_matrix,
    as_vector,
    commutator,
    complex_linear_part,
    contract,
    form_polar,
    gram_schmidt,
    hat,
    isometry_defect,
)

logger = logging.getLogger(__name__)

FRAME_STEP = 1e-3
J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


class TargetRealization(ABC):
    """
    Concrete model of the bundle P over a homogeneous target.
    """
    name = "realization"

    def __init__(self, model: ModelSpace):
        self.model = model
        self.n = model.dim
        self.space = model.structure_space()
        self.tensors = model.standard_tensors()

    # Lie algebra side
    def representative(self, u) -> NDArray[np.float64]:
        return contract(self.tensors.gamma0, u)

    def to_algebra(self, u, X):
        """
        Lie algebra element with canonical-form value u and connection-form
        value X; the part of X off representative(u) + g is dropped.
        """
        u = as_vector(u, self.n)
        X = as_matrix(X, self.n, self.n)
        Y = standard_algebra_part(self.space, X - self.representative(u))
        return self._algebra(u, Y)

    @abstractmethod
    def _algebra(self, u, Y):
        pass

    @abstractmethod
    def from_algebra(self, A) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        pass

    def admissibility(self, u, X) -> float:
        """Distance of (u, X) from the admissible subspace."""
        return self.space.project(np.asarray(X, dtype=float) - self.representative(u)).norm()

    def bracket(self, A, B):
        return commutator(A, B)

    # Group side
    @abstractmethod
    def identity(self):
        pass

    def velocity(self, F, A):
        """dF/ds for dF = F A."""
        return F @ A

    def left_derivative(self, F, dF):
        """Inverse of velocity: the Lie algebra element F^-1 dF."""
        return np.linalg.solve(F, dF)

    def translate(self, F, A):
        return F @ expm(A)

    @abstractmethod
    def point(self, F) -> NDArray[np.float64]:
        pass

    def frame(self, F) -> NDArray[np.float64]:
        return self.numeric_frame(F)

    def numeric_frame(self, F) -> NDArray[np.float64]:
        """Frame columns as fourth-order differences of point along F exp(s A_a)."""
        h = FRAME_STEP
        cols = []
        for e in np.eye(self.n):
            A = self.to_algebra(e, self.representative(e))
            diffs = [self.point_delta(self.translate(F, s * h * A), F) for s in (2, 1, -1, -2)]
            cols.append((-diffs[0] + 8 * diffs[1] - 8 * diffs[2] + diffs[3]) / (12 * h))
        return np.column_stack(cols)

    def point_delta(self, F_moved, F) -> NDArray[np.float64]:
        return self.point(F_moved) - self.point(F)

    def project(self, F):
        """Nearest group element (re-projection after a step)."""
        return F

    def drift(self, F) -> float:
        """How far F is from the group."""
        return 0.0

    def distance(self, F1, F2) -> float:
        return float(np.linalg.norm(F1 - F2))

    def lift(self, point, frame) -> Tuple[NDArray, float]:
        """Group element with the given point and frame, and the defect of the correction."""
        raise UnsupportedModel(f"{self.name} cannot lift explicit frames")

    def random_element(self, rng: np.random.Generator, scale: float = 0.5):
        u = scale * rng.normal(size=self.n)
        X = self.representative(u) + scale * self.space.sample_algebra(rng)
        return self.translate(self.identity(), self.to_algebra(u, X))

    @property
    def frame_form(self) -> Optional[NDArray[np.float64]]:
        return self.space.form

    def ambient_metric(self, F) -> NDArray[np.float64]:
        """Target metric on the span of the frame, in ambient coordinates."""
        L = np.real(self.frame(F))
        Lp = np.linalg.pinv(L)
        return Lp.T @ self.frame_form @ Lp

    def display_coords(self, point) -> NDArray[np.float64]:
        return np.asarray(point, dtype=float)

    def display(self, point) -> NDArray[np.float64]:
        coords = self.display_coords(point)[:3]
        return np.concatenate([coords, np.zeros(3 - coords.shape[0])])

    def describe(self) -> str:
        return self.name


# ---------------------------------------------------------
# Space forms
# ---------------------------------------------------------
class AffineRealization(TargetRealization):
    """(x, Q) as [[1, 0], [x, Q]] with Q in the isometry group of eta (unitary if J is set)."""
    name = "affine isometry group"

    def __init__(self, model: ModelSpace):
        super().__init__(model)
        self.form = self.space.form
        self.J = self.space.J

    def _algebra(self, u, Y):
        A = np.zeros((self.n + 1, self.n + 1))
        A[1:, 0] = u
        A[1:, 1:] = Y
        return A

    def from_algebra(self, A):
        u = np.real(A[1:, 0])
        return u, np.real(A[1:, 1:]) + self.representative(u)

    def identity(self):
        return np.eye(self.n + 1)

    def point(self, F):
        return F[1:, 0].copy()

    def frame(self, F):
        return F[1:, 1:].copy()

    def _linear_part(self, Q):
        if self.J is not None:
            Q = complex_linear_part(self.J, Q)
        return form_polar(Q, self.form)

    def project(self, F):
        out = np.array(F, dtype=float)
        out[0] = 0.0
        out[0, 0] = 1.0
        out[1:, 1:] = self._linear_part(out[1:, 1:])
        return out

    def drift(self, F):
        Q = F[1:, 1:]
        worst = max(float(np.max(np.abs(F[0, 1:]), initial=0.0)), abs(F[0, 0] - 1.0), isometry_defect(Q, self.form))
        if self.J is not None:
            worst = max(worst, float(np.max(np.abs(self.J @ Q - Q @ self.J))))
        return worst

    def lift(self, point, frame):
        frame = as_matrix(frame, self.n, self.n)
        Q = self._linear_part(gram_schmidt(frame, self.form, keep_order=True))
        F = self.identity()
        F[1:, 0] = as_vector(point, self.n)
        F[1:, 1:] = Q
        return F, float(np.max(np.abs(Q - frame)))


class QuadricRealization(TargetRealization):
    """
    Space form of curvature c != 0 as the quadric <p, p> = sign(c) / |c| in
    R^{n+1} with the form diag(sign(c), eta); F = [p / radius | frame].
    """

    def __init__(self, model: SpaceForm):
        super().__init__(model)
        self.sign = 1.0 if model.c > 0 else -1.0
        self.root = np.sqrt(abs(model.c))
        self.radius = 1.0 / self.root
        self.ambient_form = np.zeros((self.n + 1, self.n + 1))
        self.ambient_form[0, 0] = self.sign
        self.ambient_form[1:, 1:] = self.space.form
        self.name = "rotation group of the sphere" if model.c > 0 else "isometry group of the hyperboloid"

    def _algebra(self, u, Y):
        A = np.zeros((self.n + 1, self.n + 1))
        A[1:, 0] = self.root * u
        A[0, 1:] = -self.sign * self.root * (self.space.form @ u)
        A[1:, 1:] = Y
        return A

    def from_algebra(self, A):
        u = A[1:, 0] / self.root
        return u, A[1:, 1:] + self.representative(u)

    def identity(self):
        return np.eye(self.n + 1)

    def point(self, F):
        return self.radius * F[:, 0]

    def frame(self, F):
        return F[:, 1:].copy()

    def project(self, F):
        return form_polar(F, self.ambient_form)

    def drift(self, F):
        return isometry_defect(F, self.ambient_form)

    def lift(self, point, frame):
        raw = np.column_stack([as_vector(point, self.n + 1) / self.radius, as_matrix(frame, self.n + 1, self.n)])
        F = gram_schmidt(raw, self.ambient_form, keep_order=True)
        defect = max(float(np.max(np.abs(F - raw))), isometry_defect(F, self.ambient_form))
        return F, defect

    def display_coords(self, point):
        point = np.asarray(point, dtype=float)
        if self.sign > 0:
            return point
        # Poincare ball
        return point[1:] / (self.radius + point[0])


class ComplexProjectiveRealization(TargetRealization):
    """
    Complex projective (c > 0) or hyperbolic (c < 0) space as the projective
    unitary group of diag(sign(c), I) acting on C^{m+1}. Group elements are
    complex matrices; points are the Hermitian projectors onto F e_0.
    """

    def __init__(self, model: ComplexSpaceForm):
        super().__init__(model)
        if model.index != 0:
            raise UnsupportedModel("Complex space forms with c != 0 are realized in Riemannian signature only")
        self.m = self.n // 2
        self.sign = 1.0 if model.c > 0 else -1.0
        self.k = 0.5 * np.sqrt(abs(model.c))
        self.h = np.diag([self.sign] + [1.0] * self.m).astype(complex)
        self.name = "unitary group of C^{m+1}" if model.c > 0 else "pseudo-unitary group U(m, 1)"

    def _complex(self, u):
        return u[:self.m] + 1j * u[self.m:]

    def _real(self, z):
        return np.concatenate([z.real, z.imag])

    def _realify(self, M):
        return np.block([[M.real, -M.imag], [M.imag, M.real]])

    def _algebra(self, u, Y):
        z = self._complex(u)
        A = np.zeros((self.m + 1, self.m + 1), dtype=complex)
        A[1:, 0] = self.k * z
        A[0, 1:] = -self.sign * self.k * z.conj()
        A[1:, 1:] = Y[:self.m, :self.m] + 1j * Y[self.m:, :self.m]
        return A

    def from_algebra(self, A):
        A = np.asarray(A, dtype=complex)
        u = self._real(A[1:, 0] / self.k)
        X = A[1:, 1:] - A[0, 0] * np.eye(self.m)
        return u, self._realify(X) + self.representative(u)

    def identity(self):
        return np.eye(self.m + 1, dtype=complex)

    def _projector(self, F):
        v = F[:, 0]
        return self.sign * np.outer(v, v.conj()) @ self.h

    def point(self, F):
        H = self.h @ self._projector(F)
        iu = np.triu_indices(self.m + 1, 1)
        return np.concatenate([np.real(np.diag(H)), H[iu].real, H[iu].imag])

    def project(self, F):
        M = np.linalg.solve(self.h, F.conj().T @ self.h @ F)
        return F @ fractional_matrix_power(M, -0.5)

    def drift(self, F):
        return float(np.max(np.abs(F.conj().T @ self.h @ F - self.h)))

    def distance(self, F1, F2):
        # modulo the centre, which acts trivially on frames
        phase = np.trace(F2.conj().T @ F1)
        phase = phase / abs(phase) if abs(phase) > 0 else 1.0
        return float(np.linalg.norm(F1 - phase * F2))

    def display_coords(self, point):
        m1 = self.m + 1
        H00, H11 = point[0], point[1]
        re01, im01 = point[m1], point[m1 + m1 * (m1 - 1) // 2]
        return np.array([2 * re01, 2 * im01, H00 - H11])


# ---------------------------------------------------------
# E(kappa, tau)
# ---------------------------------------------------------
def _rotation_angle(Y) -> float:
    """Rotation speed of an element of g for the oriented unit vector structure."""
    return 0.5 * (Y[2, 1] - Y[1, 2])


class NilRealization(TargetRealization):
    """
    E(0, tau) as the group of matrices
    [[1, tau v^T J2 R, z], [0, R, v], [0, 0, 1]], R in SO(2).
    The point is (v, z) in coordinates with contact form dz + tau (y dx - x dy).
    """
    name = "Heisenberg group with rotations"

    def __init__(self, model: EKappaTau):
        super().__init__(model)
        t = model.tau
        P1, P2, P3, Rot = np.zeros((4, 4, 4))
        P1[0, 2], P1[1, 3] = t, 1.0
        P2[0, 1], P2[2, 3] = -t, 1.0
        P3[0, 3] = 1.0
        Rot[2, 1], Rot[1, 2] = 1.0, -1.0
        self.generators = (P3, P1, P2)
        self.rotation = Rot

    @property
    def frame_form(self):
        return np.eye(3)

    def _algebra(self, u, Y):
        A = _rotation_angle(Y) * self.rotation
        for coefficient, P in zip(u, self.generators):
            A = A + coefficient * P
        return A

    def from_algebra(self, A):
        u = np.array([A[0, 3], A[1, 3], A[2, 3]])
        return u, self.representative(u) + A[2, 1] * hat(np.eye(3)[0])

    def identity(self):
        return np.eye(4)

    def point(self, F):
        return np.array([F[1, 3], F[2, 3], F[0, 3]])

    def _assemble(self, R, v, z):
        F = np.eye(4)
        F[1:3, 1:3] = R
        F[1:3, 3] = v
        F[0, 3] = z
        F[0, 1:3] = self.model.tau * v @ J2 @ R
        return F

    def frame(self, F):
        R, v = F[1:3, 1:3], F[1:3, 3]
        t = self.model.tau
        cols = [np.array([0.0, 0.0, 1.0])]
        for j in range(2):
            h = R[:, j]
            cols.append(np.array([h[0], h[1], t * v @ J2 @ h]))
        return np.column_stack(cols)

    def project(self, F):
        R, _ = polar(F[1:3, 1:3])
        return self._assemble(R, F[1:3, 3], F[0, 3])

    def drift(self, F):
        return float(np.max(np.abs(F - self.project(F))))

    def lift(self, point, frame):
        point = as_vector(point, 3)
        frame = as_matrix(frame, 3, 3)
        R, _ = polar(frame[:2, 1:3])
        if np.linalg.det(R) < 0:
            R[:, 1] = -R[:, 1]
        F = self._assemble(R, point[:2], point[2])
        return F, float(np.max(np.abs(self.frame(F) - frame)))


class BergerRealization(TargetRealization):
    """
    E(kappa, tau), kappa != 0, through the isometry algebra
    isom(S^2 or H^2) + R: a 3x3 block of the surface space form and a 2x2
    unipotent block for the fibre. The point is (b, t + 2 tau / kappa * psi)
    where psi is the angle of the surface frame against the transvection to b.
    """
    name = "isometry group of the base surface times R"

    def __init__(self, model: EKappaTau):
        super().__init__(model)
        k = model.kappa
        self.sign = 1.0 if k > 0 else -1.0
        self.root = np.sqrt(abs(k))
        self.radius = 1.0 / self.root
        self.beta = 2.0 * model.tau / k
        self.surface_form = np.diag([self.sign, 1.0, 1.0])

    @property
    def frame_form(self):
        return np.eye(3)

    def _algebra(self, u, Y):
        phi = _rotation_angle(Y)
        A = np.zeros((5, 5))
        A[1:3, 0] = self.root * u[1:]
        A[0, 1:3] = -self.sign * self.root * u[1:]
        A[2, 1], A[1, 2] = phi, -phi
        A[3, 4] = u[0] - self.beta * phi
        return A

    def from_algebra(self, A):
        phi = A[2, 1]
        u = np.array([A[3, 4] + self.beta * phi, A[1, 0] / self.root, A[2, 0] / self.root])
        return u, self.representative(u) + phi * hat(np.eye(3)[0])

    def identity(self):
        return np.eye(5)

    def _reflection(self, v):
        G = self.surface_form
        return np.eye(3) - 2.0 * np.outer(v, G @ v) / (v @ G @ v)

    def _fibre_rotation(self, S):
        """sigma(b)^-1 S, a rotation about e_0."""
        a = np.eye(3)[0]
        b = S[:, 0]
        sigma = self._reflection(a + b) @ self._reflection(a)
        return np.linalg.solve(sigma, S)

    def point(self, F):
        S = F[:3, :3]
        M = self._fibre_rotation(S)
        psi = np.arctan2(M[2, 1], M[1, 1])
        return np.concatenate([self.radius * S[:, 0], [F[3, 4] + self.beta * psi]])

    def point_delta(self, F_moved, F):
        M0 = self._fibre_rotation(F[:3, :3])
        M1 = self._fibre_rotation(F_moved[:3, :3])
        rel = M1 @ np.linalg.inv(M0)
        dpsi = np.arctan2(rel[2, 1], rel[1, 1])
        db = self.radius * (F_moved[:3, 0] - F[:3, 0])
        return np.concatenate([db, [F_moved[3, 4] - F[3, 4] + self.beta * dpsi]])

    def project(self, F):
        out = np.eye(5)
        out[:3, :3] = form_polar(F[:3, :3], self.surface_form)
        out[3, 4] = F[3, 4]
        return out

    def drift(self, F):
        return float(np.max(np.abs(F - self.project(F))))

    def lift(self, point, frame):
        point = as_vector(point, 4)
        frame = as_matrix(frame, 4, 3)
        raw = np.column_stack([point[:3] / self.radius, frame[:3, 1], frame[:3, 2]])
        S = gram_schmidt(raw, self.surface_form, keep_order=True)
        M = self._fibre_rotation(S)
        psi = np.arctan2(M[2, 1], M[1, 1])
        F = np.eye(5)
        F[:3, :3] = S
        F[3, 4] = point[3] - self.beta * psi
        return F, float(np.max(np.abs(self.frame(F) - frame)))

    def display_coords(self, point):
        if self.sign > 0:
            return np.asarray(point, dtype=float)
        b = point[:3]
        return np.concatenate([b[1:] / (self.radius + b[0]), point[3:]])


# ---------------------------------------------------------
# Lie groups
# ---------------------------------------------------------
class MatrixLieRealization(TargetRealization):
    """The group generated by a matrix basis of its Lie algebra."""
    name = "matrix Lie group"

    def __init__(self, model: LieGroupLeftInvariant):
        super().__init__(model)
        self.basis = model.matrix_basis
        self.size = self.basis.shape[1]
        self._flat = self.basis.reshape(self.n, -1).T

    @property
    def frame_form(self):
        p0 = self.model.base_frame
        return p0.T @ self.model.inner_product @ p0

    def _coefficients(self, A):
        coefficients, *_ = np.linalg.lstsq(self._flat, np.asarray(A, dtype=float).ravel(), rcond=None)
        return coefficients

    def _algebra(self, u, Y):
        return np.einsum("i,iab->ab", self.model.base_frame @ u, self.basis)

    def from_algebra(self, A):
        u = np.linalg.solve(self.model.base_frame, self._coefficients(A))
        return u, self.representative(u)

    def identity(self):
        return np.eye(self.size)

    def point(self, F):
        return np.asarray(F, dtype=float).ravel()

    def frame(self, F):
        moved = np.einsum("ab,ibc->iac", F, self.basis).reshape(self.n, -1).T
        return moved @ self.model.base_frame

    def lift(self, point, frame):
        F = as_vector(point, self.size ** 2).reshape(self.size, self.size)
        return F, float(np.max(np.abs(self.frame(F) - frame)))

    def display_coords(self, point):
        F = np.asarray(point, dtype=float).reshape(self.size, self.size)
        return self._coefficients(np.real(logm(F)))


class SecondKindRealization(TargetRealization):
    """
    Lie group without a matrix representation, in exponential coordinates of
    the second kind g(t) = exp(t_1 e_1) ... exp(t_m e_m).
    """
    name = "exponential coordinates of the second kind"

    def __init__(self, model: LieGroupLeftInvariant):
        if model.dim > settings.MAX_SECOND_KIND_DIM:
            raise UnsupportedModel(f"Lie algebra of dimension {model.dim} without a matrix representation")
        super().__init__(model)
        self.ads = np.stack([model.ad(e) for e in np.eye(self.n)])

    @property
    def frame_form(self):
        p0 = self.model.base_frame
        return p0.T @ self.model.inner_product @ p0

    def _algebra(self, u, Y):
        return self.model.base_frame @ u

    def from_algebra(self, A):
        u = np.linalg.solve(self.model.base_frame, A)
        return u, self.representative(u)

    def bracket(self, A, B):
        return self.model.bracket(A, B)

    def trivialization(self, t) -> NDArray[np.float64]:
        """M(t) with g^-1 dg = M(t) dt."""
        M = np.zeros((self.n, self.n))
        P = np.eye(self.n)
        for i in reversed(range(self.n)):
            M[:, i] = P[:, i]
            P = P @ expm(-t[i] * self.ads[i])
        return M

    def identity(self):
        return np.zeros(self.n)

    def velocity(self, F, A):
        return np.linalg.solve(self.trivialization(F), A)

    def left_derivative(self, F, dF):
        return self.trivialization(F) @ dF

    def translate(self, F, A):
        raise UnsupportedModel("Exponential coordinates do not support finite translations")

    def point(self, F):
        return np.asarray(F, dtype=float).copy()

    def frame(self, F):
        return np.linalg.solve(self.trivialization(F), self.model.base_frame)

    def lift(self, point, frame):
        F = as_vector(point, self.n)
        return F, float(np.max(np.abs(self.frame(F) - frame)))

    def random_element(self, rng, scale: float = 0.5):
        return scale * rng.normal(size=self.n)


# ---------------------------------------------------------
# Products
# ---------------------------------------------------------
def _blocks(sizes):
    edges = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


class ProductRealization(TargetRealization):
    name = "block direct sum"

    def __init__(self, model: Product):
        super().__init__(model)
        self.children = [realization_for(f) for f in model.factors]
        for child in self.children:
            if isinstance(child, (SecondKindRealization, ComplexProjectiveRealization)):
                raise UnsupportedModel(f"Products cannot contain a {child.name} factor")
        self.tangent = model.split
        self.group = _blocks([c.identity().shape[0] for c in self.children])
        self.ambient = _blocks([c.point(c.identity()).shape[0] for c in self.children])

    @property
    def frame_form(self):
        out = np.zeros((self.n, self.n))
        for child, s in zip(self.children, self.tangent):
            out[s, s] = child.frame_form
        return out

    def _algebra(self, u, Y):
        A = np.zeros((self.group[-1].stop,) * 2)
        for child, s, g in zip(self.children, self.tangent, self.group):
            A[g, g] = child._algebra(u[s], Y[s, s])
        return A

    def from_algebra(self, A):
        u = np.zeros(self.n)
        X = np.zeros((self.n, self.n))
        for child, s, g in zip(self.children, self.tangent, self.group):
            u[s], X[s, s] = child.from_algebra(A[g, g])
        return u, X

    def identity(self):
        F = np.zeros((self.group[-1].stop,) * 2)
        for child, g in zip(self.children, self.group):
            F[g, g] = child.identity()
        return F

    def point(self, F):
        return np.concatenate([c.point(F[g, g]) for c, g in zip(self.children, self.group)])

    def frame(self, F):
        L = np.zeros((self.ambient[-1].stop, self.n))
        for child, s, g, a in zip(self.children, self.tangent, self.group, self.ambient):
            L[a, s] = child.frame(F[g, g])
        return L

    def project(self, F):
        out = np.zeros_like(F)
        for child, g in zip(self.children, self.group):
            out[g, g] = child.project(F[g, g])
        return out

    def drift(self, F):
        off = F.copy()
        worst = 0.0
        for child, g in zip(self.children, self.group):
            worst = max(worst, child.drift(F[g, g]))
            off[g, g] = 0.0
        return max(worst, float(np.max(np.abs(off))))

    def lift(self, point, frame):
        F = np.zeros((self.group[-1].stop,) * 2)
        frame = np.asarray(frame, dtype=float)
        off = frame.copy()
        defect = 0.0
        for child, s, g, a in zip(self.children, self.tangent, self.group, self.ambient):
            F[g, g], child_defect = child.lift(point[a], frame[a, s])
            off[a, s] = 0.0
            defect = max(defect, child_defect)
        return F, max(defect, float(np.max(np.abs(off))))

    def display_coords(self, point):
        return np.concatenate([c.display_coords(point[a]) for c, a in zip(self.children, self.ambient)])

    def describe(self) -> str:
        return " + ".join(c.describe() for c in self.children)


def realization_for(model: ModelSpace) -> TargetRealization:
    if isinstance(model, SpaceForm):
        return AffineRealization(model) if model.c == 0 else QuadricRealization(model)
    if isinstance(model, ComplexSpaceForm):
        return AffineRealization(model) if model.c == 0 else ComplexProjectiveRealization(model)
    if isinstance(model, EKappaTau):
        return NilRealization(model) if model.kappa == 0 else BergerRealization(model)
    if isinstance(model, LieGroupLeftInvariant):
        if model.matrix_basis is not None:
            return MatrixLieRealization(model)
        return SecondKindRealization(model)
    if isinstance(model, Product):
        return ProductRealization(model)
    raise UnsupportedModel(f"No realization for {type(model).__name__}")


def realization_tensors(target: TargetRealization, u, w) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Torsion T(u, w) and curvature R(u, w) of the realization, read off the Lie
    bracket of the algebra elements with canonical values u and w.
    """
    A = target.to_algebra(u, target.representative(u))
    B = target.to_algebra(w, target.representative(w))
    u_a, X_a = target.from_algebra(A)
    u_b, X_b = target.from_algebra(B)
    u_ab, X_ab = target.from_algebra(target.bracket(A, B))
    torsion = X_a @ u_b - X_b @ u_a - u_ab
    curvature = commutator(X_a, X_b) - X_ab
    return np.real(torsion), np.real(curvature)
