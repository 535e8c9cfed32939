"""
Catalog of infinitesimally homogeneous target spaces.

Every model knows the G-structure its frame bundle reduces to and the three
characteristic tensors (torsion, curvature, inner torsion) on the standard
structured space R^n. characteristic_tensors transports them to any other
vector space carrying a G-structure of the same kind, through a frame of P.

Stacks are stored per basis vector: torsion[i, j] = T(e_i, e_j),
curvature[i, j] = R(e_i, e_j) as an endomorphism and gamma0[i] = a
representative in gl(R^n) of the inner torsion along e_i.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import ClassVar, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from immerse.geometry.errors import ShapeError, SpecViolation
from immerse.geometry.g_structure import (
    ORIENTED_UNIT_VECTOR_3D,
    ORTHONORMAL,
    PRODUCT,
    TRIVIAL_FRAME,
    UNITARY,
    GStructuredSpace,
    QuotientRepr,
    block_offsets,
)
from immerse.geometry.tensor_core import Bilinear, commutator, contract, hat, standard_form

logger = logging.getLogger(__name__)

__all__ = [
    "ComplexSpaceForm",
    "EKappaTau",
    "GStructuredSpace",
    "LieGroupLeftInvariant",
    "ModelSpace",
    "ModelTensors",
    "Product",
    "SpaceForm",
    "characteristic_tensors",
    "koszul_gamma",
    "named_lie_algebra",
    "realize_target",
]

JACOBI_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ModelTensors:
    """Characteristic tensors as stacks over a basis."""
    torsion: NDArray[np.float64]
    curvature: NDArray[np.float64]
    gamma0: NDArray[np.float64]

    @classmethod
    def zeros(cls, n: int) -> "ModelTensors":
        return cls(np.zeros((n, n, n)), np.zeros((n, n, n, n)), np.zeros((n, n, n)))


class ModelSpace(ABC):
    family: ClassVar[str] = ""

    dim: int
    index: int

    @abstractmethod
    def structure_space(self) -> GStructuredSpace:
        """R^n with the standard data of the structure group of P."""

    @abstractmethod
    def standard_tensors(self) -> ModelTensors:
        """Characteristic tensors on structure_space()."""

    @abstractmethod
    def params(self) -> dict:
        pass

    def describe(self) -> dict:
        return {
            "family": self.family,
            "params": self.params(),
            "dim": self.dim,
            "index": self.index,
            "structure": self.structure_space().kind,
        }


# ---------------------------------------------------------
# Space forms
# ---------------------------------------------------------
def _constant_curvature(c: float, form) -> NDArray[np.float64]:
    """R(u, w) z = c (<w, z> u - <u, z> w)."""
    n = form.shape[0]
    R = np.zeros((n, n, n, n))
    for a in range(n):
        for b in range(n):
            R[a, b] = c * (np.outer(np.eye(n)[a], form[b]) - np.outer(np.eye(n)[b], form[a]))
    return R


@dataclass(frozen=True)
class SpaceForm(ModelSpace):
    """Pseudo-Riemannian space form of constant sectional curvature c."""
    family: ClassVar[str] = "spaceform"

    c: float
    dim: int
    index: int = 0

    def __post_init__(self):
        if self.dim < 1 or not 0 <= self.index <= self.dim:
            raise ShapeError(f"Space form needs dim >= 1 and 0 <= index <= dim, got ({self.dim}, {self.index})")

    def structure_space(self) -> GStructuredSpace:
        return GStructuredSpace.standard(ORTHONORMAL, self.dim, index=self.index)

    def standard_tensors(self) -> ModelTensors:
        n = self.dim
        return ModelTensors(np.zeros((n, n, n)), _constant_curvature(self.c, standard_form(n, self.index)),
                            np.zeros((n, n, n)))

    def params(self) -> dict:
        return {"c": self.c, "dim": self.dim, "index": self.index}


@dataclass(frozen=True)
class ComplexSpaceForm(ModelSpace):
    """Kähler space form of constant holomorphic sectional curvature c."""
    family: ClassVar[str] = "complex_spaceform"

    c: float
    dim: int
    index: int = 0

    def __post_init__(self):
        if self.dim < 2 or self.dim % 2 or self.index % 2:
            raise ShapeError(f"Complex space form needs even dim and index, got ({self.dim}, {self.index})")

    def structure_space(self) -> GStructuredSpace:
        return GStructuredSpace.standard(UNITARY, self.dim, index=self.index)

    def standard_tensors(self) -> ModelTensors:
        n = self.dim
        space = self.structure_space()
        B, J = space.form, space.J
        R = np.zeros((n, n, n, n))
        basis = np.eye(n)
        for a in range(n):
            for b in range(n):
                X, Y = basis[a], basis[b]
                R[a, b] = 0.25 * self.c * (
                    np.outer(X, B @ Y) - np.outer(Y, B @ X)
                    + np.outer(J @ X, B @ J @ Y) - np.outer(J @ Y, B @ J @ X)
                    + 2.0 * (X @ B @ J @ Y) * J
                )
        return ModelTensors(np.zeros((n, n, n)), R, np.zeros((n, n, n)))

    def params(self) -> dict:
        return {"c": self.c, "dim": self.dim, "index": self.index}


# ---------------------------------------------------------
# Lie groups with left-invariant data
# ---------------------------------------------------------
def named_lie_algebra(name: str, dim: int = 3):
    """
    Structure constants C[i, j, k] (with [e_i, e_j] = sum_k C[i, j, k] e_k),
    a matrix basis and a natural inner product for a few standard algebras.
    """
    if name == "abelian":
        basis = np.zeros((dim, dim + 1, dim + 1))
        for i in range(dim):
            basis[i, i, dim] = 1.0
        return np.zeros((dim, dim, dim)), basis, np.eye(dim)
    if name == "heisenberg":
        C = np.zeros((3, 3, 3))
        C[0, 1, 2], C[1, 0, 2] = 1.0, -1.0
        basis = np.zeros((3, 3, 3))
        basis[0, 0, 1] = basis[1, 1, 2] = basis[2, 0, 2] = 1.0
        return C, basis, np.eye(3)
    if name == "so3":
        C = np.zeros((3, 3, 3))
        for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            C[i, j, k], C[j, i, k] = 1.0, -1.0
        basis = np.stack([hat(e) for e in np.eye(3)])
        # negative Killing form
        return C, basis, 2.0 * np.eye(3)
    raise SpecViolation(f"Unknown Lie algebra {name!r}")


def _jacobiator(C) -> NDArray[np.float64]:
    return (np.einsum("ijl,lkm->ijkm", C, C) + np.einsum("jkl,lim->ijkm", C, C)
            + np.einsum("kil,ljm->ijkm", C, C))


@dataclass(frozen=True, eq=False)
class LieGroupLeftInvariant(ModelSpace):
    """
    Lie group with a left-invariant connection (Levi-Civita of a left-invariant
    metric, or the flat left connection) and the left-invariant frame p0.
    """
    family: ClassVar[str] = "lie_group"

    structure_constants: NDArray[np.float64]
    inner_product: NDArray[np.float64]
    base_frame: Optional[NDArray[np.float64]] = None
    connection: str = "levi_civita"
    matrix_basis: Optional[NDArray[np.float64]] = None
    name: str = ""

    def __post_init__(self):
        C = np.asarray(self.structure_constants, dtype=float)
        m = C.shape[0]
        if C.shape != (m, m, m):
            raise ShapeError(f"Structure constants must have shape (m, m, m), got {C.shape}")
        if np.max(np.abs(C + np.swapaxes(C, 0, 1)), initial=0.0) > JACOBI_TOL:
            raise SpecViolation("Structure constants are not antisymmetric")
        if np.max(np.abs(_jacobiator(C)), initial=0.0) > JACOBI_TOL:
            raise SpecViolation("Structure constants violate the Jacobi identity")
        if self.connection not in ("levi_civita", "flat"):
            raise SpecViolation(f"Unknown left-invariant connection {self.connection!r}")
        p0 = np.eye(m) if self.base_frame is None else np.asarray(self.base_frame, dtype=float)
        if p0.shape != (m, m) or abs(np.linalg.det(p0)) < 1e-12:
            raise ShapeError("Base frame must be an invertible m x m matrix")
        object.__setattr__(self, "structure_constants", C)
        object.__setattr__(self, "inner_product", Bilinear(self.inner_product).entries)
        object.__setattr__(self, "base_frame", p0)
        if self.matrix_basis is not None:
            basis = np.asarray(self.matrix_basis, dtype=float)
            if basis.ndim != 3 or basis.shape[0] != m or basis.shape[1] != basis.shape[2]:
                raise ShapeError(f"Matrix basis must have shape (m, N, N), got {basis.shape}")
            brackets = np.einsum("iab,jbc->ijac", basis, basis) - np.einsum("jab,ibc->ijac", basis, basis)
            expected = np.einsum("ijk,kac->ijac", C, basis)
            if np.max(np.abs(brackets - expected)) > 1e-9:
                raise SpecViolation("Matrix basis does not represent the structure constants")
            object.__setattr__(self, "matrix_basis", basis)

    @classmethod
    def named(cls, name: str, dim: int = 3, connection: str = "levi_civita", with_matrices: bool = True,
              inner_product=None, base_frame=None) -> "LieGroupLeftInvariant":
        C, basis, metric = named_lie_algebra(name, dim)
        return cls(C, metric if inner_product is None else inner_product, base_frame, connection,
                   basis if with_matrices else None, name)

    @property
    def dim(self) -> int:
        return self.structure_constants.shape[0]

    @property
    def index(self) -> int:
        return 0

    def bracket(self, X, Y) -> NDArray[np.float64]:
        return np.einsum("i,j,ijk->k", X, Y, self.structure_constants)

    def ad(self, X) -> NDArray[np.float64]:
        """Matrix of Y -> [X, Y]."""
        return np.einsum("i,ijk->kj", X, self.structure_constants)

    def structure_space(self) -> GStructuredSpace:
        return GStructuredSpace.standard(TRIVIAL_FRAME, self.dim)

    def algebra_gamma(self) -> NDArray[np.float64]:
        m = self.dim
        if self.connection == "flat":
            return np.zeros((m, m, m))
        return koszul_gamma(self)

    def standard_tensors(self) -> ModelTensors:
        m = self.dim
        p0 = self.base_frame
        q0 = np.linalg.inv(p0)
        G = self.algebra_gamma()
        # gamma0[a] = p0^-1 Gamma(p0 e_a) p0
        gamma0 = np.einsum("ia,bc,icd,de->abe", p0, q0, G, p0)
        brackets = np.einsum("ia,jb,ijk->abk", p0, p0, self.structure_constants)
        pulled = np.einsum("ck,abk->abc", q0, brackets)
        torsion = np.zeros((m, m, m))
        curvature = np.zeros((m, m, m, m))
        for a in range(m):
            for b in range(m):
                torsion[a, b] = gamma0[a][:, b] - gamma0[b][:, a] - pulled[a, b]
                curvature[a, b] = commutator(gamma0[a], gamma0[b]) - contract(gamma0, pulled[a, b])
        return ModelTensors(torsion, curvature, gamma0)

    def params(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "connection": self.connection,
            "matrix_basis": self.matrix_basis is not None,
        }


def koszul_gamma(model: LieGroupLeftInvariant) -> NDArray[np.float64]:
    """
    Levi-Civita connection of a left-invariant metric on left-invariant fields,
    <Gamma(X) Y, Z> = (-<X, [Y, Z]> + <Y, [Z, X]> + <Z, [X, Y]>) / 2.

    Returns:
        Stack G with G[i] the endomorphism Gamma(e_i) of the Lie algebra
    """
    B = Bilinear(model.inner_product).entries
    C = model.structure_constants
    # CB[b, c, a] = <e_a, [e_b, e_c]>
    CB = np.einsum("bck,ka->bca", C, B)
    K = 0.5 * (-np.einsum("jli->ijl", CB) + np.einsum("lij->ijl", CB) + CB)
    return np.einsum("ml,ijl->imj", np.linalg.inv(B), K)


# ---------------------------------------------------------
# Homogeneous 3-manifolds E(kappa, tau)
# ---------------------------------------------------------
@dataclass(frozen=True)
class EKappaTau(ModelSpace):
    """
    Simply connected homogeneous 3-manifold with a 4-dimensional isometry group:
    a Riemannian submersion of curvature kappa over a surface, unit Killing
    fibre xi and bundle curvature tau. The structure keeps xi = e_1 fixed.
    """
    family: ClassVar[str] = "ekappatau"

    kappa: float
    tau: float

    @property
    def dim(self) -> int:
        return 3

    @property
    def index(self) -> int:
        return 0

    def structure_space(self) -> GStructuredSpace:
        return GStructuredSpace.standard(ORIENTED_UNIT_VECTOR_3D, 3)

    def representative(self, u) -> NDArray[np.float64]:
        """Levi-Civita connection in an adapted orthonormal frame: tau u x . - 2 tau <u, xi> xi x ."""
        xi = np.eye(3)[0]
        return self.tau * hat(u) - 2.0 * self.tau * (u @ xi) * hat(xi)

    def standard_tensors(self) -> ModelTensors:
        k, t = self.kappa, self.tau
        xi = np.eye(3)[0]
        basis = np.eye(3)
        R = np.zeros((3, 3, 3, 3))
        for a in range(3):
            for b in range(3):
                X, Y = basis[a], basis[b]
                x0, y0 = X @ xi, Y @ xi
                R[a, b] = (k - 3 * t ** 2) * (np.outer(X, Y) - np.outer(Y, X)) - (k - 4 * t ** 2) * (
                    y0 * np.outer(X, xi) - x0 * np.outer(Y, xi) + x0 * np.outer(xi, Y) - y0 * np.outer(xi, X)
                )
        gamma0 = np.stack([self.representative(e) for e in basis])
        return ModelTensors(np.zeros((3, 3, 3)), R, gamma0)

    def params(self) -> dict:
        return {"kappa": self.kappa, "tau": self.tau}


# ---------------------------------------------------------
# Products
# ---------------------------------------------------------
@dataclass(frozen=True)
class Product(ModelSpace):
    family: ClassVar[str] = "product"

    factors: Tuple[ModelSpace, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.factors) < 2:
            raise SpecViolation("A product model needs at least two factors")

    @property
    def dim(self) -> int:
        return sum(f.dim for f in self.factors)

    @property
    def index(self) -> int:
        return sum(f.index for f in self.factors)

    @property
    def split(self) -> list:
        return block_offsets([f.dim for f in self.factors])

    def structure_space(self) -> GStructuredSpace:
        return GStructuredSpace.standard(PRODUCT, self.dim, children=[f.structure_space() for f in self.factors])

    def standard_tensors(self) -> ModelTensors:
        out = ModelTensors.zeros(self.dim)
        for factor, s in zip(self.factors, self.split):
            child = factor.standard_tensors()
            out.torsion[s, s, s] = child.torsion
            out.curvature[s, s, s, s] = child.curvature
            out.gamma0[s, s, s] = child.gamma0
        return out

    def params(self) -> dict:
        return {"factors": [f.describe() for f in self.factors]}


# ---------------------------------------------------------
# Tensors on a structured space
# ---------------------------------------------------------
def _check_matches(reference: GStructuredSpace, Z: GStructuredSpace, path: str = "model") -> None:
    if reference.kind != Z.kind:
        raise SpecViolation(f"{path}: structure {Z.kind!r} does not match the model's {reference.kind!r}")
    if reference.dim != Z.dim or reference.index != Z.index:
        raise SpecViolation(f"{path}: dimension/index ({Z.dim}, {Z.index}) do not match "
                            f"({reference.dim}, {reference.index})")
    if reference.kind == PRODUCT:
        if len(reference.children) != len(Z.children):
            raise SpecViolation(f"{path}: product has {len(Z.children)} factors, model has {len(reference.children)}")
        for i, (a, b) in enumerate(zip(reference.children, Z.children)):
            _check_matches(a, b, f"{path}.factor[{i}]")


@dataclass(frozen=True, eq=False)
class CharacteristicTensors:
    """T_Z, R_Z and In_Z on one G-structured vector space."""
    space: GStructuredSpace
    stacks: ModelTensors

    def torsion(self, u, w) -> NDArray[np.float64]:
        return np.einsum("i,j,ijk->k", u, w, self.stacks.torsion)

    def curvature(self, u, w) -> NDArray[np.float64]:
        return np.einsum("i,j,ijab->ab", u, w, self.stacks.curvature)

    def representative(self, u) -> NDArray[np.float64]:
        return contract(self.stacks.gamma0, u)

    def inner(self, u) -> QuotientRepr:
        return self.space.project(self.representative(u))


def transport_tensors(stacks: ModelTensors, p) -> ModelTensors:
    """Pushes tensors on R^n forward by a linear isomorphism p."""
    q = np.linalg.inv(p)
    torsion = np.einsum("ck,ai,bj,abk->ijc", p, q, q, stacks.torsion)
    curvature = np.einsum("ec,ai,bj,abcd,df->ijef", p, q, q, stacks.curvature, q)
    gamma0 = np.einsum("ec,ai,acd,df->ief", p, q, stacks.gamma0, q)
    return ModelTensors(torsion, curvature, gamma0)


def characteristic_tensors(model: ModelSpace, Z: GStructuredSpace) -> CharacteristicTensors:
    """
    Characteristic tensors of a model on a vector space carrying a G-structure
    of the model's kind. Independent of the frame of P_Z used to transport them.
    """
    _check_matches(model.structure_space(), Z)
    Z.validate()
    stacks = transport_tensors(model.standard_tensors(), Z.structure_frame())
    return CharacteristicTensors(Z, stacks)


def realize_target(model: ModelSpace):
    """Matrix-group realization of the model's G-structure bundle."""
    from immerse.geometry.realizations import realization_for

    return realization_for(model)
