"""
G-structures on vector bundles and on single vector spaces.

GStructureSpec describes a G-structure on a trivialized bundle over the chart
through its auxiliary fields (metric, subbundle, unit section, complex
structure, frame). GStructuredSpace is the same data frozen at one point; it
owns the identification of gl(E_x)/g_x with a concrete complement, the frames
of P_x and random elements of g_x.
"""
import logging
from dataclasses import dataclass, fields
from typing import Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from immerse.geometry import settings
from immerse.geometry.chart_manifold import (
    ClosedForm,
    ConnectionField,
    FieldSource,
    MetricField,
    christoffel_of_frame,
    covariant_endomorphism,
    covariant_metric,
    covariant_section,
)
from immerse.geometry.errors import DegenerateForm, ShapeError, SpecViolation
from immerse.geometry.tensor_core import (
    Bilinear,
    commutator,
    complete_basis,
    complex_structure,
    gram_schmidt,
    standard_form,
    transpose_wrt,
)

logger = logging.getLogger(__name__)

# ---------------------------------------------------------
# Variant tags
# ---------------------------------------------------------
TRIVIAL_FRAME = "trivial_frame"
ORTHONORMAL = "orthonormal"
SUBBUNDLE = "subbundle"
ADAPTED_ORTHONORMAL = "adapted_orthonormal"
UNIT_SECTION = "unit_section"
ALMOST_COMPLEX = "almost_complex"
UNITARY = "unitary"
ORIENTED_UNIT_VECTOR_3D = "oriented_unit_vector_3d"
PRODUCT = "product"

PRIMITIVE_KINDS = (TRIVIAL_FRAME, ORTHONORMAL, SUBBUNDLE, ADAPTED_ORTHONORMAL, UNIT_SECTION,
                   ALMOST_COMPLEX, UNITARY, ORIENTED_UNIT_VECTOR_3D)
STRUCTURE_KINDS = PRIMITIVE_KINDS + (PRODUCT,)
METRIC_KINDS = (ORTHONORMAL, ADAPTED_ORTHONORMAL, UNITARY, ORIENTED_UNIT_VECTOR_3D)


# ---------------------------------------------------------
# Quotient representatives
# ---------------------------------------------------------
@dataclass(frozen=True)
class QuotientRepr:
    """
    Base class for concrete representatives of gl(E_x)/g_x.
    """

    def components(self):
        return [np.asarray(getattr(self, f.name), dtype=float) for f in fields(self)]

    def norm(self) -> float:
        return max((float(np.max(np.abs(c))) for c in self.components() if c.size), default=0.0)

    def _combine(self, other: "QuotientRepr", op) -> "QuotientRepr":
        if type(other) is not type(self):
            raise SpecViolation(f"Cannot combine {type(self).__name__} with {type(other).__name__}")
        return type(self)(*[op(a, b) for a, b in zip(self.components(), other.components())])

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def scale(self, factor: float) -> "QuotientRepr":
        return type(self)(*[factor * c for c in self.components()])

    def to_dict(self) -> dict:
        return {"kind": type(self).__name__, "parts": [c.tolist() for c in self.components()]}


@dataclass(frozen=True)
class Full(QuotientRepr):
    matrix: NDArray[np.float64]


@dataclass(frozen=True)
class Sym(QuotientRepr):
    matrix: NDArray[np.float64]


@dataclass(frozen=True)
class HomToQuotient(QuotientRepr):
    """Map F_x -> E_x/F_x in the basis of F_x and quotient coordinates."""
    matrix: NDArray[np.float64]


@dataclass(frozen=True)
class SymPlusHom(QuotientRepr):
    sym: NDArray[np.float64]
    hom: NDArray[np.float64]


@dataclass(frozen=True)
class Vector(QuotientRepr):
    vector: NDArray[np.float64]


@dataclass(frozen=True)
class SymPlusPerp(QuotientRepr):
    sym: NDArray[np.float64]
    vector: NDArray[np.float64]


@dataclass(frozen=True)
class AntiCommuting(QuotientRepr):
    matrix: NDArray[np.float64]


@dataclass(frozen=True)
class SymPlusAntiCommuting(QuotientRepr):
    sym: NDArray[np.float64]
    anti: NDArray[np.float64]


@dataclass(frozen=True)
class DirectSum(QuotientRepr):
    """Child classes of the diagonal blocks plus the off-diagonal blocks."""
    parts: Tuple[QuotientRepr, ...]
    off_diagonal: Tuple[NDArray[np.float64], ...]

    def components(self):
        out = []
        for part in self.parts:
            out.extend(part.components())
        out.extend(np.asarray(block, dtype=float) for block in self.off_diagonal)
        return out

    def _combine(self, other, op):
        if not isinstance(other, DirectSum) or len(other.parts) != len(self.parts):
            raise SpecViolation("Cannot combine direct sums of different shapes")
        return DirectSum(tuple(a._combine(b, op) for a, b in zip(self.parts, other.parts)),
                         tuple(op(a, b) for a, b in zip(self.off_diagonal, other.off_diagonal)))

    def scale(self, factor):
        return DirectSum(tuple(p.scale(factor) for p in self.parts),
                         tuple(factor * b for b in self.off_diagonal))

    def to_dict(self):
        return {"kind": "DirectSum", "parts": [p.to_dict() for p in self.parts],
                "off_diagonal": [b.tolist() for b in self.off_diagonal]}


def block_offsets(dims) -> list:
    offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    return [slice(int(a), int(b)) for a, b in zip(offsets[:-1], offsets[1:])]


def off_diagonal_blocks(T, slices) -> Tuple[NDArray[np.float64], ...]:
    return tuple(T[a, b] for i, a in enumerate(slices) for j, b in enumerate(slices) if i != j)


# ---------------------------------------------------------
# Pointwise G-structure
# ---------------------------------------------------------
@dataclass(frozen=True)
class GStructuredSpace:
    """
    A vector space carrying the auxiliary data of a G-structure: bilinear form,
    distinguished subspace, unit vector, complex structure or full frame.
    """
    kind: str
    dim: int
    form: Optional[NDArray[np.float64]] = None
    index: int = 0
    basis: Optional[NDArray[np.float64]] = None
    sub_index: int = 0
    unit: Optional[NDArray[np.float64]] = None
    J: Optional[NDArray[np.float64]] = None
    frame: Optional[NDArray[np.float64]] = None
    orientation: int = 1
    children: Tuple["GStructuredSpace", ...] = ()

    @classmethod
    def standard(cls, kind: str, dim: int, index: int = 0, sub_rank: int = 0, sub_index: int = 0,
                 metric: bool = True, orientation: int = 1, children=()) -> "GStructuredSpace":
        """
        R^dim with the standard data of a structure kind: e_1 as unit vector,
        span(e_1..e_l) as subspace, J0 on the two halves, the identity frame.
        """
        if kind == TRIVIAL_FRAME:
            return cls(kind, dim, frame=np.eye(dim))
        if kind == ORTHONORMAL:
            return cls(kind, dim, form=standard_form(dim, index), index=index)
        if kind == SUBBUNDLE:
            return cls(kind, dim, basis=np.eye(dim)[:, :sub_rank])
        if kind == ADAPTED_ORTHONORMAL:
            form = np.zeros((dim, dim))
            form[:sub_rank, :sub_rank] = standard_form(sub_rank, sub_index)
            form[sub_rank:, sub_rank:] = standard_form(dim - sub_rank, index - sub_index)
            return cls(kind, dim, form=form, index=index, basis=np.eye(dim)[:, :sub_rank], sub_index=sub_index)
        if kind == UNIT_SECTION:
            return cls(kind, dim, form=standard_form(dim, index) if metric else None, index=index,
                       unit=np.eye(dim)[:, 0])
        if kind == ALMOST_COMPLEX:
            return cls(kind, dim, J=complex_structure(dim))
        if kind == UNITARY:
            return cls(kind, dim, form=unitary_form(dim, index), index=index, J=complex_structure(dim))
        if kind == ORIENTED_UNIT_VECTOR_3D:
            return cls(kind, 3, form=np.eye(3), unit=np.eye(3)[:, 0], orientation=orientation)
        if kind == PRODUCT:
            children = tuple(children)
            return cls(kind, sum(c.dim for c in children), children=children)
        raise SpecViolation(f"Unknown G-structure kind {kind!r}")

    # Derived data
    @property
    def split(self) -> list:
        return block_offsets([c.dim for c in self.children])

    @property
    def has_metric(self) -> bool:
        return self.form is not None

    def adjoint(self, T) -> NDArray[np.float64]:
        return transpose_wrt(self.form, T)

    def quotient_rows(self) -> NDArray[np.float64]:
        """Rows mapping E onto E/F for a subspace without metric: last rows of [B|C]^-1."""
        l = self.basis.shape[1]
        return np.linalg.inv(complete_basis(self.basis))[l:, :]

    def perp_projector(self) -> NDArray[np.float64]:
        """Form-orthogonal projector of E onto the complement of F."""
        B, G = self.basis, self.form
        onto_f = B @ np.linalg.solve(B.T @ G @ B, B.T @ G)
        return np.eye(self.dim) - onto_f

    # Validation
    def validate(self, tol: float = None) -> "GStructuredSpace":
        tol = settings.SPEC_TOL if tol is None else tol
        kind = self.kind
        if kind not in STRUCTURE_KINDS:
            raise SpecViolation(f"Unknown G-structure kind {kind!r}")
        if kind == PRODUCT:
            if not self.children:
                raise SpecViolation("Product structure needs children")
            if sum(c.dim for c in self.children) != self.dim:
                raise SpecViolation("Product children dimensions do not add up")
            for child in self.children:
                child.validate(tol)
            return self
        if kind in METRIC_KINDS and self.form is None:
            raise SpecViolation(f"{kind} needs a metric")
        if self.form is not None:
            try:
                Bilinear(self.form, (self.dim - self.index, self.index))
            except DegenerateForm as e:
                raise SpecViolation(f"{kind}: {e}") from e
        if kind == TRIVIAL_FRAME:
            if self.frame is None or abs(np.linalg.det(self.frame)) < settings.DET_LIMIT:
                raise SpecViolation("trivial_frame needs an invertible frame")
        if kind in (SUBBUNDLE, ADAPTED_ORTHONORMAL):
            if self.basis is None or np.linalg.matrix_rank(self.basis) != self.basis.shape[1]:
                raise SpecViolation(f"{kind} needs a subbundle basis of full rank")
        if kind == ADAPTED_ORTHONORMAL:
            l = self.basis.shape[1]
            try:
                Bilinear(self.basis.T @ self.form @ self.basis, (l - self.sub_index, self.sub_index))
            except DegenerateForm as e:
                raise SpecViolation(f"Subbundle restriction of the metric: {e}") from e
        if kind in (UNIT_SECTION, ORIENTED_UNIT_VECTOR_3D):
            if self.unit is None or np.linalg.norm(self.unit) < tol:
                raise SpecViolation(f"{kind} needs a nonzero section")
            if self.form is not None and abs(self.unit @ self.form @ self.unit - 1.0) > tol:
                raise SpecViolation(f"{kind}: section does not have unit length")
        if kind in (ALMOST_COMPLEX, UNITARY):
            if self.J is None or np.max(np.abs(self.J @ self.J + np.eye(self.dim))) > tol:
                raise SpecViolation(f"{kind}: J does not square to -I")
        if kind == UNITARY:
            if np.max(np.abs(self.form @ self.J + self.J.T @ self.form)) > tol:
                raise SpecViolation("unitary: J is not antisymmetric for the metric")
        if kind == ORIENTED_UNIT_VECTOR_3D:
            if self.dim != 3 or self.index != 0:
                raise SpecViolation("oriented_unit_vector_3d needs a 3-dimensional Riemannian fibre")
        return self

    # Quotient identification
    def project(self, T) -> QuotientRepr:
        """
        Class of T in gl(E)/g under the concrete identification of the kind.
        """
        T = np.asarray(T, dtype=float)
        if T.shape != (self.dim, self.dim):
            raise ShapeError(f"Expected a {self.dim}x{self.dim} endomorphism, got {T.shape}")
        kind = self.kind
        if kind == TRIVIAL_FRAME:
            return Full(T.copy())
        if kind == ORTHONORMAL:
            return Sym(0.5 * (T + self.adjoint(T)))
        if kind == SUBBUNDLE:
            return HomToQuotient(self.quotient_rows() @ T @ self.basis)
        if kind == ADAPTED_ORTHONORMAL:
            Ts = self.adjoint(T)
            return SymPlusHom(0.5 * (T + Ts), 0.5 * self.perp_projector() @ (T - Ts) @ self.basis)
        if kind == UNIT_SECTION and self.form is None:
            return Vector(T @ self.unit)
        if kind in (UNIT_SECTION, ORIENTED_UNIT_VECTOR_3D):
            Ts = self.adjoint(T)
            return SymPlusPerp(0.5 * (T + Ts), 0.5 * (T - Ts) @ self.unit)
        if kind == ALMOST_COMPLEX:
            return AntiCommuting(commutator(T, self.J))
        if kind == UNITARY:
            Ts = self.adjoint(T)
            return SymPlusAntiCommuting(0.5 * (T + Ts), 0.5 * commutator(T - Ts, self.J))
        if kind == PRODUCT:
            slices = self.split
            parts = tuple(child.project(T[s, s]) for child, s in zip(self.children, slices))
            return DirectSum(parts, off_diagonal_blocks(T, slices))
        raise SpecViolation(f"Unknown G-structure kind {kind!r}")

    def zero(self) -> QuotientRepr:
        return self.project(np.zeros((self.dim, self.dim)))

    # Frames of P_x
    def frame_residual(self, p) -> float:
        """
        Distance of a frame p: R^n -> E from P, measured on the defining
        constraints of the kind (max-norm).
        """
        p = np.asarray(p, dtype=float)
        kind = self.kind
        if kind == PRODUCT:
            slices = self.split
            worst = max((float(np.max(np.abs(b))) for b in off_diagonal_blocks(p, slices) if b.size), default=0.0)
            for child, s in zip(self.children, slices):
                worst = max(worst, child.frame_residual(p[s, s]))
            return worst
        model = self.model()
        checks = []
        if kind == TRIVIAL_FRAME:
            checks.append(p - self.frame)
        if model.form is not None and self.form is not None:
            checks.append(p.T @ self.form @ p - model.form)
        if self.basis is not None:
            l = self.basis.shape[1]
            if self.form is not None:
                checks.append(self.perp_projector() @ p[:, :l])
            else:
                checks.append(self.quotient_rows() @ p[:, :l])
        if self.unit is not None:
            checks.append(p[:, 0] - self.unit)
        if self.J is not None:
            checks.append(self.J @ p - p @ model.J)
        worst = max((float(np.max(np.abs(c))) for c in checks), default=0.0)
        if kind == ORIENTED_UNIT_VECTOR_3D and self.orientation * np.linalg.det(p) <= 0:
            worst = max(worst, 1.0)
        return worst

    def model(self) -> "GStructuredSpace":
        """R^n with the standard data of the same kind and indices."""
        if self.kind == PRODUCT:
            return GStructuredSpace.standard(PRODUCT, self.dim, children=[c.model() for c in self.children])
        sub_rank = 0 if self.basis is None else self.basis.shape[1]
        return GStructuredSpace.standard(self.kind, self.dim, index=self.index, sub_rank=sub_rank,
                                         sub_index=self.sub_index, metric=self.form is not None,
                                         orientation=self.orientation)

    def structure_frame(self) -> NDArray[np.float64]:
        """A canonical frame p in P."""
        kind = self.kind
        if kind == TRIVIAL_FRAME:
            return np.array(self.frame, dtype=float)
        if kind == ORTHONORMAL:
            return gram_schmidt(np.eye(self.dim), self.form, self.index)
        if kind == SUBBUNDLE:
            return complete_basis(self.basis)
        if kind == ADAPTED_ORTHONORMAL:
            l = self.basis.shape[1]
            on_f = gram_schmidt(self.basis, self.form, self.sub_index)
            rest = self.perp_projector() @ complete_basis(self.basis)[:, l:]
            return np.column_stack([on_f, gram_schmidt(rest, self.form, self.index - self.sub_index)])
        if kind in (UNIT_SECTION, ORIENTED_UNIT_VECTOR_3D):
            p = complete_basis(self.unit[:, None])
            if self.form is not None:
                p = gram_schmidt(p, self.form, self.index)
            if kind == ORIENTED_UNIT_VECTOR_3D and self.orientation * np.linalg.det(p) < 0:
                p[:, -1] = -p[:, -1]
            return p
        if kind == ALMOST_COMPLEX:
            return complex_frame(self.J)
        if kind == UNITARY:
            return unitary_frame(self.J, self.form, self.index)
        if kind == PRODUCT:
            p = np.zeros((self.dim, self.dim))
            for child, s in zip(self.children, self.split):
                p[s, s] = child.structure_frame()
            return p
        raise SpecViolation(f"Unknown G-structure kind {kind!r}")

    # Lie algebra of G_x
    def sample_algebra(self, rng: np.random.Generator) -> NDArray[np.float64]:
        """Random element of g_x."""
        if self.kind == PRODUCT:
            X = np.zeros((self.dim, self.dim))
            for child, s in zip(self.children, self.split):
                X[s, s] = child.sample_algebra(rng)
            return X
        if self.kind == TRIVIAL_FRAME:
            return np.zeros((self.dim, self.dim))
        return self.algebra_part(rng.normal(size=(self.dim, self.dim)))

    def algebra_part(self, T) -> NDArray[np.float64]:
        """Projection of T onto g, through a structure frame."""
        p = self.structure_frame()
        Y = standard_algebra_part(self.model(), np.linalg.solve(p, T @ p))
        return p @ Y @ np.linalg.inv(p)


def unitary_form(dim: int, index: int) -> NDArray[np.float64]:
    """diag(eta, eta) on the two halves, so that J0 is an isometry."""
    if dim % 2 or index % 2:
        raise ShapeError(f"Unitary structure needs even dimension and index, got ({dim}, {index})")
    half = standard_form(dim // 2, index // 2)
    return np.block([[half, np.zeros_like(half)], [np.zeros_like(half), half]])


def standard_algebra_part(model: GStructuredSpace, T) -> NDArray[np.float64]:
    """Projection of T onto the Lie algebra of a standard structure model."""
    n = model.dim
    kind = model.kind
    Y = np.array(T, dtype=float)
    if kind == TRIVIAL_FRAME:
        return np.zeros((n, n))
    if kind == PRODUCT:
        out = np.zeros((n, n))
        for child, s in zip(model.children, model.split):
            out[s, s] = standard_algebra_part(child, Y[s, s])
        return out
    if model.form is not None:
        Y = 0.5 * (Y - transpose_wrt(model.form, Y))
    if kind == SUBBUNDLE:
        l = model.basis.shape[1]
        Y[l:, :l] = 0.0
    if kind == ADAPTED_ORTHONORMAL:
        l = model.basis.shape[1]
        Y[l:, :l] = 0.0
        Y[:l, l:] = 0.0
    if kind in (UNIT_SECTION, ORIENTED_UNIT_VECTOR_3D):
        Y[:, 0] = 0.0
        if model.form is not None:
            Y[0, :] = 0.0
    if kind in (ALMOST_COMPLEX, UNITARY):
        Y = 0.5 * (Y - model.J @ Y @ model.J)
    return Y


def complex_frame(J) -> NDArray[np.float64]:
    """Frame p with J p = p J0: a complex basis v_1..v_m followed by J v_1..J v_m."""
    dim = J.shape[0]
    chosen = []
    for e in np.eye(dim):
        candidate = chosen + [e]
        spanned = np.column_stack(candidate + [J @ c for c in candidate])
        if np.linalg.matrix_rank(spanned, tol=1e-8) == 2 * len(candidate):
            chosen = candidate
        if 2 * len(chosen) == dim:
            break
    return np.column_stack(chosen + [J @ c for c in chosen])


def unitary_frame(J, form, index: int) -> NDArray[np.float64]:
    """Complex Gram-Schmidt: frame p with J p = p J0 and p^T g p = diag(eta, eta)."""
    dim = J.shape[0]
    done, signs = [], []
    for e in np.eye(dim):
        vec = e.copy()
        for prev, sign in zip(done, signs):
            vec = vec - sign * (prev @ form @ vec) * prev - sign * ((J @ prev) @ form @ vec) * (J @ prev)
        norm = vec @ form @ vec
        if abs(norm) < 1e-8:
            continue
        done.append(vec / np.sqrt(abs(norm)))
        signs.append(1.0 if norm > 0 else -1.0)
        if 2 * len(done) == dim:
            break
    if 2 * len(done) != dim:
        raise DegenerateForm("Could not build a unitary frame")
    order = [j for j, s in enumerate(signs) if s > 0] + [j for j, s in enumerate(signs) if s < 0]
    if sum(1 for s in signs if s < 0) * 2 != index:
        raise DegenerateForm(f"Form is not of index {index} on the complex structure")
    first = [done[j] for j in order]
    return np.column_stack(first + [J @ v for v in first])


# ---------------------------------------------------------
# Field-level G-structure
# ---------------------------------------------------------
@dataclass
class GStructureSpec:
    """
    G-structure on a trivialized rank-k bundle, given by its auxiliary fields.
    """
    kind: str
    rank: int
    frame: Optional[FieldSource] = None
    metric: Optional[MetricField] = None
    subbundle: Optional[FieldSource] = None
    subbundle_index: int = 0
    section: Optional[FieldSource] = None
    complex_structure: Optional[FieldSource] = None
    orientation: int = 1
    children: Tuple["GStructureSpec", ...] = ()

    def __post_init__(self):
        if self.kind not in STRUCTURE_KINDS:
            raise SpecViolation(f"Unknown G-structure kind {self.kind!r}")
        if self.kind == PRODUCT and sum(c.rank for c in self.children) != self.rank:
            raise ShapeError("Product structure ranks do not add up")

    @classmethod
    def trivial_frame(cls, frame: FieldSource) -> "GStructureSpec":
        return cls(TRIVIAL_FRAME, frame.value_shape[0], frame=frame)

    @classmethod
    def orthonormal(cls, metric: MetricField) -> "GStructureSpec":
        return cls(ORTHONORMAL, metric.rank, metric=metric)

    @classmethod
    def subbundle_of(cls, subbundle: FieldSource) -> "GStructureSpec":
        return cls(SUBBUNDLE, subbundle.value_shape[0], subbundle=subbundle)

    @classmethod
    def adapted_orthonormal(cls, metric: MetricField, subbundle: FieldSource, subbundle_index: int = 0):
        return cls(ADAPTED_ORTHONORMAL, metric.rank, metric=metric, subbundle=subbundle,
                   subbundle_index=subbundle_index)

    @classmethod
    def unit_section(cls, section: FieldSource, metric: Optional[MetricField] = None) -> "GStructureSpec":
        return cls(UNIT_SECTION, section.value_shape[0], metric=metric, section=section)

    @classmethod
    def almost_complex(cls, J: FieldSource) -> "GStructureSpec":
        return cls(ALMOST_COMPLEX, J.value_shape[0], complex_structure=J)

    @classmethod
    def unitary(cls, J: FieldSource, metric: MetricField) -> "GStructureSpec":
        return cls(UNITARY, metric.rank, metric=metric, complex_structure=J)

    @classmethod
    def oriented_unit_vector_3d(cls, section: FieldSource, metric: MetricField, orientation: int = 1):
        return cls(ORIENTED_UNIT_VECTOR_3D, 3, metric=metric, section=section, orientation=orientation)

    @classmethod
    def product(cls, children) -> "GStructureSpec":
        children = tuple(children)
        return cls(PRODUCT, sum(c.rank for c in children), children=children)

    @property
    def index(self) -> int:
        if self.kind == PRODUCT:
            return sum(c.index for c in self.children)
        return self.metric.index if self.metric is not None else 0

    def at(self, x) -> GStructuredSpace:
        """The G-structured fibre E_x."""
        if self.kind == PRODUCT:
            return GStructuredSpace(PRODUCT, self.rank, children=tuple(c.at(x) for c in self.children))
        return GStructuredSpace(
            kind=self.kind,
            dim=self.rank,
            form=self.metric.matrix(x) if self.metric is not None else None,
            index=self.index,
            basis=self.subbundle(x) if self.subbundle is not None else None,
            sub_index=self.subbundle_index,
            unit=self.section(x) if self.section is not None else None,
            J=self.complex_structure(x) if self.complex_structure is not None else None,
            frame=self.frame(x) if self.frame is not None else None,
            orientation=self.orientation,
        )

    def validate(self, points) -> None:
        for x in points:
            self.at(x).validate()
        logger.debug(f"G-structure {self.kind} validated at {len(points)} points")


def quotient_project(spec: GStructureSpec, T, x) -> QuotientRepr:
    """
    Class of T in gl(E_x)/g_x; projecting any element of g_x yields zero.
    """
    space = spec.at(x).validate()
    return space.project(T)


def _block_connection(conn: ConnectionField, s: slice) -> ConnectionField:
    source = conn.christoffel
    rank = s.stop - s.start
    view = ClosedForm(lambda x: source(x)[:, s, s], source.dim, (source.dim, rank, rank),
                      domain=source.domain, fd_step=getattr(source, "fd_step", None), name="block")
    return ConnectionField(rank, view)


def inner_torsion(spec: GStructureSpec, conn: ConnectionField, x, v) -> QuotientRepr:
    """
    Inner torsion of the G-structure at x along v, from the covariant derivatives
    of its auxiliary fields. With D = g^-1 nabla_v g:
    orthonormal (-D/2), subbundle q(nabla_v B), adapted (-D/2, q(nabla_v B) + q D B / 2),
    unit section nabla_v eps or (-D/2, nabla_v eps + D eps / 2), almost complex
    nabla_v J, unitary (-D/2, nabla_v J + [D, J] / 2).
    """
    space = spec.at(x).validate()
    kind = spec.kind
    v = np.asarray(v, dtype=float)
    if kind == PRODUCT:
        slices = space.split
        parts = tuple(inner_torsion(child, _block_connection(conn, s), x, v)
                      for child, s in zip(spec.children, slices))
        return DirectSum(parts, off_diagonal_blocks(conn.along(x, v), slices))
    if kind == TRIVIAL_FRAME:
        gamma_s = christoffel_of_frame(conn, spec.frame, x)
        return Full(np.tensordot(v, gamma_s, axes=(0, 0)))

    D = None
    if space.form is not None:
        D = np.linalg.solve(space.form, covariant_metric(conn, spec.metric, x, v))
    if kind == ORTHONORMAL:
        return Sym(-0.5 * D)
    if kind == SUBBUNDLE:
        return HomToQuotient(space.quotient_rows() @ covariant_section(conn, spec.subbundle, x, v))
    if kind == ADAPTED_ORTHONORMAL:
        q = space.perp_projector()
        hom = q @ covariant_section(conn, spec.subbundle, x, v) + 0.5 * q @ D @ space.basis
        return SymPlusHom(-0.5 * D, hom)
    if kind in (UNIT_SECTION, ORIENTED_UNIT_VECTOR_3D):
        d_eps = covariant_section(conn, spec.section, x, v)
        if D is None:
            return Vector(d_eps)
        return SymPlusPerp(-0.5 * D, d_eps + 0.5 * D @ space.unit)
    if kind == ALMOST_COMPLEX:
        return AntiCommuting(covariant_endomorphism(conn, spec.complex_structure, x, v))
    if kind == UNITARY:
        dJ = covariant_endomorphism(conn, spec.complex_structure, x, v)
        return SymPlusAntiCommuting(-0.5 * D, dJ + 0.5 * commutator(D, space.J))
    raise SpecViolation(f"Unknown G-structure kind {kind!r}")
