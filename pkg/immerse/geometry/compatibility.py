"""
Compatibility equations of an immersion problem, evaluated pointwise.

The left-hand sides use the characteristic tensors of the target transported
to the Whitney sum E-hat_x = T_xM + E0_x with its G-structure, so every
residual is computable before any immersion exists. Right-hand sides come
from the components (nabla, nabla0, alpha0, A0) of the problem data.

Stacks are kept per pair of coordinate vectors: family[i, j] is the map
(u or e) -> residual for v = d_i, w = d_j.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from immerse.geometry import settings
from immerse.geometry.chart_manifold import (
    ChartGrid,
    ClosedForm,
    ConnectionField,
    FieldSource,
    MetricField,
    WhitneyData,
    assemble_whitney,
    fields_domain,
    fields_fd_step,
)
from immerse.geometry.errors import ShapeError, SpecViolation
from immerse.geometry.g_structure import GStructureSpec, QuotientRepr, inner_torsion
from immerse.geometry.homogeneous_models import ModelSpace, characteristic_tensors
from immerse.geometry.tensor_core import Bilinear, commutator, transpose_wrt

logger = logging.getLogger(__name__)

# ---------------------------------------------------------
# Equation families
# ---------------------------------------------------------
GAUSS = "gauss"
CODAZZI_ALPHA = "codazzi_alpha"
CODAZZI_WEINGARTEN = "codazzi_weingarten"
RICCI = "ricci"
TORSION_TANGENT = "torsion_tangent"
TORSION_NORMAL = "torsion_normal"
INNER_TORSION = "inner_torsion"

FAMILIES = (GAUSS, CODAZZI_ALPHA, CODAZZI_WEINGARTEN, RICCI, TORSION_TANGENT, TORSION_NORMAL, INNER_TORSION)
METRIC_FAMILIES = ("gauss_metric", "codazzi_metric", "ricci_metric")

CHECK_MARGIN = 2


# ---------------------------------------------------------
# Weingarten form
# ---------------------------------------------------------
def weingarten_from_alpha(g: MetricField, g0: MetricField, alpha0: FieldSource, x) -> NDArray[np.float64]:
    """
    A0_x from g0(alpha0(v, w), e) = -g(A0(e) v, w).

    Returns:
        Array of shape (n, n, k) with out[:, j, a] = A0(e_a) d_j
    """
    g_inv = Bilinear(g.matrix(x)).inverse()
    g0_x = Bilinear(g0.matrix(x)).entries
    alpha = alpha0(x)
    return -np.einsum("lj,bc,bij->lic", g_inv, g0_x, alpha)


def weingarten_field(g: MetricField, g0: MetricField, alpha0: FieldSource) -> ClosedForm:
    """weingarten_from_alpha as a field, for assembling WhitneyData."""
    n, k = g.rank, g0.rank
    return ClosedForm(lambda x: weingarten_from_alpha(g, g0, alpha0, x), n, (n, n, k),
                      domain=fields_domain(g.source, g0.source, alpha0),
                      fd_step=fields_fd_step(g.source, g0.source, alpha0), name="weingarten")


def _curvature_stack(gamma, dgamma) -> NDArray[np.float64]:
    """R(d_i, d_j) = d_i Gamma_j - d_j Gamma_i + [Gamma_i, Gamma_j] for every pair."""
    n = gamma.shape[0]
    rank = gamma.shape[1]
    out = np.zeros((n, n, rank, rank))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = dgamma[i][j] - dgamma[j][i] + commutator(gamma[i], gamma[j])
            out[j, i] = -out[i, j]
    return out


def _check_dimensions(model: ModelSpace, data: WhitneyData, spec: GStructureSpec) -> None:
    if data.n + data.k != model.dim:
        raise ShapeError(f"n + k = {data.n} + {data.k} does not match the target dimension {model.dim}")
    if spec.rank != model.dim:
        raise ShapeError(f"G-structure on E-hat has rank {spec.rank}, target dimension is {model.dim}")


# ---------------------------------------------------------
# Per-node quantities
# ---------------------------------------------------------
class NodeQuantities:
    """
    Everything the compatibility equations need at one point x: component
    matrices, their coordinate derivatives, intrinsic curvatures and the
    target tensors on E-hat_x. Residual stacks are computed once per node.
    """

    def __init__(self, model: ModelSpace, data: WhitneyData, spec: GStructureSpec, x,
                 conn_hat: Optional[ConnectionField] = None):
        _check_dimensions(model, data, spec)
        self.model = model
        self.data = data
        self.spec = spec
        self.x = np.asarray(x, dtype=float)
        self.n, self.k = data.n, data.k
        self._conn_hat = conn_hat

        n = self.n
        x = self.x
        self.gamma = data.tangent_conn.at(x)
        self.gamma0 = data.normal_conn.at(x)
        # matrices alpha(d_i, .) : TM -> E0 and A0(d_i, .) : E0 -> TM
        self.alpha = np.transpose(data.alpha0(x), (1, 0, 2))
        self.weingarten = np.transpose(data.a0(x), (1, 0, 2))
        self.d_alpha = np.transpose(data.alpha0.gradient(x), (0, 2, 1, 3))
        self.d_weingarten = np.transpose(data.a0.gradient(x), (0, 2, 1, 3))
        self.R = _curvature_stack(self.gamma, data.tangent_conn.christoffel.gradient(x))
        self.R0 = _curvature_stack(self.gamma0, data.normal_conn.christoffel.gradient(x))
        self.torsion = np.stack([np.stack([self.gamma[i][:, j] - self.gamma[j][:, i] for j in range(n)])
                                 for i in range(n)])

        self.space = spec.at(x)
        self.tensors = characteristic_tensors(model, self.space)
        self.target_curvature = self.tensors.stacks.curvature[:n, :n]
        self.target_torsion = self.tensors.stacks.torsion[:n, :n]
        self.terms = self._right_hand_sides()

    def _right_hand_sides(self) -> Dict[str, NDArray[np.float64]]:
        n, k = self.n, self.k
        G, G0 = self.gamma, self.gamma0
        al, A = self.alpha, self.weingarten
        d_al, d_A = self.d_alpha, self.d_weingarten
        gauss = np.zeros((n, n, n, n))
        codazzi_alpha = np.zeros((n, n, k, n))
        codazzi_weingarten = np.zeros((n, n, n, k))
        ricci = np.zeros((n, n, k, k))
        torsion_normal = np.zeros((n, n, k))
        for i in range(n):
            for j in range(n):
                gauss[i, j] = self.R[i, j] + A[i] @ al[j] - A[j] @ al[i]
                codazzi_alpha[i, j] = (d_al[i][j] - d_al[j][i] + G0[i] @ al[j] - G0[j] @ al[i]
                                       + al[i] @ G[j] - al[j] @ G[i])
                codazzi_weingarten[i, j] = (d_A[i][j] - d_A[j][i] + G[i] @ A[j] - G[j] @ A[i]
                                            + A[i] @ G0[j] - A[j] @ G0[i])
                ricci[i, j] = self.R0[i, j] + al[i] @ A[j] - al[j] @ A[i]
                torsion_normal[i, j] = al[i][:, j] - al[j][:, i]
        return {
            GAUSS: gauss,
            CODAZZI_ALPHA: codazzi_alpha,
            CODAZZI_WEINGARTEN: codazzi_weingarten,
            RICCI: ricci,
            TORSION_TANGENT: self.torsion,
            TORSION_NORMAL: torsion_normal,
        }

    # Residual stacks
    @cached_property
    def stacks(self) -> Dict[str, NDArray[np.float64]]:
        n = self.n
        Rb, Tb = self.target_curvature, self.target_torsion
        return {
            GAUSS: Rb[:, :, :n, :n] - self.terms[GAUSS],
            CODAZZI_ALPHA: Rb[:, :, n:, :n] - self.terms[CODAZZI_ALPHA],
            CODAZZI_WEINGARTEN: Rb[:, :, :n, n:] - self.terms[CODAZZI_WEINGARTEN],
            RICCI: Rb[:, :, n:, n:] - self.terms[RICCI],
            TORSION_TANGENT: Tb[:, :, :n] - self.terms[TORSION_TANGENT],
            TORSION_NORMAL: Tb[:, :, n:] - self.terms[TORSION_NORMAL],
        }

    @property
    def conn_hat(self) -> ConnectionField:
        if self._conn_hat is None:
            self._conn_hat = assemble_whitney(self.data)
        return self._conn_hat

    @cached_property
    def inner_stack(self) -> List[QuotientRepr]:
        """Inner torsion residual along each coordinate vector."""
        out = []
        for e in np.eye(self.n):
            iota_e = np.concatenate([e, np.zeros(self.k)])
            out.append(self.tensors.inner(iota_e) - inner_torsion(self.spec, self.conn_hat, self.x, e))
        return out

    def _metrics(self) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        if not self.data.isometric:
            raise SpecViolation("Metric forms of the compatibility equations need g and g0")
        return self.data.g.matrix(self.x), self.data.g0.matrix(self.x)

    # Evaluation on vectors
    def gauss(self, v, w, u, z=None):
        vec = np.einsum("i,j,ijab,b->a", v, w, self.stacks[GAUSS], u)
        if z is None:
            return vec
        g, g0 = self._metrics()
        av, aw = self.alpha_of(v), self.alpha_of(w)
        lhs = z @ g @ (np.einsum("i,j,ijab,b->a", v, w, self.target_curvature[:, :, :self.n, :self.n], u))
        rhs = (z @ g @ np.einsum("i,j,ijab,b->a", v, w, self.R, u)
               - (aw @ u) @ g0 @ (av @ z) + (av @ u) @ g0 @ (aw @ z))
        return float(lhs - rhs)

    def codazzi_alpha(self, v, w, u, e=None):
        vec = np.einsum("i,j,ijab,b->a", v, w, self.stacks[CODAZZI_ALPHA], u)
        if e is None:
            return vec
        _, g0 = self._metrics()
        torsion_term = self.alpha_of(np.einsum("i,j,ijk->k", v, w, self.torsion)) @ u
        return float(e @ g0 @ (vec + torsion_term))

    def codazzi_weingarten(self, v, w, e):
        return np.einsum("i,j,ijab,b->a", v, w, self.stacks[CODAZZI_WEINGARTEN], e)

    def ricci(self, v, w, e, e_prime=None):
        vec = np.einsum("i,j,ijab,b->a", v, w, self.stacks[RICCI], e)
        if e_prime is None:
            return vec
        g, g0 = self._metrics()
        Rb = np.einsum("i,j,ijab->ab", v, w, self.target_curvature[:, :, self.n:, self.n:])
        R0 = np.einsum("i,j,ijab->ab", v, w, self.R0)
        Ae, Ae_prime = self.weingarten_of(e), self.weingarten_of(e_prime)
        rhs = (e_prime @ g0 @ (R0 @ e) + (Ae @ v) @ g @ (transpose_wrt(g, Ae_prime) @ w)
               - (Ae @ w) @ g @ (Ae_prime @ v))
        return float(e_prime @ g0 @ (Rb @ e) - rhs)

    def torsion_residuals(self, v, w) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        tangent = np.einsum("i,j,ijk->k", v, w, self.stacks[TORSION_TANGENT])
        normal = np.einsum("i,j,ijk->k", v, w, self.stacks[TORSION_NORMAL])
        return tangent, normal

    def inner_torsion(self, v) -> QuotientRepr:
        out = self.inner_stack[0].scale(v[0])
        for coefficient, part in zip(v[1:], self.inner_stack[1:]):
            out = out + part.scale(coefficient)
        return out

    def alpha_of(self, v) -> NDArray[np.float64]:
        """alpha0(v, .) as a k x n matrix."""
        return np.tensordot(v, self.alpha, axes=(0, 0))

    def weingarten_of(self, e) -> NDArray[np.float64]:
        """A0(e) as an n x n matrix."""
        return np.tensordot(self.weingarten, e, axes=(2, 0)).T


# ---------------------------------------------------------
# Pointwise residuals
# ---------------------------------------------------------
def _vec(values, dim: int) -> NDArray[np.float64]:
    out = np.asarray(values, dtype=float).reshape(-1)
    if out.shape[0] != dim:
        raise ShapeError(f"Expected a vector of length {dim}, got {out.shape[0]}")
    return out


def gauss_residual(model: ModelSpace, data: WhitneyData, spec: GStructureSpec, x, v, w, u, z=None):
    """
    pi_TM(R_Z(v, w) u) - [R(v, w) u + A0(v, alpha0(w, u)) - A0(w, alpha0(v, u))], or with z
    the metric form g-hat(R_Z(v, w) u, z) - g(R(v, w) u, z) + g0(alpha0(w, u), alpha0(v, z))
    - g0(alpha0(v, u), alpha0(w, z)).
    """
    n = data.n
    q = NodeQuantities(model, data, spec, x)
    return q.gauss(_vec(v, n), _vec(w, n), _vec(u, n), None if z is None else _vec(z, n))


def codazzi_residual(model: ModelSpace, data: WhitneyData, spec: GStructureSpec, x, v, w, u, e=None):
    """
    pi_E0(R_Z(v, w) u) - [(D alpha0)(v, w, u) - (D alpha0)(w, v, u) + alpha0(T(v, w), u)];
    with e, the metric form paired through g0.
    """
    n, k = data.n, data.k
    q = NodeQuantities(model, data, spec, x)
    return q.codazzi_alpha(_vec(v, n), _vec(w, n), _vec(u, n), None if e is None else _vec(e, k))


def codazzi_weingarten_residual(model: ModelSpace, data: WhitneyData, spec: GStructureSpec, x, v, w, e):
    """pi_TM(R_Z(v, w) e) - [(D A0)(v, w, e) - (D A0)(w, v, e) + A0(T(v, w), e)]."""
    n, k = data.n, data.k
    q = NodeQuantities(model, data, spec, x)
    return q.codazzi_weingarten(_vec(v, n), _vec(w, n), _vec(e, k))


def ricci_residual(model: ModelSpace, data: WhitneyData, spec: GStructureSpec, x, v, w, e, e_prime=None):
    """
    pi_E0(R_Z(v, w) e) - [R0(v, w) e + alpha0(v, A0(w, e)) - alpha0(w, A0(v, e))], or with e'
    the metric form g-hat(R_Z(v, w) e, e') - g0(R0(v, w) e, e') - g(A0(e) v, A0(e')* w)
    + g(A0(e) w, A0(e') v).
    """
    n, k = data.n, data.k
    q = NodeQuantities(model, data, spec, x)
    return q.ricci(_vec(v, n), _vec(w, n), _vec(e, k), None if e_prime is None else _vec(e_prime, k))


def torsion_residuals(model: ModelSpace, data: WhitneyData, spec: GStructureSpec, x, v, w):
    """
    (pi_TM(T_Z(v, w)) - T(v, w), pi_E0(T_Z(v, w)) - alpha0(v, w) + alpha0(w, v)).
    """
    n = data.n
    q = NodeQuantities(model, data, spec, x)
    return q.torsion_residuals(_vec(v, n), _vec(w, n))


def inner_torsion_residual(model: ModelSpace, data: WhitneyData, spec: GStructureSpec, x, v,
                           conn_hat: Optional[ConnectionField] = None) -> QuotientRepr:
    """Target inner torsion on E-hat_x along v minus the inner torsion of the structure under nabla-hat."""
    n = data.n
    q = NodeQuantities(model, data, spec, x, conn_hat=conn_hat)
    return q.inner_torsion(_vec(v, n))


# ---------------------------------------------------------
# Report
# ---------------------------------------------------------
@dataclass
class FamilyResidual:
    """Max-norm and RMS of one equation family over all sampled tuples."""
    name: str
    max_norm: float = 0.0
    rms: float = 0.0
    worst_point: Optional[Tuple[float, ...]] = None
    samples: int = 0
    sum_squares: float = field(default=0.0, repr=False)

    def add(self, x, norms) -> None:
        norms = np.asarray(norms, dtype=float).reshape(-1)
        if norms.size == 0:
            return
        top = float(np.max(norms))
        if self.worst_point is None or top > self.max_norm:
            self.max_norm = top
            self.worst_point = tuple(float(c) for c in x)
        self.sum_squares += float(np.sum(norms ** 2))
        self.samples += int(norms.size)
        self.rms = float(np.sqrt(self.sum_squares / self.samples))

    def merge(self, other: "FamilyResidual") -> "FamilyResidual":
        out = FamilyResidual(self.name)
        for part in (self, other):
            if part.samples == 0:
                continue
            if out.worst_point is None or part.max_norm > out.max_norm:
                out.max_norm = part.max_norm
                out.worst_point = part.worst_point
            out.sum_squares += part.sum_squares
            out.samples += part.samples
        if out.samples:
            out.rms = float(np.sqrt(out.sum_squares / out.samples))
        return out

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_norm": self.max_norm,
            "rms": self.rms,
            "worst_point": None if self.worst_point is None else list(self.worst_point),
            "samples": self.samples,
        }


@dataclass
class ResidualReport:
    """Residuals of every equation family over a grid."""
    families: Dict[str, FamilyResidual]
    metric_forms: Dict[str, FamilyResidual]
    nodes: int
    seed: int
    samples_per_node: int

    @property
    def sample_count(self) -> int:
        return sum(f.samples for f in self.families.values())

    def worst(self) -> FamilyResidual:
        return max(self.families.values(), key=lambda f: f.max_norm)

    def violated(self, tol: float = None) -> List[str]:
        """Names of the families (affine and metric) whose max-norm exceeds tol."""
        tol = settings.CHECK_TOL if tol is None else tol
        every = list(self.families.values()) + list(self.metric_forms.values())
        return [f.name for f in every if f.max_norm > tol]

    def passed(self, tol: float = None) -> bool:
        return not self.violated(tol)

    def merge(self, other: "ResidualReport") -> "ResidualReport":
        return ResidualReport(
            {name: f.merge(other.families[name]) for name, f in self.families.items()},
            {name: f.merge(other.metric_forms[name]) for name, f in self.metric_forms.items()},
            self.nodes + other.nodes,
            self.seed,
            self.samples_per_node,
        )

    def to_frame(self) -> pd.DataFrame:
        rows = [dict(f.to_dict(), form="affine") for f in self.families.values()]
        rows += [dict(f.to_dict(), form="metric") for f in self.metric_forms.values()]
        return pd.DataFrame(rows, columns=["name", "form", "max_norm", "rms", "samples", "worst_point"])

    def to_dict(self) -> dict:
        return {
            "families": {name: f.to_dict() for name, f in self.families.items()},
            "metric_forms": {name: f.to_dict() for name, f in self.metric_forms.items()},
            "nodes": self.nodes,
            "seed": self.seed,
            "samples_per_node": self.samples_per_node,
            "sample_count": self.sample_count,
        }


def _unit(rng: np.random.Generator, dim: int) -> NDArray[np.float64]:
    v = rng.normal(size=dim)
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v


def _row_norms(stack, axis: int = 2) -> NDArray[np.float64]:
    """Max-norm over the trailing output axis of every basis tuple of a stack."""
    stack = np.asarray(stack)
    if stack.size == 0:
        return np.zeros(0)
    moved = np.moveaxis(stack, axis, -1)
    return np.max(np.abs(moved), axis=-1).reshape(-1)


def _flatten(parts) -> NDArray[np.float64]:
    if not parts:
        return np.zeros(0)
    return np.concatenate([np.asarray(p, dtype=float).reshape(-1) for p in parts])


def _node_residuals(q: NodeQuantities, rng: np.random.Generator, samples: int, metric: bool):
    """Norms of every family at one node: basis tuples first, then random tuples."""
    n, k = q.n, q.k
    s = q.stacks
    out = {
        GAUSS: [_row_norms(s[GAUSS])],
        CODAZZI_ALPHA: [_row_norms(s[CODAZZI_ALPHA])],
        CODAZZI_WEINGARTEN: [_row_norms(s[CODAZZI_WEINGARTEN])],
        RICCI: [_row_norms(s[RICCI])],
        TORSION_TANGENT: [_row_norms(s[TORSION_TANGENT])],
        TORSION_NORMAL: [_row_norms(s[TORSION_NORMAL])],
        INNER_TORSION: [np.array([part.norm() for part in q.inner_stack])],
    }
    metric_out = {name: [] for name in METRIC_FAMILIES}

    def vmax(a):
        a = np.asarray(a)
        return float(np.max(np.abs(a))) if a.size else 0.0

    for _ in range(samples):
        v, w, u, z = (_unit(rng, n) for _ in range(4))
        e, e_prime = _unit(rng, k), _unit(rng, k)
        out[GAUSS].append([vmax(q.gauss(v, w, u))])
        out[CODAZZI_ALPHA].append([vmax(q.codazzi_alpha(v, w, u))])
        out[CODAZZI_WEINGARTEN].append([vmax(q.codazzi_weingarten(v, w, e))])
        out[RICCI].append([vmax(q.ricci(v, w, e))])
        tangent, normal = q.torsion_residuals(v, w)
        out[TORSION_TANGENT].append([vmax(tangent)])
        out[TORSION_NORMAL].append([vmax(normal)])
        out[INNER_TORSION].append([q.inner_torsion(v).norm()])
        if metric:
            metric_out["gauss_metric"].append([abs(q.gauss(v, w, u, z))])
            if k:
                metric_out["codazzi_metric"].append([abs(q.codazzi_alpha(v, w, u, e))])
                metric_out["ricci_metric"].append([abs(q.ricci(v, w, e, e_prime))])
    return ({name: _flatten(parts) for name, parts in out.items()},
            {name: _flatten(parts) for name, parts in metric_out.items()})


def full_report(model: ModelSpace, data: WhitneyData, spec: GStructureSpec, grid: ChartGrid,
                samples_per_node: int = None, seed: int = None, margin: int = CHECK_MARGIN,
                stride: int = 1) -> ResidualReport:
    """
    Residuals of all seven equation families (and the metric forms when g and
    g0 are given) over the interior nodes of the grid: basis tuples plus
    seeded random unit tuples at every node. stride > 1 visits every
    stride-th interior node along each axis.
    """
    samples_per_node = settings.SAMPLES_PER_NODE if samples_per_node is None else int(samples_per_node)
    seed = settings.DEFAULT_SEED if seed is None else int(seed)
    _check_dimensions(model, data, spec)
    if grid.dim != data.n:
        raise ShapeError(f"Grid has {grid.dim} axes, chart dimension is {data.n}")
    rng = np.random.default_rng(seed)
    conn_hat = assemble_whitney(data)
    families = {name: FamilyResidual(name) for name in FAMILIES}
    metric_forms = {name: FamilyResidual(name) for name in METRIC_FAMILIES} if data.isometric else {}
    indices = grid.interior_indices(margin)
    if not indices:
        indices = grid.interior_indices(1)
    if stride > 1:
        first = indices[0]
        indices = [ix for ix in indices if all((a - b) % stride == 0 for a, b in zip(ix, first))]
    for index in indices:
        x = grid.node(index)
        q = NodeQuantities(model, data, spec, x, conn_hat=conn_hat)
        norms, metric_norms = _node_residuals(q, rng, samples_per_node, data.isometric)
        for name, values in norms.items():
            families[name].add(x, values)
        for name, values in metric_norms.items():
            metric_forms[name].add(x, values)
    report = ResidualReport(families, metric_forms, len(indices), seed, samples_per_node)
    worst = report.worst()
    logger.debug(f"Compatibility over {len(indices)} nodes: worst family {worst.name} "
                 f"({worst.max_norm:.3e} at {worst.worst_point})")
    return report
