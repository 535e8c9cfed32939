"""
Source-side geometry on a sampled rectangular chart: fields, connections,
curvature, iota-torsion, Christoffel tensors relative to frames and the
Whitney-sum connection on TM + E0.

Connections are stored as stacks of shape (n, k, k) where stack[i] is the
endomorphism Gamma(d_i) of the fibre, so that Gamma[i][a, b] = Gamma^a_{ib}
and the covariant derivative reads nabla_v s = ds(v) + Gamma(v) s.
"""
import itertools
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.interpolate import RegularGridInterpolator

from immerse.geometry import settings
from immerse.geometry.errors import DegenerateForm, OutOfDomain, ShapeError, SpecViolation
from immerse.geometry.tensor_core import Bilinear, as_vector, commutator, contract, require_invertible

logger = logging.getLogger(__name__)

ChristoffelValue = NDArray[np.float64]

# ---------------------------------------------------------
# Chart
# ---------------------------------------------------------
BOUNDARY_SLACK = 1e-12

# (offset, weight) pairs, weights over 12h for the five-point stencils
CENTRAL_STENCIL = ((2, -1.0), (1, 8.0), (-1, -8.0), (-2, 1.0))
FORWARD_STENCIL = ((0, -25.0), (1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0))
BACKWARD_STENCIL = tuple((-k, -w) for k, w in FORWARD_STENCIL)


@dataclass(frozen=True)
class Box:
    """Closed coordinate box [lo, hi]."""
    lo: NDArray[np.float64]
    hi: NDArray[np.float64]

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        slack = BOUNDARY_SLACK * (1.0 + np.abs(self.hi - self.lo))
        return bool(np.all(x >= self.lo - slack) and np.all(x <= self.hi + slack))

    def intersect(self, other: Optional["Box"]) -> "Box":
        if other is None:
            return self
        return Box(np.maximum(self.lo, other.lo), np.minimum(self.hi, other.hi))


@dataclass(frozen=True)
class ChartGrid:
    """
    Rectangular sampled coordinate domain U carrying all source-side fields.
    """
    coord_min: NDArray[np.float64]
    coord_max: NDArray[np.float64]
    samples_per_axis: Tuple[int, ...]

    def __post_init__(self):
        lo = as_vector(self.coord_min)
        hi = as_vector(self.coord_max, lo.shape[0])
        samples = tuple(int(s) for s in self.samples_per_axis)
        if len(samples) != lo.shape[0]:
            raise ShapeError(f"Chart has {lo.shape[0]} axes but {len(samples)} sample counts")
        if any(s < 3 for s in samples):
            raise ShapeError(f"Each axis needs at least 3 samples, got {samples}")
        if np.any(hi <= lo):
            raise ShapeError("coord_max must exceed coord_min on every axis")
        object.__setattr__(self, "coord_min", lo)
        object.__setattr__(self, "coord_max", hi)
        object.__setattr__(self, "samples_per_axis", samples)

    @property
    def dim(self) -> int:
        return self.coord_min.shape[0]

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.samples_per_axis

    @property
    def spacing(self) -> NDArray[np.float64]:
        return (self.coord_max - self.coord_min) / (np.asarray(self.samples_per_axis) - 1)

    @property
    def box(self) -> Box:
        return Box(self.coord_min, self.coord_max)

    @property
    def axes(self):
        return [np.linspace(lo, hi, s) for lo, hi, s in zip(self.coord_min, self.coord_max, self.samples_per_axis)]

    @property
    def fd_step(self) -> float:
        """Step for finite differences of closed-form fields: max(FD_FLOOR, h/100)."""
        return max(settings.FD_FLOOR, settings.FD_FRACTION * float(np.min(self.spacing)))

    def node(self, index) -> NDArray[np.float64]:
        index = np.asarray(index)
        if np.any(index < 0) or np.any(index >= np.asarray(self.shape)):
            raise OutOfDomain(f"Node index {tuple(index)} outside grid of shape {self.shape}")
        return self.coord_min + index * self.spacing

    def nodes(self) -> NDArray[np.float64]:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def contains(self, x) -> bool:
        return self.box.contains(x)

    def interior_indices(self, margin: int = 1):
        """Node indices at least `margin` nodes away from the boundary."""
        return list(itertools.product(*[range(margin, s - margin) for s in self.shape]))

    def refined(self, factor: int = 2) -> "ChartGrid":
        samples = tuple((s - 1) * factor + 1 for s in self.samples_per_axis)
        return ChartGrid(self.coord_min, self.coord_max, samples)


# ---------------------------------------------------------
# Field sources
# ---------------------------------------------------------
class FieldSource(ABC):
    """
    Tensor-valued field on a coordinate domain with first derivatives.
    """
    dim: int
    value_shape: Tuple[int, ...]
    domain: Optional[Box]

    @abstractmethod
    def _evaluate(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        ...

    @abstractmethod
    def partial(self, x, axis: int) -> NDArray[np.float64]:
        """Coordinate derivative along `axis`."""

    def _require_inside(self, x) -> NDArray[np.float64]:
        x = as_vector(x, self.dim)
        if self.domain is not None and not self.domain.contains(x):
            raise OutOfDomain(f"Point {x} outside the field domain [{self.domain.lo}, {self.domain.hi}]")
        return x

    def __call__(self, x) -> NDArray[np.float64]:
        x = self._require_inside(x)
        value = np.asarray(self._evaluate(x), dtype=float)
        if value.shape != self.value_shape:
            raise ShapeError(f"Field returned shape {value.shape}, expected {self.value_shape}")
        return value

    def gradient(self, x) -> NDArray[np.float64]:
        return np.stack([self.partial(x, i) for i in range(self.dim)])

    def directional(self, x, v) -> NDArray[np.float64]:
        return contract(self.gradient(x), v)


class ClosedForm(FieldSource):
    """
    Field given by a deterministic coordinate-function evaluator. Derivatives
    use the fourth-order five-point central stencil with step fd_step, switching
    to the one-sided five-point stencil where the central one leaves the domain.
    """

    def __init__(self, evaluator: Callable, dim: int, value_shape: Tuple[int, ...],
                 domain: Optional[Box] = None, fd_step: Optional[float] = None, name: str = ""):
        self.evaluator = evaluator
        self.dim = int(dim)
        self.value_shape = tuple(value_shape)
        self.domain = domain
        self.fd_step = float(fd_step) if fd_step is not None else settings.FD_FLOOR
        self.name = name

    @classmethod
    def constant(cls, value, dim: int, domain: Optional[Box] = None, name: str = "") -> "ClosedForm":
        value = np.array(value, dtype=float)
        value.setflags(write=False)
        return cls(lambda x: value, dim, value.shape, domain=domain, name=name)

    def _evaluate(self, x):
        return self.evaluator(x)

    def partial(self, x, axis: int) -> NDArray[np.float64]:
        x = self._require_inside(x)
        h = self.fd_step
        e = np.zeros(self.dim)
        e[axis] = h
        stencil = self._stencil(x, e, axis)
        return sum(w * self(x + k * e) for k, w in stencil) / (12.0 * h)

    def _stencil(self, x, e, axis: int):
        if self.domain is None:
            return CENTRAL_STENCIL
        for stencil in (CENTRAL_STENCIL, FORWARD_STENCIL, BACKWARD_STENCIL):
            if all(self.domain.contains(x + k * e) for k, _ in stencil):
                return stencil
        raise OutOfDomain(f"No stencil of step {self.fd_step} along axis {axis} fits the domain at {x}")

    def __repr__(self):
        return f"ClosedForm(name={self.name!r}, value_shape={self.value_shape})"


class GridSampled(FieldSource):
    """
    Field given by per-node values, interpolated with order 1 (linear) or 3 (cubic).
    Derivatives use the grid's own central stencil, one-sided at the edges.
    """

    def __init__(self, grid: ChartGrid, values, order: int = 3, name: str = ""):
        values = np.asarray(values, dtype=float)
        if values.shape[:grid.dim] != grid.shape:
            raise ShapeError(f"Sampled values of shape {values.shape} do not match grid {grid.shape}")
        if order not in (1, 3):
            raise ShapeError(f"Interpolation order must be 1 or 3, got {order}")
        if order == 3 and min(grid.shape) < 4:
            raise ShapeError("Cubic interpolation needs at least 4 samples per axis")
        if not np.all(np.isfinite(values)):
            raise ShapeError(f"Sampled field {name!r} has non-finite values")
        self.grid = grid
        self.dim = grid.dim
        self.values = values
        self.value_shape = values.shape[grid.dim:]
        self.order = order
        self.domain = grid.box
        self.name = name
        flat = values.reshape(grid.shape + (-1,))
        self._interpolator = RegularGridInterpolator(
            grid.axes, flat, method="linear" if order == 1 else "cubic", bounds_error=False, fill_value=None
        )

    def _evaluate(self, x):
        x = np.clip(x, self.grid.coord_min, self.grid.coord_max)
        return self._interpolator(x[None, :])[0].reshape(self.value_shape)

    def partial(self, x, axis: int) -> NDArray[np.float64]:
        x = self._require_inside(x)
        h = float(self.grid.spacing[axis])
        e = np.zeros(self.dim)
        e[axis] = h
        if self.domain.contains(x + e) and self.domain.contains(x - e):
            return (self(x + e) - self(x - e)) / (2.0 * h)
        if not self.domain.contains(x + e):
            e = -e
        # second-order one-sided, signed by the direction of e
        return (-3.0 * self(x) + 4.0 * self(x + e) - self(x + 2.0 * e)) / (2.0 * float(e[axis]))


def fields_domain(*sources: Optional[FieldSource]) -> Optional[Box]:
    domain = None
    for source in sources:
        if source is None or source.domain is None:
            continue
        domain = source.domain if domain is None else domain.intersect(source.domain)
    return domain


def fields_fd_step(*sources: Optional[FieldSource]) -> float:
    steps = [s.fd_step for s in sources if isinstance(s, ClosedForm)]
    return min(steps) if steps else settings.FD_FLOOR


# ---------------------------------------------------------
# Metrics and connections
# ---------------------------------------------------------
@dataclass(frozen=True)
class MetricField:
    """
    Semi-Riemannian metric (or bundle metric) of declared index.
    """
    source: FieldSource
    index: int = 0

    @property
    def rank(self) -> int:
        return self.source.value_shape[0]

    def matrix(self, x) -> NDArray[np.float64]:
        g = self.source(x)
        if abs(np.linalg.det(g)) < settings.DET_LIMIT:
            raise DegenerateForm(f"Metric degenerate at {x}")
        return 0.5 * (g + g.T)

    def at(self, x) -> Bilinear:
        g = self.matrix(x)
        return Bilinear(g, (self.rank - self.index, self.index))

    def partial(self, x, axis: int) -> NDArray[np.float64]:
        return self.source.partial(x, axis)


@dataclass(frozen=True)
class ConnectionField:
    """
    Connection on a trivialized rank-k bundle over an n-dimensional chart.
    """
    rank: int
    christoffel: FieldSource

    def __post_init__(self):
        expected = (self.christoffel.dim, self.rank, self.rank)
        if self.christoffel.value_shape != expected:
            raise ShapeError(f"Christoffel source has shape {self.christoffel.value_shape}, expected {expected}")

    @property
    def dim(self) -> int:
        return self.christoffel.dim

    def at(self, x) -> ChristoffelValue:
        return self.christoffel(x)

    def along(self, x, v) -> NDArray[np.float64]:
        return contract(self.at(x), v)

    def partial(self, x, axis: int) -> ChristoffelValue:
        return self.christoffel.partial(x, axis)


def levi_civita(metric: MetricField, x) -> ChristoffelValue:
    """
    Coordinate Christoffel symbols of the Levi-Civita connection:
    Gamma^k_ij = 1/2 g^kl (d_i g_lj + d_j g_li - d_l g_ij).

    Returns:
        Stack of shape (n, n, n) with out[i][k, j] = Gamma^k_ij
    """
    source = metric.source
    if isinstance(source, GridSampled) and source.order != 3:
        logger.warning(f"Levi-Civita of a linearly interpolated metric {source.name!r} is only first-order accurate")
    g = metric.matrix(x)
    dg = source.gradient(x)
    S = np.einsum("ilj->ijl", dg) + np.einsum("jli->ijl", dg) - np.einsum("lij->ijl", dg)
    return 0.5 * np.einsum("kl,ijl->ikj", np.linalg.inv(g), S)


def levi_civita_connection(metric: MetricField, fd_step: Optional[float] = None) -> ConnectionField:
    """
    ConnectionField of the Levi-Civita connection of a metric. Curvature then
    differentiates twice, so the outer step should stay well above the inner one.
    """
    n = metric.rank
    outer = fd_step if fd_step is not None else max(1e-3, 100 * fields_fd_step(metric.source))
    source = ClosedForm(lambda x: levi_civita(metric, x), n, (n, n, n),
                        domain=metric.source.domain, fd_step=outer, name="levi_civita")
    return ConnectionField(n, source)


def curvature_tensor(conn: ConnectionField, x, v, w) -> NDArray[np.float64]:
    """
    R(v, w) = sum_{i<j} (v_i w_j - v_j w_i) (d_i Gamma_j - d_j Gamma_i + [Gamma_i, Gamma_j]).
    """
    gamma = conn.at(x)
    dgamma = np.stack([conn.partial(x, i) for i in range(conn.dim)])
    v = as_vector(v, conn.dim)
    w = as_vector(w, conn.dim)
    R = np.zeros((conn.rank, conn.rank))
    for i in range(conn.dim):
        for j in range(i + 1, conn.dim):
            coeff = v[i] * w[j] - v[j] * w[i]
            if coeff == 0.0:
                continue
            R += coeff * (dgamma[i][j] - dgamma[j][i] + commutator(gamma[i], gamma[j]))
    return R


def curvature_block(conn: ConnectionField, x) -> NDArray[np.float64]:
    """All coordinate curvature endomorphisms R(d_i, d_j), shape (n, n, k, k)."""
    eye = np.eye(conn.dim)
    return np.stack([np.stack([curvature_tensor(conn, x, eye[i], eye[j]) for j in range(conn.dim)])
                     for i in range(conn.dim)])


def iota_torsion(conn: ConnectionField, iota: Optional[FieldSource], x, v, w) -> NDArray[np.float64]:
    """
    T(v, w) = nabla_v(iota w) - nabla_w(iota v) - iota[v, w] for constant coordinate
    vectors v, w. iota=None stands for the identity of TM.
    """
    v = as_vector(v, conn.dim)
    w = as_vector(w, conn.dim)
    if iota is None:
        if conn.rank != conn.dim:
            raise ShapeError("Identity iota needs a connection on a bundle of rank n")
        return conn.along(x, v) @ w - conn.along(x, w) @ v
    iota_x = iota(x)
    return iota.directional(x, v) @ w - iota.directional(x, w) @ v \
        + conn.along(x, v) @ iota_x @ w - conn.along(x, w) @ iota_x @ v


def christoffel_of_frame(conn: ConnectionField, frame: FieldSource, x) -> ChristoffelValue:
    """
    Christoffel tensor of a connection relative to a frame section s: the
    difference between the connection and the flat connection making s parallel,
    Gamma^s(v) = Gamma(v) + ds(v) s^-1.

    Returns:
        Stack of shape (n, k, k), one endomorphism of E_x per coordinate vector
    """
    s = require_invertible(frame(x))
    ds = frame.gradient(x)
    gamma = conn.at(x)
    return gamma + np.stack([np.linalg.solve(s.T, ds[i].T).T for i in range(conn.dim)])


def connection_form(conn: ConnectionField, frame: FieldSource, x) -> ChristoffelValue:
    """omega(v) = s^-1 Gamma^s(v) s, the connection form pulled back by the frame."""
    s = require_invertible(frame(x))
    gamma_s = christoffel_of_frame(conn, frame, x)
    return np.stack([np.linalg.solve(s, gamma_s[i] @ s) for i in range(conn.dim)])


# ---------------------------------------------------------
# Whitney sum
# ---------------------------------------------------------
@dataclass
class WhitneyData:
    """
    Data of an affine (or isometric) immersion problem on TM + E0:
    nabla on TM, nabla0 on E0, alpha0 of shape (k, n, n) with alpha0[b, i, j] the
    b-component of alpha0(d_i, d_j), and A0 of shape (n, n, k) with A0[:, j, a]
    the vector A0(e_a) d_j.
    """
    tangent_conn: ConnectionField
    normal_conn: ConnectionField
    alpha0: FieldSource
    a0: FieldSource
    g: Optional[MetricField] = None
    g0: Optional[MetricField] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n, k = self.n, self.k
        if self.tangent_conn.rank != n:
            raise ShapeError(f"Tangent connection has rank {self.tangent_conn.rank}, chart dimension is {n}")
        if self.normal_conn.dim != n:
            raise ShapeError("Normal connection lives on a chart of a different dimension")
        if self.alpha0.value_shape != (k, n, n):
            raise ShapeError(f"alpha0 has shape {self.alpha0.value_shape}, expected {(k, n, n)}")
        if self.a0.value_shape != (n, n, k):
            raise ShapeError(f"A0 has shape {self.a0.value_shape}, expected {(n, n, k)}")
        for name, metric, rank in (("g", self.g, n), ("g0", self.g0, k)):
            if metric is not None and metric.rank != rank:
                raise ShapeError(f"Metric {name} has rank {metric.rank}, expected {rank}")

    @property
    def n(self) -> int:
        return self.tangent_conn.dim

    @property
    def k(self) -> int:
        return self.normal_conn.rank

    @property
    def isometric(self) -> bool:
        return self.g is not None and self.g0 is not None

    def whitney_metric(self) -> Optional[MetricField]:
        """g-hat = g + g0 on TM + E0."""
        if not self.isometric:
            return None
        n, k = self.n, self.k
        g, g0 = self.g, self.g0

        def evaluate(x):
            out = np.zeros((n + k, n + k))
            out[:n, :n] = g.source(x)
            out[n:, n:] = g0.source(x)
            return out

        source = ClosedForm(evaluate, n, (n + k, n + k), domain=fields_domain(g.source, g0.source),
                            fd_step=fields_fd_step(g.source, g0.source), name="g_hat")
        return MetricField(source, g.index + g0.index)

    def check_symmetric_alpha(self, points) -> float:
        """Largest |alpha0(v, w) - alpha0(w, v)| over the given points."""
        worst = 0.0
        for x in points:
            a = self.alpha0(x)
            worst = max(worst, float(np.max(np.abs(a - np.swapaxes(a, 1, 2)))))
        if self.isometric and worst > settings.SPEC_TOL:
            raise SpecViolation(f"alpha0 is not symmetric (max asymmetry {worst:.3e})")
        return worst


def whitney_blocks(data: WhitneyData, x) -> ChristoffelValue:
    gamma = data.tangent_conn.at(x)
    gamma0 = data.normal_conn.at(x)
    alpha = data.alpha0(x)
    a0 = data.a0(x)
    n, k = data.n, data.k
    out = np.zeros((n, n + k, n + k))
    for i in range(n):
        out[i, :n, :n] = gamma[i]
        out[i, :n, n:] = a0[:, i, :]
        out[i, n:, :n] = alpha[:, i, :]
        out[i, n:, n:] = gamma0[i]
    return out


def assemble_whitney(data: WhitneyData) -> ConnectionField:
    """
    Connection on E-hat = TM + E0 with blocks
    [[nabla, A0(v, .)], [alpha0(v, .), nabla0]].
    """
    sources = (data.tangent_conn.christoffel, data.normal_conn.christoffel, data.alpha0, data.a0)
    n, k = data.n, data.k
    source = ClosedForm(lambda x: whitney_blocks(data, x), n, (n, n + k, n + k),
                        domain=fields_domain(*sources), fd_step=fields_fd_step(*sources), name="whitney")
    logger.debug(f"Assembled Whitney connection of rank {n + k} on a {n}-dimensional chart")
    return ConnectionField(n + k, source)


def whitney_components(conn_hat: ConnectionField, n: int, x):
    """
    Splits the Christoffel stack of a connection on TM + E0 into
    (Gamma, A0, alpha0, Gamma0) in the storage layouts of WhitneyData.
    """
    stack = conn_hat.at(x)
    gamma = stack[:, :n, :n]
    gamma0 = stack[:, n:, n:]
    a0 = np.transpose(stack[:, :n, n:], (1, 0, 2))
    alpha = np.transpose(stack[:, n:, :n], (1, 0, 2))
    return gamma, a0, alpha, gamma0


def covariant_metric(conn: ConnectionField, metric: MetricField, x, v) -> NDArray[np.float64]:
    """(nabla_v g) as a matrix: dg(v) - Gamma(v)^T g - g Gamma(v)."""
    g = metric.matrix(x)
    gamma_v = conn.along(x, v)
    return metric.source.directional(x, v) - gamma_v.T @ g - g @ gamma_v


def covariant_endomorphism(conn: ConnectionField, field_: FieldSource, x, v) -> NDArray[np.float64]:
    """(nabla_v J) for an endomorphism field: dJ(v) + [Gamma(v), J]."""
    return field_.directional(x, v) + commutator(conn.along(x, v), field_(x))


def covariant_section(conn: ConnectionField, field_: FieldSource, x, v) -> NDArray[np.float64]:
    """(nabla_v eps) for a section or a field of frames: d eps(v) + Gamma(v) eps."""
    return field_.directional(x, v) + conn.along(x, v) @ field_(x)
