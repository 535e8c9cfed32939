"""
Reconstruction of a G-structure preserving immersion from Whitney data.

The pulled-back forms lambda = s*(theta, omega) are computed from the
assembled connection on E-hat and a P-hat frame section s. The frame field F
solves F^-1 dF = to_algebra(lambda) in the target realization, integrated
outward from x0 along a fixed sweep, and f = point(F).
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from immerse.geometry import settings
from immerse.geometry.chart_manifold import (
    ChartGrid,
    FieldSource,
    WhitneyData,
    assemble_whitney,
    connection_form,
)
from immerse.geometry.compatibility import ResidualReport, full_report
from immerse.geometry.errors import (
    ConfigurationError,
    FrameNotInStructure,
    IntegrationDiverged,
    OutOfDomain,
    ResidualGate,
    ShapeError,
    SingularFrame,
)
from immerse.geometry.g_structure import GStructureSpec
from immerse.geometry.realizations import SecondKindRealization, TargetRealization
from immerse.geometry.tensor_core import as_vector, contract, require_invertible

logger = logging.getLogger(__name__)

# ---------------------------------------------------------
# Initial conditions
# ---------------------------------------------------------
IDENTITY = "identity"
EXACT = "exact"
EXPLICIT = "explicit"
ELEMENT = "element"
INITIAL_MODES = (IDENTITY, EXACT, EXPLICIT, ELEMENT)

GATE_STRIDE = 4
VERIFY_MARGIN = 3
# nodes per difference window, sixth order when the axis is long enough
STENCIL_WIDTH = 7


@dataclass
class InitialCondition:
    """
    sigma0 at the node x0.

    identity: F(x0) is the identity of the realization.
    exact / explicit: F(x0) lifts (point, frame @ s(x0)), where frame holds
    the ambient images of the coordinate basis of E-hat at x0.
    element: F(x0) is given as a group element.
    """
    mode: str = IDENTITY
    point: Optional[NDArray[np.float64]] = None
    frame: Optional[NDArray[np.float64]] = None
    element: Optional[NDArray] = None
    node: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.mode not in INITIAL_MODES:
            raise ConfigurationError(f"Unknown initial condition mode {self.mode!r}")

    def node_index(self, grid: ChartGrid) -> Tuple[int, ...]:
        if self.node is None:
            return tuple(s // 2 for s in grid.shape)
        index = tuple(int(i) for i in self.node)
        if len(index) != grid.dim:
            raise ShapeError(f"Initial node {index} does not match a {grid.dim}-dimensional grid")
        if any(i < 0 or i >= s for i, s in zip(index, grid.shape)):
            raise ConfigurationError(f"Initial node {index} outside grid of shape {grid.shape}")
        return index


def initial_element(target: TargetRealization, initial: InitialCondition, frame: FieldSource, x0):
    """Group element F(x0) and the defect of its lift."""
    if initial.mode == IDENTITY:
        return target.identity(), 0.0
    if initial.mode == ELEMENT:
        if initial.element is None:
            raise ConfigurationError("Initial condition 'element' needs a group element")
        return np.array(initial.element), 0.0
    if initial.point is None or initial.frame is None:
        raise ConfigurationError(f"Initial condition {initial.mode!r} needs a point and a frame")
    ambient = np.asarray(initial.frame) @ require_invertible(frame(x0))
    F0, defect = target.lift(np.asarray(initial.point, dtype=float), ambient)
    if defect > settings.FRAME_TOL:
        logger.warning(f"sigma0 is not structure preserving (lift defect {defect:.3e})")
    return F0, float(defect)


# ---------------------------------------------------------
# Pulled-back forms
# ---------------------------------------------------------
class LambdaField:
    """
    theta(x, v) = s(x)^-1 (v, 0) and omega(x, v) = s(x)^-1 Gamma-hat^s(v) s(x),
    evaluated from the assembled Whitney connection. Per-point stacks are cached.
    """

    def __init__(self, data: WhitneyData, frame: FieldSource, target: TargetRealization,
                 spec: Optional[GStructureSpec] = None):
        n_bar = data.n + data.k
        if frame.value_shape != (n_bar, n_bar):
            raise ShapeError(f"Frame section has shape {frame.value_shape}, expected {(n_bar, n_bar)}")
        if target.n != n_bar:
            raise ShapeError(f"Target has dimension {target.n}, E-hat has rank {n_bar}")
        self.data = data
        self.frame = frame
        self.target = target
        self.spec = spec
        self.n = data.n
        self.n_bar = n_bar
        self.conn_hat = assemble_whitney(data)
        self._cache: Dict[tuple, Tuple[NDArray[np.float64], NDArray[np.float64]]] = {}

    def check_frame(self, x) -> float:
        if self.spec is None:
            return 0.0
        residual = self.spec.at(x).frame_residual(self.frame(x))
        if residual > settings.FRAME_TOL:
            raise FrameNotInStructure(f"Frame section leaves P-hat at {np.round(x, 6).tolist()} "
                                      f"(residual {residual:.3e})")
        return residual

    def stacks(self, x) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        """theta stack (n, n_bar) and omega stack (n, n_bar, n_bar) at x."""
        x = np.asarray(x, dtype=float)
        key = tuple(np.round(x, 13))
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        s = require_invertible(self.frame(x))
        theta = np.linalg.solve(s, np.eye(self.n_bar)[:, :self.n]).T
        omega = connection_form(self.conn_hat, self.frame, x)
        self._cache[key] = (theta, omega)
        return theta, omega

    def __call__(self, x, v) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        theta, omega = self.stacks(x)
        v = as_vector(v, self.n)
        return v @ theta, contract(omega, v)

    def algebra(self, x, v):
        return self.target.to_algebra(*self(x, v))

    def admissibility(self, x, v) -> float:
        return self.target.admissibility(*self(x, v))

    def max_admissibility(self, points) -> float:
        worst = 0.0
        for x in points:
            for e in np.eye(self.n):
                worst = max(worst, self.admissibility(x, e))
        return worst


def build_lambda(data: WhitneyData, frame: FieldSource, x, v, spec: Optional[GStructureSpec] = None):
    """
    (theta, omega) of lambda at (x, v). With a spec the frame is checked to
    lie in P-hat first.
    """
    x = np.asarray(x, dtype=float)
    if spec is not None:
        residual = spec.at(x).frame_residual(frame(x))
        if residual > settings.FRAME_TOL:
            raise FrameNotInStructure(f"Frame section leaves P-hat (residual {residual:.3e})")
    s = require_invertible(frame(x))
    theta = np.linalg.solve(s, np.concatenate([as_vector(v, data.n), np.zeros(data.k)]))
    omega = contract(connection_form(assemble_whitney(data), frame, x), as_vector(v, data.n))
    return theta, omega


# ---------------------------------------------------------
# Integration
# ---------------------------------------------------------
@dataclass
class StepStats:
    steps: int = 0
    max_drift: float = 0.0

    def record(self, drift: float) -> None:
        self.steps += 1
        self.max_drift = max(self.max_drift, drift)


def _lie_step(target: TargetRealization, F, A0, A_mid, A1):
    """
    Fourth-order step of F' = F A(t) on the group: Simpson quadrature of A
    plus the first commutator correction, applied as F exp(theta).
    """
    theta = (A0 + 4.0 * A_mid + A1) / 6.0 + target.bracket(A0, A1) / 12.0
    return target.translate(F, theta)


def _rk4_step(target: TargetRealization, F, A0, A_mid, A1):
    """Classic RK4 on the coordinates of F, for realizations without finite translations."""
    k1 = target.velocity(F, A0)
    k2 = target.velocity(F + 0.5 * k1, A_mid)
    k3 = target.velocity(F + 0.5 * k2, A_mid)
    k4 = target.velocity(F + k3, A1)
    return F + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def integrate_segment(lam: LambdaField, target: TargetRealization, F, x_start, x_end,
                      substeps: int = 1, stats: Optional[StepStats] = None):
    """
    Carries F along the straight segment from x_start to x_end, re-projecting
    onto the group after every step.
    """
    x_start = np.asarray(x_start, dtype=float)
    v = np.asarray(x_end, dtype=float) - x_start
    h = 1.0 / substeps
    step = _rk4_step if isinstance(target, SecondKindRealization) else _lie_step
    for m in range(substeps):
        t = m * h
        A0 = lam.algebra(x_start + t * v, h * v)
        A_mid = lam.algebra(x_start + (t + 0.5 * h) * v, h * v)
        A1 = lam.algebra(x_start + (t + h) * v, h * v)
        F = step(target, F, A0, A_mid, A1)
        if not np.all(np.isfinite(F)):
            raise IntegrationDiverged(f"Frame integration produced non-finite values near {x_start.tolist()}")
        drift = target.drift(F)
        if drift > settings.DRIFT_LIMIT:
            raise SingularFrame(f"Frame drifted {drift:.3e} off the group before re-projection")
        if stats is not None:
            stats.record(drift)
        F = target.project(F)
    return F


def integrate_along_curve(lam: LambdaField, target: TargetRealization, F0, curve: Sequence,
                          substeps: int = 1, stats: Optional[StepStats] = None) -> list:
    """
    Group elements along a polygonal path of chart points, one per vertex.
    """
    points = [np.asarray(x, dtype=float) for x in curve]
    domain = lam.conn_hat.christoffel.domain
    for x in points:
        if domain is not None and not domain.contains(x):
            raise OutOfDomain(f"Curve point {x.tolist()} outside the chart")
    path = [F0]
    F = F0
    for a, b in zip(points[:-1], points[1:]):
        F = integrate_segment(lam, target, F, a, b, substeps, stats)
        path.append(F)
    return path


# ---------------------------------------------------------
# Holonomy
# ---------------------------------------------------------
def holonomy_residual(lam: LambdaField, target: TargetRealization, grid: ChartGrid, index,
                      axes: Tuple[int, int] = (0, 1), substeps: int = 1) -> float:
    """
    Distance from the identity after carrying the identity around the grid
    cell at index spanned by axes, divided by the cell area.
    """
    index = np.asarray(index, dtype=int)
    a, b = axes
    if index[a] + 1 >= grid.shape[a] or index[b] + 1 >= grid.shape[b] or np.any(index < 0):
        raise OutOfDomain(f"Plaquette at {tuple(index.tolist())} leaves the grid")
    ea = np.eye(grid.dim, dtype=int)[a]
    eb = np.eye(grid.dim, dtype=int)[b]
    loop = [index, index + ea, index + ea + eb, index + eb, index]
    identity = target.identity()
    path = integrate_along_curve(lam, target, identity, [grid.node(i) for i in loop], substeps)
    area = float(grid.spacing[a] * grid.spacing[b])
    return target.distance(path[-1], identity) / area


def holonomy_scan(lam: LambdaField, target: TargetRealization, grid: ChartGrid, substeps: int = 1,
                  stride: int = 1) -> Tuple[float, Tuple[int, ...]]:
    """Largest plaquette holonomy over the grid and where it occurs."""
    worst, where = 0.0, None
    for a in range(grid.dim):
        for b in range(a + 1, grid.dim):
            ranges = [range(0, s - 1, stride) if i in (a, b) else range(0, s, stride)
                      for i, s in enumerate(grid.shape)]
            for index in np.ndindex(*[len(r) for r in ranges]):
                cell = tuple(r[i] for r, i in zip(ranges, index))
                value = holonomy_residual(lam, target, grid, cell, (a, b), substeps)
                if value > worst:
                    worst, where = value, cell
    logger.debug(f"Holonomy scan: worst plaquette {where} with {worst:.3e}")
    return worst, where


# ---------------------------------------------------------
# Solutions
# ---------------------------------------------------------
@dataclass
class VerificationReport:
    """Max-norm residuals of a reconstructed immersion; None where a check does not apply."""
    pullback_metric: Optional[float]
    differential: float
    alpha_recovery: Optional[float]
    frame_preservation: float
    nodes: int

    def residuals(self) -> Dict[str, float]:
        out = {"differential": self.differential, "frame_preservation": self.frame_preservation}
        if self.pullback_metric is not None:
            out["pullback_metric"] = self.pullback_metric
        if self.alpha_recovery is not None:
            out["alpha_recovery"] = self.alpha_recovery
        return out

    def failed(self, tol: float = None, alpha_tol: float = None) -> list:
        tol = settings.VERIFY_TOL if tol is None else tol
        alpha_tol = tol if alpha_tol is None else alpha_tol
        out = []
        for name, value in self.residuals().items():
            limit = alpha_tol if name == "alpha_recovery" else tol
            if not value <= limit:
                out.append(name)
        return out

    def passed(self, tol: float = None, alpha_tol: float = None) -> bool:
        return not self.failed(tol, alpha_tol)

    def to_dict(self) -> dict:
        return {**self.residuals(), "nodes": self.nodes}


@dataclass
class ImmersionSolution:
    """
    Per-node group elements F(x), points f(x) and frames L_x = frame(F(x)) s(x)^-1.
    """
    grid: ChartGrid
    target: TargetRealization
    elements: NDArray
    points: NDArray[np.float64]
    frames: NDArray[np.float64]
    x0_index: Tuple[int, ...]
    order: Tuple[int, ...]
    substeps: int
    initial_defect: float = 0.0
    max_drift: float = 0.0
    admissibility: float = 0.0
    gate: Optional[ResidualReport] = None
    verification: Optional[VerificationReport] = None
    holonomy: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def point(self, index) -> NDArray[np.float64]:
        return self.points[tuple(index)]

    def display_points(self) -> NDArray[np.float64]:
        flat = self.points.reshape(-1, self.points.shape[-1])
        shown = np.stack([self.target.display(p) for p in flat])
        return shown.reshape(self.grid.shape + (3,))

    def to_frame(self) -> pd.DataFrame:
        """One row per node: chart coordinates and ambient coordinates of f."""
        nodes = self.grid.nodes().reshape(-1, self.grid.dim)
        points = self.points.reshape(-1, self.points.shape[-1])
        columns = {f"x{i}": nodes[:, i] for i in range(self.grid.dim)}
        columns.update({f"f{j}": points[:, j] for j in range(points.shape[1])})
        return pd.DataFrame(columns)

    def diagnostics(self) -> dict:
        out = {
            "initial_defect": self.initial_defect,
            "max_drift": self.max_drift,
            "admissibility": self.admissibility,
            "order": list(self.order),
            "step_refine": self.substeps,
        }
        if self.holonomy is not None:
            out["holonomy"] = self.holonomy
        if self.verification is not None:
            out["verification"] = self.verification.to_dict()
        if self.gate is not None:
            out["gate_worst"] = self.gate.worst().max_norm
        return out


def sweep_order(order: Optional[Sequence[int]], dim: int) -> Tuple[int, ...]:
    order = tuple(range(dim)) if order is None else tuple(int(a) for a in order)
    if sorted(order) != list(range(dim)):
        raise ConfigurationError(f"Sweep order {order} is not a permutation of the {dim} chart axes")
    return order


def sweep(lam: LambdaField, target: TargetRealization, grid: ChartGrid, start: Tuple[int, ...], F0,
          order: Tuple[int, ...], substeps: int = 1, stats: Optional[StepStats] = None) -> dict:
    """
    Fills the grid from start: the line through start along order[0], then
    from every filled node along order[1], and so on.
    """
    filled = {tuple(start): F0}
    for axis in order:
        for seed in list(filled):
            for direction in (1, -1):
                index = list(seed)
                F = filled[seed]
                while 0 <= index[axis] + direction < grid.shape[axis]:
                    nxt = list(index)
                    nxt[axis] += direction
                    F = integrate_segment(lam, target, F, grid.node(index), grid.node(nxt), substeps, stats)
                    filled[tuple(nxt)] = F
                    index = nxt
    return filled


def solve_grid(data: WhitneyData, frame: FieldSource, target: TargetRealization, grid: ChartGrid,
               spec: GStructureSpec, initial: Optional[InitialCondition] = None, step_refine: int = 1,
               order: Optional[Sequence[int]] = None, force: bool = False, gate: float = None,
               seed: int = None, verify: bool = True, gate_stride: int = GATE_STRIDE) -> ImmersionSolution:
    """
    Integrates the frame equation over the whole grid.

    Args:
        data: Whitney data on the chart
        frame: P-hat frame section s
        target: realization of the target model
        grid: chart grid, also the integration mesh
        spec: G-structure of E-hat
        initial: sigma0 at x0 (identity at the centre node by default)
        step_refine: integration steps per grid edge
        order: sweep axis order, (0, 1, ...) by default
        force: integrate even when the compatibility residuals exceed the gate
        gate: residual threshold, settings.RESIDUAL_GATE by default
        seed: seed of the compatibility sampling
        verify: run verify_solution on the result
        gate_stride: node stride of the compatibility gate

    Returns:
        ImmersionSolution with the gate report and the verification attached
    """
    initial = InitialCondition() if initial is None else initial
    gate = settings.RESIDUAL_GATE if gate is None else gate
    order = sweep_order(order, grid.dim)
    substeps = int(step_refine)
    if substeps < 1:
        raise ConfigurationError(f"step_refine must be positive, got {step_refine}")

    report = full_report(target.model, data, spec, grid, seed=seed, stride=gate_stride)
    worst = report.worst()
    if worst.max_norm > gate:
        if not force:
            raise ResidualGate(f"Compatibility residual {worst.name} = {worst.max_norm:.3e} exceeds the "
                               f"gate {gate:.1e}", report)
        logger.warning(f"Forcing integration past {worst.name} = {worst.max_norm:.3e}")

    lam = LambdaField(data, frame, target, spec)
    start = initial.node_index(grid)
    x0 = grid.node(start)
    lam.check_frame(x0)
    F0, defect = initial_element(target, initial, frame, x0)
    stats = StepStats()
    logger.debug(f"Sweeping a {grid.shape} grid from {start} in order {order} with {substeps} steps per edge")
    filled = sweep(lam, target, grid, start, F0, order, substeps, stats)

    elements = np.stack([filled[index] for index in np.ndindex(*grid.shape)])
    elements = elements.reshape(grid.shape + elements.shape[1:])
    points = np.stack([target.point(filled[index]) for index in np.ndindex(*grid.shape)])
    frames = np.stack([np.real(target.frame(filled[index])) @ np.linalg.inv(frame(grid.node(index)))
                       for index in np.ndindex(*grid.shape)])
    solution = ImmersionSolution(
        grid=grid,
        target=target,
        elements=elements,
        points=points.reshape(grid.shape + points.shape[1:]),
        frames=frames.reshape(grid.shape + frames.shape[1:]),
        x0_index=start,
        order=order,
        substeps=substeps,
        initial_defect=defect,
        max_drift=stats.max_drift,
        admissibility=lam.max_admissibility([grid.node(i) for i in grid.interior_indices(1)[::gate_stride]]),
        gate=report,
    )
    logger.debug(f"Integrated {stats.steps} steps, max drift {stats.max_drift:.3e}")
    if verify:
        solution.verification = verify_solution(solution, data, frame, lam)
    return solution


# ---------------------------------------------------------
# Verification
# ---------------------------------------------------------
@lru_cache(maxsize=None)
def stencil_weights(width: int, position: int) -> Tuple[float, ...]:
    """
    First-derivative weights on `width` consecutive unit-spaced nodes for the
    node at `position`, exact rationals from the Lagrange basis.
    """
    offsets = [k - position for k in range(width)]
    weights = []
    for k, o_k in enumerate(offsets):
        total = Fraction(0)
        for m, o_m in enumerate(offsets):
            if m == k:
                continue
            term = Fraction(1, o_k - o_m)
            for j, o_j in enumerate(offsets):
                if j not in (k, m):
                    term *= Fraction(-o_j, o_k - o_j)
            total += term
        weights.append(float(total))
    return tuple(weights)


def _stencil(index: Tuple[int, ...], axis: int, h: float, value, size: int) -> NDArray:
    """
    Derivative along axis of value(node index) over a window of STENCIL_WIDTH
    nodes, centred where the axis allows and shifted inward at its ends.
    """
    width = min(STENCIL_WIDTH, size)
    first = min(max(index[axis] - width // 2, 0), size - width)
    out = 0.0
    for k, weight in enumerate(stencil_weights(width, index[axis] - first)):
        if weight == 0.0:
            continue
        shifted = list(index)
        shifted[axis] = first + k
        out = out + weight * value(tuple(shifted))
    return out / h


def _differentials(solution: ImmersionSolution, indices) -> Dict[tuple, NDArray[np.float64]]:
    """df at each node as an (ambient, n) matrix, from point deltas against the node itself."""
    grid, target, F_all = solution.grid, solution.target, solution.elements
    out = {}
    for index in indices:
        F = F_all[index]
        out[index] = np.column_stack([
            _stencil(index, i, grid.spacing[i], lambda j: target.point_delta(F_all[j], F), grid.shape[i])
            for i in range(grid.dim)
        ])
    return out


def verify_solution(solution: ImmersionSolution, data: WhitneyData, frame: FieldSource,
                    lam: Optional[LambdaField] = None) -> VerificationReport:
    """
    Checks the reconstruction with sixth-order differences over interior nodes:

    (i) the target metric pulled back by df against g, and L restricted to
    TM against df; (ii) the ambient derivative of df, written in the frame
    of F, against nabla + alpha0; (iii) drift of F and the defect of sigma0.

    Residuals are taken VERIFY_MARGIN nodes away from the boundary, or one node
    away on grids too small for that. Differences near the ends of an axis use
    shifted windows, and axes shorter than STENCIL_WIDTH use the whole axis.
    """
    grid, target = solution.grid, solution.target
    n, n_bar = data.n, data.n + data.k
    lam = LambdaField(data, frame, target) if lam is None else lam
    if min(grid.shape) < 3:
        raise ShapeError(f"Grid {grid.shape} is too small for verification")
    nodes = grid.interior_indices(VERIFY_MARGIN) or grid.interior_indices(1)
    iota = np.eye(n_bar)[:, :n]
    F_all = solution.elements
    df = _differentials(solution, list(np.ndindex(*grid.shape)))
    components = {}
    for index, d in df.items():
        components[index] = np.linalg.pinv(np.real(target.frame(F_all[index]))) @ d

    pullback, differential, recovery = 0.0, 0.0, 0.0
    for index in nodes:
        x = grid.node(index)
        F = F_all[index]
        differential = max(differential, float(np.max(np.abs(solution.frames[index] @ iota - df[index]))))
        if data.isometric:
            Lp = np.linalg.pinv(np.real(target.frame(F)))
            ambient = Lp.T @ target.frame_form @ Lp
            pullback = max(pullback, float(np.max(np.abs(df[index].T @ ambient @ df[index] - data.g.matrix(x)))))

        s = require_invertible(frame(x))
        gamma_hat = lam.conn_hat.at(x)
        for i in range(n):
            h, size = grid.spacing[i], grid.shape[i]
            dF = _stencil(index, i, h, lambda j: F_all[j], size)
            _, X_i = target.from_algebra(target.left_derivative(F, dF))
            d_components = _stencil(index, i, h, lambda j: components[j], size)
            expected = np.linalg.solve(s, gamma_hat[i] @ iota)
            residual = d_components + np.real(X_i) @ components[index] - expected
            recovery = max(recovery, float(np.max(np.abs(residual))))

    frame_residual = max(solution.max_drift, solution.initial_defect,
                         max(target.drift(F_all[index]) for index in nodes))
    report = VerificationReport(
        pullback_metric=pullback if data.isometric else None,
        differential=differential,
        alpha_recovery=recovery,
        frame_preservation=frame_residual,
        nodes=len(nodes),
    )
    logger.debug(f"Verification over {len(nodes)} nodes: {report.residuals()}")
    return report


def uniqueness_check(data: WhitneyData, frame: FieldSource, target: TargetRealization, grid: ChartGrid,
                     spec: GStructureSpec, initial: Optional[InitialCondition] = None,
                     step_refine: int = 1) -> float:
    """
    Largest node-wise distance between the points of two sweeps with opposite
    axis orders from the same sigma0. Small iff the data are compatible.
    """
    forward = tuple(range(grid.dim))
    solutions = [
        solve_grid(data, frame, target, grid, spec, initial, step_refine=step_refine, order=order,
                   force=True, verify=False)
        for order in (forward, forward[::-1])
    ]
    a = solutions[0].points.reshape(-1, solutions[0].points.shape[-1])
    b = solutions[1].points.reshape(-1, solutions[1].points.shape[-1])
    gap = float(np.max(np.linalg.norm(a - b, axis=1)))
    logger.debug(f"Sweep orders {forward} and {forward[::-1]} differ by {gap:.3e}")
    return gap
