"""
Built-in immersion problems with closed-form data.

Every preset returns an ImmersionProblem: the Whitney data on a chart, the
G-structure of E-hat, the target model, a P-hat frame section and the initial
condition. Presets with a known immersion also carry it (exact_point and
exact_map), which the tests and the solve oracle compare against.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional

import numpy as np
from numpy.typing import NDArray

from immerse.geometry.chart_manifold import (
    Box,
    ChartGrid,
    ClosedForm,
    ConnectionField,
    FieldSource,
    MetricField,
    WhitneyData,
)
from immerse.geometry.compatibility import weingarten_field
from immerse.geometry.errors import ConfigurationError
from immerse.geometry.g_structure import GStructureSpec
from immerse.geometry.homogeneous_models import EKappaTau, ModelSpace, Product, SpaceForm
from immerse.geometry.immersion_solver import EXACT, IDENTITY, InitialCondition

logger = logging.getLogger(__name__)

ROTATION = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass
class ImmersionProblem:
    """Everything solve_grid and full_report need, plus the known solution if any."""
    name: str
    grid: ChartGrid
    data: WhitneyData
    spec: GStructureSpec
    model: ModelSpace
    frame: FieldSource
    initial: InitialCondition = field(default_factory=InitialCondition)
    exact_point: Optional[Callable] = None
    exact_map: Optional[Callable] = None
    fields: Dict[str, FieldSource] = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def x0(self) -> NDArray[np.float64]:
        return self.grid.node(self.initial.node_index(self.grid))

    def initial_condition(self) -> InitialCondition:
        """The initial condition with the exact sigma0 filled in when asked for."""
        initial = self.initial
        if initial.mode != EXACT or initial.point is not None:
            return initial
        if self.exact_point is None or self.exact_map is None:
            raise ConfigurationError(f"Problem {self.name!r} has no exact solution to start from")
        x0 = self.x0
        return replace(initial, point=self.exact_point(x0), frame=self.exact_map(x0))

    def describe(self) -> dict:
        return {
            "name": self.name,
            "n": self.data.n,
            "k": self.data.k,
            "samples": list(self.grid.shape),
            "coord_min": self.grid.coord_min.tolist(),
            "coord_max": self.grid.coord_max.tolist(),
            "model": self.model.describe(),
            "structure": self.spec.kind,
            "initial": self.initial.mode,
            "params": self.params,
        }


# ---------------------------------------------------------
# Field helpers
# ---------------------------------------------------------
def _field(evaluator, box: Box, value_shape, name: str) -> ClosedForm:
    return ClosedForm(evaluator, box.lo.shape[0], value_shape, domain=box, name=name)


def _constant(value, box: Box, name: str) -> ClosedForm:
    return ClosedForm.constant(value, box.lo.shape[0], domain=box, name=name)


def _assemble(name: str, grid: ChartGrid, metric, gamma, metric0, gamma0, alpha0, params: dict):
    """WhitneyData of an isometric problem, with A0 derived from alpha0."""
    n = grid.dim
    k = metric0.value_shape[0]
    g = MetricField(metric)
    g0 = MetricField(metric0)
    a0 = weingarten_field(g, g0, alpha0)
    data = WhitneyData(
        tangent_conn=ConnectionField(n, gamma),
        normal_conn=ConnectionField(k, gamma0),
        alpha0=alpha0,
        a0=a0,
        g=g,
        g0=g0,
        meta={"preset": name, **params},
    )
    fields = {
        "metric": metric,
        "christoffel": gamma,
        "normal_metric": metric0,
        "normal_christoffel": gamma0,
        "alpha0": alpha0,
        "weingarten": a0,
    }
    return data, fields


def _grid(lo, hi, samples: int) -> ChartGrid:
    return ChartGrid(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float), (samples, samples))


# ---------------------------------------------------------
# Presets
# ---------------------------------------------------------
def flat_plane(samples: int = 11, size: float = 1.0, codim: int = 1) -> ImmersionProblem:
    """Flat plane in R^(2 + codim), alpha0 = 0: the identity frame is the exact solution."""
    grid = _grid([-size, -size], [size, size], samples)
    box = grid.box
    k = int(codim)
    data, fields = _assemble(
        "flat_plane", grid,
        metric=_constant(np.eye(2), box, "g"),
        gamma=_constant(np.zeros((2, 2, 2)), box, "gamma"),
        metric0=_constant(np.eye(k), box, "g0"),
        gamma0=_constant(np.zeros((2, k, k)), box, "gamma0"),
        alpha0=_constant(np.zeros((k, 2, 2)), box, "alpha0"),
        params={"size": size, "codim": k},
    )
    frame = _constant(np.eye(2 + k), box, "frame")
    fields["frame"] = frame

    def exact_point(x):
        return np.concatenate([np.asarray(x, dtype=float), np.zeros(k)])

    return ImmersionProblem(
        name="flat_plane",
        grid=grid,
        data=data,
        spec=GStructureSpec.orthonormal(data.whitney_metric()),
        model=SpaceForm(0.0, 2 + k),
        frame=frame,
        initial=InitialCondition(EXACT),
        exact_point=exact_point,
        exact_map=lambda x: np.eye(2 + k),
        fields=fields,
        params={"samples": samples, "size": size, "codim": k},
    )


def sphere_christoffel(x) -> NDArray[np.float64]:
    theta = x[0]
    cot = np.cos(theta) / np.sin(theta)
    return np.array([
        [[0.0, 0.0], [0.0, cot]],
        [[0.0, -np.sin(theta) * np.cos(theta)], [cot, 0.0]],
    ])


def unit_sphere(samples: int = 41, alpha_scale: float = 1.0, alpha_perturbation: float = 0.0,
                margin: float = 0.3, frame_twist: float = 0.0) -> ImmersionProblem:
    """
    Round unit sphere in R^3 in polar coordinates (theta, phi) with the inward
    normal, so that alpha0 = alpha_scale * g. alpha_perturbation adds
    delta * sin(phi) dtheta^2, which breaks Gauss and Codazzi linearly in delta.
    frame_twist rotates the tangent frame by frame_twist * theta * phi, so that
    lambda varies along both coordinate lines; the immersion does not change.
    """
    grid = _grid([margin, 0.0], [np.pi - margin, np.pi], samples)
    box = grid.box
    delta = float(alpha_perturbation)
    scale = float(alpha_scale)

    def metric(x):
        return np.diag([1.0, np.sin(x[0]) ** 2])

    def alpha(x):
        bump = np.array([[np.sin(x[1]), 0.0], [0.0, 0.0]])
        return (scale * metric(x) + delta * bump)[None, :, :]

    data, fields = _assemble(
        "unit_sphere", grid,
        metric=_field(metric, box, (2, 2), "g"),
        gamma=_field(sphere_christoffel, box, (2, 2, 2), "gamma"),
        metric0=_constant(np.eye(1), box, "g0"),
        gamma0=_constant(np.zeros((2, 1, 1)), box, "gamma0"),
        alpha0=_field(alpha, box, (1, 2, 2), "alpha0"),
        params={"alpha_scale": scale, "alpha_perturbation": delta},
    )
    twist = float(frame_twist)

    def sphere_frame(x):
        psi = twist * x[0] * x[1]
        c, s = np.cos(psi), np.sin(psi)
        return np.array([[c, -s, 0.0], [s / np.sin(x[0]), c / np.sin(x[0]), 0.0], [0.0, 0.0, 1.0]])

    frame = _field(sphere_frame, box, (3, 3), "frame")
    fields["frame"] = frame

    def exact_point(x):
        theta, phi = x
        return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])

    def exact_map(x):
        theta, phi = x
        d_theta = np.array([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), -np.sin(theta)])
        d_phi = np.array([-np.sin(theta) * np.sin(phi), np.sin(theta) * np.cos(phi), 0.0])
        return np.column_stack([d_theta, d_phi, -exact_point(x)])

    return ImmersionProblem(
        name="unit_sphere",
        grid=grid,
        data=data,
        spec=GStructureSpec.orthonormal(data.whitney_metric()),
        model=SpaceForm(0.0, 3),
        frame=frame,
        initial=InitialCondition(EXACT),
        exact_point=exact_point,
        exact_map=exact_map,
        fields=fields,
        params={"samples": samples, "alpha_scale": scale, "alpha_perturbation": delta, "margin": margin,
                "frame_twist": twist},
    )


def half_plane_christoffel(x) -> NDArray[np.float64]:
    y = x[1]
    return np.array([
        [[0.0, -1.0 / y], [1.0 / y, 0.0]],
        [[-1.0 / y, 0.0], [0.0, -1.0 / y]],
    ])


def hyperbolic_plane_h2xr(samples: int = 21, width: float = 0.5) -> ImmersionProblem:
    """
    Upper half-plane model of H^2 as the slice H^2 x {0} of H^2 x R, totally
    geodesic with a parallel normal.
    """
    grid = _grid([-width, 1.0 - width], [width, 1.0 + width], samples)
    box = grid.box
    data, fields = _assemble(
        "hyperbolic_plane_h2xr", grid,
        metric=_field(lambda x: np.eye(2) / x[1] ** 2, box, (2, 2), "g"),
        gamma=_field(half_plane_christoffel, box, (2, 2, 2), "gamma"),
        metric0=_constant(np.eye(1), box, "g0"),
        gamma0=_constant(np.zeros((2, 1, 1)), box, "gamma0"),
        alpha0=_constant(np.zeros((1, 2, 2)), box, "alpha0"),
        params={"width": width},
    )
    frame = _field(lambda x: np.diag([x[1], x[1], 1.0]), box, (3, 3), "frame")
    fields["frame"] = frame
    spec = GStructureSpec.product([GStructureSpec.orthonormal(data.g), GStructureSpec.orthonormal(data.g0)])

    def hyperboloid(x):
        u, y = x
        r = u * u + y * y
        return np.array([(r + 1.0) / (2.0 * y), u / y, (r - 1.0) / (2.0 * y)])

    def exact_point(x):
        return np.concatenate([hyperboloid(x), [0.0]])

    def exact_map(x):
        u, y = x
        d_u = np.array([u / y, 1.0 / y, u / y, 0.0])
        d_y = np.array([(y * y - u * u - 1.0) / (2.0 * y * y), -u / (y * y), (y * y - u * u + 1.0) / (2.0 * y * y), 0.0])
        return np.column_stack([d_u, d_y, [0.0, 0.0, 0.0, 1.0]])

    return ImmersionProblem(
        name="hyperbolic_plane_h2xr",
        grid=grid,
        data=data,
        spec=spec,
        model=Product((SpaceForm(-1.0, 2), SpaceForm(0.0, 1))),
        frame=frame,
        initial=InitialCondition(IDENTITY),
        exact_point=exact_point,
        exact_map=exact_map,
        fields=fields,
        params={"samples": samples, "width": width},
    )


def clifford_torus(samples: int = 21, extent: float = np.pi) -> ImmersionProblem:
    """Clifford torus (cos a, sin a, cos b, sin b) / sqrt(2) in the unit 3-sphere."""
    grid = _grid([0.0, 0.0], [extent, extent], samples)
    box = grid.box
    data, fields = _assemble(
        "clifford_torus", grid,
        metric=_constant(0.5 * np.eye(2), box, "g"),
        gamma=_constant(np.zeros((2, 2, 2)), box, "gamma"),
        metric0=_constant(np.eye(1), box, "g0"),
        gamma0=_constant(np.zeros((2, 1, 1)), box, "gamma0"),
        alpha0=_constant(np.diag([-0.5, 0.5])[None, :, :], box, "alpha0"),
        params={"extent": extent},
    )
    root = np.sqrt(2.0)
    frame = _constant(np.diag([root, root, 1.0]), box, "frame")
    fields["frame"] = frame

    def exact_point(x):
        a, b = x
        return np.array([np.cos(a), np.sin(a), np.cos(b), np.sin(b)]) / root

    def exact_map(x):
        a, b = x
        d_a = np.array([-np.sin(a), np.cos(a), 0.0, 0.0]) / root
        d_b = np.array([0.0, 0.0, -np.sin(b), np.cos(b)]) / root
        normal = np.array([np.cos(a), np.sin(a), -np.cos(b), -np.sin(b)]) / root
        return np.column_stack([d_a, d_b, normal])

    return ImmersionProblem(
        name="clifford_torus",
        grid=grid,
        data=data,
        spec=GStructureSpec.orthonormal(data.whitney_metric()),
        model=SpaceForm(1.0, 3),
        frame=frame,
        initial=InitialCondition(EXACT),
        exact_point=exact_point,
        exact_map=exact_map,
        fields=fields,
        params={"samples": samples, "extent": extent},
    )


def flat_torus_s4(samples: int = 21, extent: float = np.pi, normal_twist: float = 0.0) -> ImmersionProblem:
    """
    Clifford torus inside a totally geodesic 3-sphere of the unit 4-sphere
    (codimension 2). normal_twist = delta rotates the normal bundle with
    Gamma0(d_a) = delta * b * L, which only the Ricci equation notices.
    """
    grid = _grid([0.0, 0.0], [extent, extent], samples)
    box = grid.box
    delta = float(normal_twist)
    alpha = np.zeros((2, 2, 2))
    alpha[0] = np.diag([-0.5, 0.5])

    def gamma0(x):
        out = np.zeros((2, 2, 2))
        out[0] = delta * x[1] * ROTATION
        return out

    data, fields = _assemble(
        "flat_torus_s4", grid,
        metric=_constant(0.5 * np.eye(2), box, "g"),
        gamma=_constant(np.zeros((2, 2, 2)), box, "gamma"),
        metric0=_constant(np.eye(2), box, "g0"),
        gamma0=_field(gamma0, box, (2, 2, 2), "gamma0"),
        alpha0=_constant(alpha, box, "alpha0"),
        params={"extent": extent, "normal_twist": delta},
    )
    root = np.sqrt(2.0)
    frame = _constant(np.diag([root, root, 1.0, 1.0]), box, "frame")
    fields["frame"] = frame

    def exact_point(x):
        a, b = x
        return np.array([np.cos(a), np.sin(a), np.cos(b), np.sin(b), 0.0]) / root

    def exact_map(x):
        a, b = x
        d_a = np.array([-np.sin(a), np.cos(a), 0.0, 0.0, 0.0]) / root
        d_b = np.array([0.0, 0.0, -np.sin(b), np.cos(b), 0.0]) / root
        normal = np.array([np.cos(a), np.sin(a), -np.cos(b), -np.sin(b), 0.0]) / root
        return np.column_stack([d_a, d_b, normal, [0.0, 0.0, 0.0, 0.0, 1.0]])

    return ImmersionProblem(
        name="flat_torus_s4",
        grid=grid,
        data=data,
        spec=GStructureSpec.orthonormal(data.whitney_metric()),
        model=SpaceForm(1.0, 4),
        frame=frame,
        initial=InitialCondition(EXACT),
        exact_point=exact_point,
        exact_map=exact_map,
        fields=fields,
        params={"samples": samples, "extent": extent, "normal_twist": delta},
    )


def nil_vertical_cylinder(samples: int = 21, tau: float = 0.5, size: float = 1.0) -> ImmersionProblem:
    """
    Vertical plane {y = 0} of Nil with bundle curvature tau, parametrized by
    (s, t) -> (s, 0, t). The Hopf fibre is d_t and the unit section of E-hat
    is xi-hat = d_t, so only the off-diagonal alpha0(d_s, d_t) = tau survives.
    """
    grid = _grid([-size, -size], [size, size], samples)
    box = grid.box
    alpha = np.array([[[0.0, tau], [tau, 0.0]]])
    data, fields = _assemble(
        "nil_vertical_cylinder", grid,
        metric=_constant(np.eye(2), box, "g"),
        gamma=_constant(np.zeros((2, 2, 2)), box, "gamma"),
        metric0=_constant(np.eye(1), box, "g0"),
        gamma0=_constant(np.zeros((2, 1, 1)), box, "gamma0"),
        alpha0=_constant(alpha, box, "alpha0"),
        params={"tau": tau, "size": size},
    )
    section = _constant([0.0, 1.0, 0.0], box, "section")
    frame = _constant(np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]]), box, "frame")
    fields["section"] = section
    fields["frame"] = frame

    def exact_point(x):
        return np.array([x[0], 0.0, x[1]])

    def exact_map(x):
        return np.column_stack([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, -tau * x[0]]])

    return ImmersionProblem(
        name="nil_vertical_cylinder",
        grid=grid,
        data=data,
        spec=GStructureSpec.oriented_unit_vector_3d(section, data.whitney_metric()),
        model=EKappaTau(0.0, tau),
        frame=frame,
        initial=InitialCondition(IDENTITY),
        exact_point=exact_point,
        exact_map=exact_map,
        fields=fields,
        params={"samples": samples, "tau": tau, "size": size},
    )


PRESETS = {
    "flat_plane": flat_plane,
    "unit_sphere": unit_sphere,
    "hyperbolic_plane_h2xr": hyperbolic_plane_h2xr,
    "clifford_torus": clifford_torus,
    "flat_torus_s4": flat_torus_s4,
    "nil_vertical_cylinder": nil_vertical_cylinder,
}
