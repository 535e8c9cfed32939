import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from immerse.geometry.alignment import rigid_alignment
from immerse.geometry.chart_manifold import ClosedForm
from immerse.geometry.errors import (
    ConfigurationError,
    FrameNotInStructure,
    OutOfDomain,
    ResidualGate,
    ShapeError,
)
from immerse.geometry.homogeneous_models import realize_target
from immerse.geometry.immersion_solver import (
    ELEMENT,
    EXPLICIT,
    InitialCondition,
    LambdaField,
    build_lambda,
    holonomy_residual,
    holonomy_scan,
    integrate_along_curve,
    solve_grid,
    stencil_weights,
    sweep_order,
    uniqueness_check,
)
from immerse.store.fixtures import (
    clifford_torus,
    flat_plane,
    flat_torus_s4,
    hyperbolic_plane_h2xr,
    nil_vertical_cylinder,
    unit_sphere,
)


def solve(problem, **kwargs):
    return solve_grid(problem.data, problem.frame, realize_target(problem.model), problem.grid, problem.spec,
                      problem.initial_condition(), **kwargs)


def exact_points(problem):
    return np.stack([problem.exact_point(x) for x in problem.grid.nodes().reshape(-1, problem.grid.dim)])


def lambda_of(problem):
    return LambdaField(problem.data, problem.frame, realize_target(problem.model), problem.spec)


@pytest.fixture(scope="module")
def sphere_solution():
    problem = unit_sphere(samples=41)
    return problem, solve(problem, step_refine=4)


# ---------------------------------------------------------
# Pulled-back forms
# ---------------------------------------------------------
def test_flat_lambda_is_the_tautological_form():
    problem = flat_plane(samples=5)
    v = np.array([0.3, -1.2])
    theta, omega = build_lambda(problem.data, problem.frame, np.zeros(2), v, problem.spec)
    assert np.allclose(theta, [0.3, -1.2, 0.0])
    assert np.allclose(omega, 0.0)


def test_sphere_lambda():
    problem = unit_sphere(samples=11)
    x = np.array([np.pi / 2, 1.0])
    lam = lambda_of(problem)
    theta, omega = lam(x, [1.0, 0.0])
    assert np.allclose(theta, [1.0, 0.0, 0.0])
    assert np.allclose(omega, -omega.T, atol=1e-9)
    theta, _ = lam(np.array([1.0, 1.0]), [0.0, 1.0])
    assert np.allclose(theta, [0.0, np.sin(1.0), 0.0])
    assert lam.max_admissibility([problem.grid.node((i, 5)) for i in range(1, 10)]) < 1e-8


def test_frames_outside_the_structure_are_refused():
    problem = unit_sphere(samples=11)
    identity = ClosedForm.constant(np.eye(3), 2, domain=problem.grid.box)
    with pytest.raises(FrameNotInStructure):
        build_lambda(problem.data, identity, np.array([1.0, 1.0]), [1.0, 0.0], problem.spec)


def test_lambda_checks_dimensions():
    problem = unit_sphere(samples=11)
    with pytest.raises(ShapeError):
        LambdaField(problem.data, problem.frame, realize_target(flat_torus_s4(samples=5).model))


# ---------------------------------------------------------
# Integration
# ---------------------------------------------------------
def test_flat_segment_moves_the_point_linearly():
    problem = flat_plane(samples=5)
    target = realize_target(problem.model)
    path = integrate_along_curve(lambda_of(problem), target, target.identity(), [[0.0, 0.0], [0.5, 0.3]])
    assert np.allclose(target.point(path[-1]), [0.5, 0.3, 0.0], atol=1e-12)
    assert np.allclose(target.frame(path[-1]), np.eye(3), atol=1e-12)


def test_curves_must_stay_in_the_chart():
    problem = flat_plane(samples=5)
    target = realize_target(problem.model)
    with pytest.raises(OutOfDomain):
        integrate_along_curve(lambda_of(problem), target, target.identity(), [[0.0, 0.0], [3.0, 0.0]])


def test_sweep_order_must_be_a_permutation():
    assert sweep_order(None, 2) == (0, 1)
    assert sweep_order([1, 0], 2) == (1, 0)
    with pytest.raises(ConfigurationError):
        sweep_order([0, 0], 2)


# ---------------------------------------------------------
# Reconstruction
# ---------------------------------------------------------
def test_flat_plane_is_reconstructed_exactly():
    problem = flat_plane(samples=11)
    solution = solve(problem)
    assert np.max(np.abs(solution.points.reshape(-1, 3) - exact_points(problem))) < 1e-12
    report = solution.verification
    assert report.pullback_metric < 1e-12
    assert report.differential < 1e-12
    assert report.alpha_recovery < 1e-12
    assert report.frame_preservation < 1e-12


@pytest.mark.parametrize("samples, nodes", [(3, 1), (5, 9), (7, 1)])
def test_small_grids_are_solved_and_verified(samples, nodes):
    problem = flat_plane(samples=samples)
    solution = solve(problem)
    assert np.max(np.abs(solution.points.reshape(-1, 3) - exact_points(problem))) < 1e-12
    report = solution.verification
    assert report.nodes == nodes
    assert report.differential < 1e-12
    assert report.alpha_recovery < 1e-12


def test_boundary_nodes_of_the_sphere_are_reached():
    problem = unit_sphere(samples=11)
    solution = solve(problem, step_refine=8)
    corners = [(0, 0), (0, 10), (10, 0), (10, 10)]
    for index in corners:
        assert np.allclose(solution.point(index), problem.exact_point(problem.grid.node(index)), atol=1e-4)
    assert solution.verification.alpha_recovery is not None


def test_stencil_weights():
    assert np.allclose(stencil_weights(7, 3), np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0,
                       atol=1e-15)
    assert stencil_weights(3, 0) == pytest.approx((-1.5, 2.0, -0.5))
    offsets = np.arange(7) - 1
    for power in range(7):
        expected = 1.0 if power == 1 else 0.0
        assert np.dot(stencil_weights(7, 1), offsets ** power) == pytest.approx(expected, abs=1e-9)


def test_sphere_reconstruction(sphere_solution):
    problem, solution = sphere_solution
    points = solution.points.reshape(-1, 3)
    assert np.max(np.abs(np.linalg.norm(points, axis=1) - 1.0)) < 1e-6
    assert np.max(np.abs(points - exact_points(problem))) < 1e-6
    report = solution.verification
    assert report.pullback_metric < 1e-6
    assert report.alpha_recovery < 1e-4
    assert report.frame_preservation < 1e-7
    assert report.passed(1e-6, alpha_tol=1e-4)
    assert solution.gate.passed(1e-6)


def test_sphere_matches_after_rigid_alignment(sphere_solution):
    problem, solution = sphere_solution
    moved = solution.points.reshape(-1, 3) @ Rotation.from_euler("xyz", [0.3, -0.2, 1.1]).as_matrix().T + 2.0
    alignment = rigid_alignment(moved, exact_points(problem))
    assert alignment.max_error < 1e-6


def test_sphere_error_shrinks_at_fourth_order():
    errors = []
    for samples in (21, 41):
        problem = unit_sphere(samples=samples, frame_twist=1.0)
        solution = solve(problem, step_refine=1, verify=False)
        coarse = solution.points[::(samples - 1) // 20, ::(samples - 1) // 20].reshape(-1, 3)
        reference = exact_points(unit_sphere(samples=21))
        errors.append(np.max(np.abs(coarse - reference)))
    assert errors[1] > 1e-10
    assert errors[0] / errors[1] >= 8.0


def test_twisted_frame_varies_lambda_along_phi_lines():
    lam = lambda_of(unit_sphere(samples=11, frame_twist=1.0))
    plain = lambda_of(unit_sphere(samples=11))
    assert np.max(np.abs(lam.stacks([1.0, 0.5])[1] - lam.stacks([1.0, 2.0])[1])) > 1e-2
    assert np.allclose(plain.stacks([1.0, 0.5])[1], plain.stacks([1.0, 2.0])[1], atol=1e-9)


def test_h2xr_slice_stays_at_height_zero():
    problem = hyperbolic_plane_h2xr(samples=21)
    solution = solve(problem, step_refine=2)
    points = solution.points.reshape(-1, 4)
    assert np.max(np.abs(points[:, 3] - points[0, 3])) < 1e-9
    lorentz = -points[:, 0] ** 2 + points[:, 1] ** 2 + points[:, 2] ** 2
    assert np.max(np.abs(lorentz + 1.0)) < 1e-9
    assert np.max(np.abs(points - exact_points(problem))) < 1e-6


@pytest.mark.parametrize("factory", [
    lambda: clifford_torus(samples=11),
    lambda: nil_vertical_cylinder(samples=11),
], ids=["clifford_torus", "nil_cylinder"])
def test_constant_lambda_fixtures_are_exact(factory):
    problem = factory()
    solution = solve(problem)
    assert np.max(np.abs(solution.points.reshape(-1, solution.points.shape[-1]) - exact_points(problem))) < 1e-10


def test_incompatible_data_hits_the_gate():
    problem = unit_sphere(samples=11, alpha_scale=1.1)
    with pytest.raises(ResidualGate) as info:
        solve(problem)
    assert info.value.report is not None
    forced = solve(problem, force=True, verify=False)
    assert forced.points.shape == (11, 11, 3)


def test_wrong_initial_frame_fails_frame_preservation():
    problem = unit_sphere(samples=21)
    x0 = problem.x0
    shear = np.array([[1.0, 0.3, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    initial = InitialCondition(EXPLICIT, point=problem.exact_point(x0), frame=problem.exact_map(x0) @ shear)
    solution = solve_grid(problem.data, problem.frame, realize_target(problem.model), problem.grid, problem.spec,
                          initial)
    assert solution.verification.frame_preservation > 1e-2
    assert "frame_preservation" in solution.verification.failed(1e-6, alpha_tol=1e-4)


def test_rigid_motion_equivariance():
    problem = unit_sphere(samples=21)
    target = realize_target(problem.model)
    first = solve(problem, verify=False)
    G = target.random_element(np.random.default_rng(12), scale=1.0)
    moved = InitialCondition(ELEMENT, element=G @ first.elements[first.x0_index])
    second = solve_grid(problem.data, problem.frame, target, problem.grid, problem.spec, moved, verify=False)
    diff = second.elements - np.einsum("ab,ijbc->ijac", G, first.elements)
    assert np.max(np.abs(diff)) < 1e-10


def test_solution_tables():
    problem = flat_plane(samples=5)
    solution = solve(problem, verify=False)
    table = solution.to_frame()
    assert list(table.columns) == ["x0", "x1", "f0", "f1", "f2"]
    assert len(table) == 25
    assert solution.display_points().shape == (5, 5, 3)
    assert solution.diagnostics()["order"] == [0, 1]


# ---------------------------------------------------------
# Holonomy and uniqueness
# ---------------------------------------------------------
def test_flat_holonomy_vanishes():
    problem = flat_plane(samples=5)
    worst, _ = holonomy_scan(lambda_of(problem), realize_target(problem.model), problem.grid)
    assert worst < 1e-12


def test_sphere_holonomy_is_small():
    problem = unit_sphere(samples=21)
    lam = lambda_of(problem)
    target = realize_target(problem.model)
    worst, _ = holonomy_scan(lam, target, problem.grid, substeps=2, stride=4)
    assert worst < 1e-5


def test_holonomy_scales_with_the_perturbation():
    ratios = []
    for delta in (1e-3, 1e-2, 1e-1):
        problem = unit_sphere(samples=21, alpha_perturbation=delta)
        value = holonomy_residual(lambda_of(problem), realize_target(problem.model), problem.grid, (8, 3),
                                  substeps=4)
        ratios.append(value / delta)
    assert max(ratios) / min(ratios) < 3.0


def test_plaquettes_must_fit_in_the_grid():
    problem = flat_plane(samples=5)
    with pytest.raises(OutOfDomain):
        holonomy_residual(lambda_of(problem), realize_target(problem.model), problem.grid, (4, 0))


def test_sweep_orders_agree_on_compatible_data():
    flat = flat_plane(samples=7)
    assert uniqueness_check(flat.data, flat.frame, realize_target(flat.model), flat.grid, flat.spec,
                            flat.initial_condition()) < 1e-12
    sphere = unit_sphere(samples=21)
    gap = uniqueness_check(sphere.data, sphere.frame, realize_target(sphere.model), sphere.grid, sphere.spec,
                           sphere.initial_condition(), step_refine=4)
    assert gap < 1e-7


def test_sweep_orders_disagree_on_perturbed_data():
    problem = unit_sphere(samples=21, alpha_perturbation=0.1)
    gap = uniqueness_check(problem.data, problem.frame, realize_target(problem.model), problem.grid,
                           problem.spec, problem.initial_condition())
    assert gap > 1e-3


# ---------------------------------------------------------
# Alignment
# ---------------------------------------------------------
def test_rigid_alignment_recovers_a_motion():
    rng = np.random.default_rng(13)
    points = rng.normal(size=(30, 3))
    R = Rotation.from_euler("zyx", [0.4, 1.0, -0.7]).as_matrix()
    moved = points @ R + np.array([1.0, -2.0, 0.5])
    alignment = rigid_alignment(points, moved)
    assert alignment.max_error < 1e-12
    assert np.allclose(alignment.rotation, R, atol=1e-12)


def test_rigid_alignment_refuses_reflections():
    rng = np.random.default_rng(14)
    points = rng.normal(size=(30, 3))
    mirrored = points * np.array([1.0, 1.0, -1.0])
    assert rigid_alignment(points, mirrored).max_error > 0.1
    assert rigid_alignment(points, mirrored, allow_reflection=True).max_error < 1e-12
