from dataclasses import replace

import numpy as np
import pytest

from immerse.geometry.chart_manifold import (
    ClosedForm,
    ConnectionField,
    MetricField,
    WhitneyData,
    assemble_whitney,
    curvature_block,
)
from immerse.geometry.compatibility import (
    CODAZZI_ALPHA,
    CODAZZI_WEINGARTEN,
    FAMILIES,
    GAUSS,
    METRIC_FAMILIES,
    RICCI,
    NodeQuantities,
    codazzi_residual,
    full_report,
    gauss_residual,
    inner_torsion_residual,
    ricci_residual,
    torsion_residuals,
    weingarten_from_alpha,
)
from immerse.geometry.errors import ShapeError
from immerse.geometry.g_structure import GStructureSpec
from immerse.geometry.homogeneous_models import ComplexSpaceForm, SpaceForm
from immerse.store.fixtures import (
    clifford_torus,
    flat_plane,
    flat_torus_s4,
    hyperbolic_plane_h2xr,
    nil_vertical_cylinder,
    unit_sphere,
)

J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def report_of(problem, **kwargs):
    kwargs.setdefault("samples_per_node", 2)
    return full_report(problem.model, problem.data, problem.spec, problem.grid, **kwargs)


def quantities(problem, x):
    return NodeQuantities(problem.model, problem.data, problem.spec, np.asarray(x, dtype=float))


# ---------------------------------------------------------
# Weingarten form
# ---------------------------------------------------------
def test_weingarten_of_the_sphere_is_minus_identity():
    problem = unit_sphere(samples=11)
    data = problem.data
    A = weingarten_from_alpha(data.g, data.g0, data.alpha0, np.array([1.0, 0.4]))
    assert A.shape == (2, 2, 1)
    assert np.allclose(A[:, :, 0], -np.eye(2), atol=1e-12)


def test_weingarten_pairs_with_alpha():
    problem = clifford_torus(samples=11)
    data = problem.data
    x = np.array([0.7, 1.1])
    A = data.a0(x)
    alpha = data.alpha0(x)
    g, g0 = data.g.matrix(x), data.g0.matrix(x)
    rng = np.random.default_rng(3)
    for _ in range(10):
        v, w = rng.normal(size=(2, 2))
        e = rng.normal(size=1)
        lhs = e @ g0 @ np.einsum("bij,i,j->b", alpha, v, w)
        rhs = -(A @ e) @ v @ g @ w
        assert lhs == pytest.approx(rhs, abs=1e-12)


# ---------------------------------------------------------
# Positive and negative controls
# ---------------------------------------------------------
@pytest.mark.parametrize("factory", [
    lambda: flat_plane(samples=7),
    lambda: unit_sphere(samples=11),
    lambda: hyperbolic_plane_h2xr(samples=9),
    lambda: clifford_torus(samples=9),
    lambda: flat_torus_s4(samples=9),
    lambda: nil_vertical_cylinder(samples=9),
], ids=["flat_plane", "unit_sphere", "h2xr", "clifford_torus", "flat_torus_s4", "nil_cylinder"])
def test_exact_fixtures_satisfy_every_equation(factory):
    report = report_of(factory())
    assert report.worst().max_norm < 1e-7
    assert report.passed(1e-7)


def test_scaled_sphere_breaks_gauss():
    report = report_of(unit_sphere(samples=11, alpha_scale=1.1))
    assert report.families[GAUSS].max_norm > 1e-2
    assert GAUSS in report.violated()
    assert report.families[CODAZZI_ALPHA].max_norm < 1e-7


def test_codazzi_residual_is_linear_in_the_perturbation():
    x = np.array([1.0, 0.5])
    e0, e1 = np.eye(2)
    values = []
    for delta in (1e-3, 1e-2, 1e-1):
        problem = unit_sphere(samples=11, alpha_perturbation=delta)
        value = codazzi_residual(problem.model, problem.data, problem.spec, x, e0, e1, e0)
        assert abs(value[0]) == pytest.approx(delta * np.cos(0.5), rel=1e-6)
        values.append(abs(value[0]))
    assert values[1] / values[0] == pytest.approx(10.0, rel=1e-6)


def test_normal_twist_breaks_ricci_only_on_the_normal_side():
    report = report_of(flat_torus_s4(samples=9, normal_twist=0.1))
    assert report.families[RICCI].max_norm > 1e-2
    assert report.families[GAUSS].max_norm < 1e-7
    assert RICCI in report.violated()


def test_ricci_vanishes_for_a_hypersurface():
    problem = unit_sphere(samples=11, alpha_scale=1.1)
    rng = np.random.default_rng(3)
    for _ in range(5):
        x = np.array([rng.uniform(0.6, 2.5), rng.uniform(0.3, 2.8)])
        v, w = rng.normal(size=(2, 2))
        e, e_prime = rng.normal(size=(2, 1))
        assert np.allclose(ricci_residual(problem.model, problem.data, problem.spec, x, v, w, e), 0.0, atol=1e-10)
        assert ricci_residual(problem.model, problem.data, problem.spec, x, v, w, e, e_prime) == \
            pytest.approx(0.0, abs=1e-10)


def test_injected_torsion_shows_up_twice():
    problem = flat_plane(samples=7)
    c = np.array([0.3, -0.2])
    eps = np.array([[0.0, 1.0], [-1.0, 0.0]])
    S = np.einsum("ij,a->iaj", eps, c)
    data = replace(problem.data, tangent_conn=ConnectionField(2, ClosedForm.constant(S, 2)))
    tangent, normal = torsion_residuals(problem.model, data, problem.spec, np.zeros(2), [1.0, 0.0], [0.0, 1.0])
    assert np.allclose(tangent, -2.0 * c, atol=1e-12)
    assert np.allclose(normal, 0.0, atol=1e-12)


def test_dimension_mismatch_is_a_shape_error():
    problem = unit_sphere(samples=11)
    with pytest.raises(ShapeError):
        full_report(SpaceForm(0.0, 4), problem.data, problem.spec, problem.grid)


# ---------------------------------------------------------
# Complex curves in C^2
# ---------------------------------------------------------
def complex_curve(alpha):
    """Flat data on C with normal bundle C, J acting on both factors."""
    n, k = 2, 2
    alpha0 = ClosedForm.constant(alpha, 2)
    g = MetricField(ClosedForm.constant(np.eye(n), 2))
    g0 = MetricField(ClosedForm.constant(np.eye(k), 2))
    a0 = ClosedForm(lambda x: weingarten_from_alpha(g, g0, alpha0, x), 2, (n, n, k))
    data = WhitneyData(
        tangent_conn=ConnectionField(n, ClosedForm.constant(np.zeros((2, n, n)), 2)),
        normal_conn=ConnectionField(k, ClosedForm.constant(np.zeros((2, k, k)), 2)),
        alpha0=alpha0,
        a0=a0,
        g=g,
        g0=g0,
    )
    J = np.zeros((4, 4))
    J[:2, :2] = J2
    J[2:, 2:] = J2
    spec = GStructureSpec.unitary(ClosedForm.constant(J, 2), data.whitney_metric())
    return data, spec


def complex_bilinear(a: complex):
    products = {(0, 0): a, (0, 1): 1j * a, (1, 0): 1j * a, (1, 1): -a}
    alpha = np.zeros((2, 2, 2))
    for (i, j), value in products.items():
        alpha[:, i, j] = [value.real, value.imag]
    return alpha


def test_complex_bilinear_alpha_preserves_the_unitary_structure():
    data, spec = complex_curve(complex_bilinear(0.3 + 0.2j))
    model = ComplexSpaceForm(0.0, 4)
    for v in np.eye(2):
        assert inner_torsion_residual(model, data, spec, np.zeros(2), v).norm() < 1e-12


def test_real_alpha_leaves_the_unitary_structure():
    alpha = np.zeros((2, 2, 2))
    alpha[0, 0, 0] = 1.0
    data, spec = complex_curve(alpha)
    residual = inner_torsion_residual(ComplexSpaceForm(0.0, 4), data, spec, np.zeros(2), [1.0, 0.0])
    assert residual.norm() > 0.1


# ---------------------------------------------------------
# Structure of the equations
# ---------------------------------------------------------
def test_curvature_blocks_of_the_whitney_connection():
    problem = unit_sphere(samples=11, alpha_perturbation=0.1)
    x = np.array([1.1, 0.8])
    q = quantities(problem, x)
    R_hat = curvature_block(assemble_whitney(problem.data), x)
    n = problem.data.n
    for i in range(n):
        for j in range(n):
            assert np.allclose(R_hat[i, j][:n, :n], q.terms[GAUSS][i, j], atol=1e-7)
            assert np.allclose(R_hat[i, j][n:, :n], q.terms[CODAZZI_ALPHA][i, j], atol=1e-7)
            assert np.allclose(R_hat[i, j][:n, n:], q.terms[CODAZZI_WEINGARTEN][i, j], atol=1e-7)
            assert np.allclose(R_hat[i, j][n:, n:], q.terms[RICCI][i, j], atol=1e-7)


def test_codazzi_forms_agree_for_isometric_data():
    problem = unit_sphere(samples=11, alpha_perturbation=0.1)
    x = np.array([0.9, 1.3])
    q = quantities(problem, x)
    g, g0 = problem.data.g.matrix(x), problem.data.g0.matrix(x)
    rng = np.random.default_rng(5)
    for _ in range(10):
        v, w, u = rng.normal(size=(3, 2))
        e = rng.normal(size=1)
        lhs = e @ g0 @ q.codazzi_alpha(v, w, u)
        rhs = -(q.codazzi_weingarten(v, w, e) @ g @ u)
        assert lhs == pytest.approx(rhs, abs=1e-8)


def test_gauss_residual_is_multilinear():
    problem = unit_sphere(samples=11, alpha_scale=1.1)
    x = np.array([1.2, 0.6])
    rng = np.random.default_rng(6)
    v, v2, w, u = rng.normal(size=(4, 2))

    def gauss(a, b, c):
        return gauss_residual(problem.model, problem.data, problem.spec, x, a, b, c)

    assert np.allclose(gauss(2.0 * v + v2, w, u), 2.0 * gauss(v, w, u) + gauss(v2, w, u), atol=1e-10)
    assert np.allclose(gauss(v, w, u), -gauss(w, v, u), atol=1e-10)
    assert np.allclose(gauss(v, v, u), 0.0, atol=1e-12)


def test_gauss_metric_form_matches_the_vector_form():
    problem = unit_sphere(samples=11, alpha_scale=1.1)
    x = np.array([1.2, 0.6])
    g = problem.data.g.matrix(x)
    rng = np.random.default_rng(7)
    v, w, u, z = rng.normal(size=(4, 2))
    vector = gauss_residual(problem.model, problem.data, problem.spec, x, v, w, u)
    scalar = gauss_residual(problem.model, problem.data, problem.spec, x, v, w, u, z)
    assert scalar == pytest.approx(z @ g @ vector, abs=1e-10)


# ---------------------------------------------------------
# Report
# ---------------------------------------------------------
def test_report_lists_every_family():
    report = report_of(unit_sphere(samples=11))
    assert tuple(report.families) == FAMILIES
    assert tuple(report.metric_forms) == METRIC_FAMILIES
    frame = report.to_frame()
    assert len(frame) == len(FAMILIES) + len(METRIC_FAMILIES)
    assert set(frame["form"]) == {"affine", "metric"}
    assert report.nodes == 7 * 7
    assert report.to_dict()["sample_count"] == report.sample_count


def test_report_is_deterministic_for_a_seed():
    problem = unit_sphere(samples=11, alpha_perturbation=0.05)
    first = report_of(problem, seed=11).to_dict()
    second = report_of(problem, seed=11).to_dict()
    assert first == second


def test_report_stride_visits_fewer_nodes():
    problem = unit_sphere(samples=11)
    assert report_of(problem, stride=3).nodes == 3 * 3
