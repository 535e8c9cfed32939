import numpy as np
import pytest
from scipy.linalg import expm

from immerse.geometry.errors import DegenerateForm, SpecViolation
from immerse.geometry.g_structure import UNITARY, GStructuredSpace, SymPlusPerp
from immerse.geometry.homogeneous_models import (
    ComplexSpaceForm,
    EKappaTau,
    LieGroupLeftInvariant,
    Product,
    SpaceForm,
    characteristic_tensors,
    koszul_gamma,
)

MODELS = [
    SpaceForm(0.0, 3),
    SpaceForm(1.0, 3),
    SpaceForm(-0.5, 3, 1),
    ComplexSpaceForm(1.0, 4),
    ComplexSpaceForm(-2.0, 4, 2),
    EKappaTau(0.0, 0.5),
    EKappaTau(1.0, 0.3),
    EKappaTau(-1.0, 0.4),
    LieGroupLeftInvariant.named("heisenberg"),
    LieGroupLeftInvariant.named("so3"),
    LieGroupLeftInvariant.named("heisenberg", connection="flat"),
    Product((SpaceForm(-1.0, 2), SpaceForm(0.0, 1))),
]


def standard_tensors(model):
    return characteristic_tensors(model, model.structure_space())


def transported(space, A):
    Ainv = np.linalg.inv(A)
    return GStructuredSpace(
        kind=space.kind,
        dim=space.dim,
        form=None if space.form is None else Ainv.T @ space.form @ Ainv,
        index=space.index,
        unit=None if space.unit is None else A @ space.unit,
        J=None if space.J is None else A @ space.J @ Ainv,
        frame=None if space.frame is None else A,
        orientation=space.orientation,
    )


def test_flat_space_form_is_zero():
    tensors = standard_tensors(SpaceForm(0.0, 3))
    assert np.all(tensors.stacks.curvature == 0.0)
    assert np.all(tensors.stacks.torsion == 0.0)
    assert tensors.inner(np.array([1.0, 2.0, 3.0])).norm() == 0.0


def test_unit_sphere_curvature():
    tensors = standard_tensors(SpaceForm(1.0, 3))
    e1, e2, _ = np.eye(3)
    assert np.allclose(tensors.curvature(e1, e2) @ e1, -e2)


def test_complex_space_form_holomorphic_curvature():
    model = ComplexSpaceForm(1.5, 4)
    tensors = standard_tensors(model)
    J = model.structure_space().J
    rng = np.random.default_rng(21)
    for _ in range(10):
        X = rng.normal(size=4)
        X /= np.linalg.norm(X)
        assert (tensors.curvature(X, J @ X) @ (J @ X)) @ X == pytest.approx(1.5)
        assert tensors.inner(X).norm() == 0.0


def test_ekappatau_with_zero_tau_matches_product():
    kappa = 0.7
    e_tensors = standard_tensors(EKappaTau(kappa, 0.0))
    p_tensors = standard_tensors(Product((SpaceForm(kappa, 2), SpaceForm(0.0, 1))))
    # product coordinates (h1, h2, t) to (xi, h1, h2)
    P = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    rng = np.random.default_rng(22)
    for _ in range(100):
        u, w, z = rng.normal(size=(3, 3))
        lhs = e_tensors.curvature(P @ u, P @ w) @ (P @ z)
        rhs = P @ (p_tensors.curvature(u, w) @ z)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_ekappatau_on_round_sphere_family():
    tau = 0.5
    e_tensors = standard_tensors(EKappaTau(4 * tau ** 2, tau))
    s_tensors = standard_tensors(SpaceForm(tau ** 2, 3))
    assert np.max(np.abs(e_tensors.stacks.curvature - s_tensors.stacks.curvature)) < 1e-15


def test_ekappatau_sectional_curvatures():
    kappa, tau = -1.0, 0.4
    tensors = standard_tensors(EKappaTau(kappa, tau))
    xi, h1, h2 = np.eye(3)
    assert (tensors.curvature(h1, h2) @ h2) @ h1 == pytest.approx(kappa - 3 * tau ** 2)
    assert (tensors.curvature(h1, xi) @ xi) @ h1 == pytest.approx(tau ** 2)
    assert (tensors.curvature(h2, xi) @ xi) @ h2 == pytest.approx(tau ** 2)


def test_ekappatau_inner_torsion():
    tau = 0.5
    tensors = standard_tensors(EKappaTau(0.0, tau))
    xi = np.eye(3)[0]
    rng = np.random.default_rng(23)
    for _ in range(10):
        v = rng.normal(size=3)
        result = tensors.inner(v)
        assert isinstance(result, SymPlusPerp)
        assert np.max(np.abs(result.sym)) < 1e-15
        assert np.allclose(result.vector, tau * np.cross(v, xi), atol=1e-15)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: f"{m.family}-{m.params()}")
def test_tensors_are_invariant_under_structure_group(model):
    tensors = standard_tensors(model)
    space = model.structure_space()
    rng = np.random.default_rng(24)
    for _ in range(50):
        g = expm(0.7 * space.sample_algebra(rng))
        u, w, z = rng.normal(size=(3, model.dim))
        lhs = tensors.curvature(g @ u, g @ w) @ (g @ z)
        assert np.max(np.abs(lhs - g @ tensors.curvature(u, w) @ z)) < 1e-10
        assert np.max(np.abs(tensors.torsion(g @ u, g @ w) - g @ tensors.torsion(u, w))) < 1e-10
        moved = space.project(g @ tensors.representative(u) @ np.linalg.inv(g))
        assert (tensors.inner(g @ u) - moved).norm() < 1e-10


@pytest.mark.parametrize("model", MODELS, ids=lambda m: f"{m.family}-{m.params()}")
def test_tensors_do_not_depend_on_the_frame(model):
    if model.family == "product":
        pytest.skip("transported product spaces are covered by their factors")
    rng = np.random.default_rng(25)
    A = np.eye(model.dim) + 0.3 * rng.normal(size=(model.dim, model.dim))
    if np.linalg.det(A) < 0:
        A[:, -1] *= -1
    Z = transported(model.structure_space(), A)
    on_z = characteristic_tensors(model, Z)
    std = standard_tensors(model)
    for _ in range(10):
        u, w, z = rng.normal(size=(3, model.dim))
        expected = A @ std.curvature(np.linalg.solve(A, u), np.linalg.solve(A, w)) @ np.linalg.solve(A, z)
        assert np.max(np.abs(on_z.curvature(u, w) @ z - expected)) < 1e-9


@pytest.mark.parametrize("model", MODELS, ids=lambda m: f"{m.family}-{m.params()}")
def test_curvature_symmetries(model):
    tensors = standard_tensors(model)
    R = tensors.stacks.curvature
    assert np.max(np.abs(R + np.swapaxes(R, 0, 1))) < 1e-14
    form = model.structure_space().form
    if model.family == "lie_group":
        if model.connection == "flat":
            return
        form = model.inner_product
    if form is None:
        return
    # <R(e_i, e_j) e_k, e_l>
    lowered = np.einsum("ijak,al->ijkl", R, form)
    assert np.max(np.abs(lowered - np.transpose(lowered, (2, 3, 0, 1)))) < 1e-12


def test_mismatched_structure_is_rejected():
    with pytest.raises(SpecViolation):
        characteristic_tensors(SpaceForm(1.0, 4), GStructuredSpace.standard(UNITARY, 4))
    with pytest.raises(SpecViolation):
        characteristic_tensors(SpaceForm(1.0, 3), SpaceForm(1.0, 3, 1).structure_space())


# ---------------------------------------------------------
# Left-invariant connections
# ---------------------------------------------------------
def test_koszul_abelian_is_zero():
    model = LieGroupLeftInvariant.named("abelian", dim=4)
    assert np.all(koszul_gamma(model) == 0.0)


def test_koszul_bi_invariant_metric():
    model = LieGroupLeftInvariant.named("so3")
    B = model.inner_product
    basis = np.eye(3)
    for X in basis:
        for Y in basis:
            for Z in basis:
                assert model.bracket(X, Y) @ B @ Z + Y @ B @ model.bracket(X, Z) == pytest.approx(0.0)
    G = koszul_gamma(model)
    for i, X in enumerate(basis):
        for Y in basis:
            assert np.allclose(G[i] @ Y, 0.5 * model.bracket(X, Y), atol=1e-15)


def test_koszul_heisenberg():
    G = koszul_gamma(LieGroupLeftInvariant.named("heisenberg"))
    e1, e2, e3 = np.eye(3)
    assert np.allclose(G[0] @ e2, 0.5 * e3)
    assert np.allclose(G[0] @ e3, -0.5 * e2)


def test_flat_left_connection_torsion_is_minus_bracket():
    model = LieGroupLeftInvariant.named("heisenberg", connection="flat")
    tensors = standard_tensors(model)
    e1, e2, e3 = np.eye(3)
    assert np.allclose(tensors.torsion(e1, e2), -e3)
    assert np.all(tensors.stacks.curvature == 0.0)


def test_structure_constants_are_validated():
    C = np.zeros((3, 3, 3))
    C[0, 1, 0], C[1, 0, 0] = 1.0, -1.0
    C[1, 2, 1], C[2, 1, 1] = 1.0, -1.0
    with pytest.raises(SpecViolation):
        LieGroupLeftInvariant(C, np.eye(3))
    C = np.zeros((2, 2, 2))
    C[0, 1, 0] = 1.0
    with pytest.raises(SpecViolation):
        LieGroupLeftInvariant(C, np.eye(2))
    with pytest.raises(DegenerateForm):
        LieGroupLeftInvariant(np.zeros((2, 2, 2)), np.diag([1.0, 0.0]))


def test_base_frame_transports_lie_tensors():
    p0 = np.array([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.5, 1.0]])
    model = LieGroupLeftInvariant.named("heisenberg", base_frame=p0)
    plain = LieGroupLeftInvariant.named("heisenberg")
    G = koszul_gamma(plain)
    tensors = standard_tensors(model)
    v = np.array([0.3, -1.0, 0.7])
    expected = np.linalg.solve(p0, np.tensordot(p0 @ v, G, axes=(0, 0)) @ p0)
    assert np.allclose(tensors.representative(v), expected)
