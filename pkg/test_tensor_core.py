import numpy as np
import pytest

from immerse.geometry.errors import DegenerateForm, SingularFrame, SpecViolation
from immerse.geometry.tensor_core import (
    Bilinear,
    ad_conjugate,
    commutator,
    complex_structure,
    form_polar,
    gram_schmidt,
    isometry_defect,
    oriented_cross,
    standard_form,
    transpose_wrt,
)


def _gauss_inverse(p):
    n = p.shape[0]
    aug = np.hstack([p.astype(float), np.eye(n)])
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(aug[col:, col])))
        aug[[col, pivot]] = aug[[pivot, col]]
        aug[col] /= aug[col, col]
        for row in range(n):
            if row != col:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, n:]


def test_ad_conjugate_identity_and_scalar():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(3, 3))
    assert np.allclose(ad_conjugate(np.eye(3), X), X, atol=1e-15)
    assert np.allclose(ad_conjugate(2 * np.eye(3), X), X, atol=1e-14)


def test_ad_conjugate_matches_elimination_oracle():
    rng = np.random.default_rng(2)
    p = rng.normal(size=(4, 4)) + 4 * np.eye(4)
    X = rng.normal(size=(4, 4))
    expected = p @ X @ _gauss_inverse(p)
    assert np.max(np.abs(ad_conjugate(p, X) - expected)) < 1e-12


def test_ad_conjugate_is_lie_homomorphism():
    rng = np.random.default_rng(3)
    for _ in range(20):
        p = rng.normal(size=(4, 4)) + 3 * np.eye(4)
        X, Y = rng.normal(size=(2, 4, 4))
        lhs = ad_conjugate(p, commutator(X, Y))
        rhs = commutator(ad_conjugate(p, X), ad_conjugate(p, Y))
        assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_ad_conjugate_rejects_singular_frame():
    p = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularFrame):
        ad_conjugate(p, np.eye(2))


def test_transpose_wrt_euclidean_is_transpose():
    T = np.arange(9.0).reshape(3, 3)
    assert np.array_equal(transpose_wrt(np.eye(3), T), T.T)


def test_transpose_wrt_minkowski_elementary():
    B = Bilinear(np.diag([1.0, 1.0, -1.0]), (2, 1))
    T = np.zeros((3, 3))
    T[0, 2] = 1.0
    expected = np.zeros((3, 3))
    expected[2, 0] = -1.0
    Ts = transpose_wrt(B, T)
    assert np.allclose(Ts, expected)
    for v in np.eye(3):
        for w in np.eye(3):
            assert B(T @ v, w) == pytest.approx(B(v, Ts @ w))


def test_transpose_wrt_properties():
    rng = np.random.default_rng(4)
    G = rng.normal(size=(4, 4))
    B = Bilinear(G @ G.T + np.diag([1.0, 1.0, 1.0, -9.0]))
    X, Y = rng.normal(size=(2, 4, 4))
    assert np.max(np.abs(transpose_wrt(B, transpose_wrt(B, X)) - X)) < 1e-12
    assert np.max(np.abs(transpose_wrt(B, X @ Y) - transpose_wrt(B, Y) @ transpose_wrt(B, X))) < 1e-10
    A = X - transpose_wrt(B, X)
    assert np.allclose(transpose_wrt(B, A), -A, atol=1e-12)


def test_transpose_wrt_degenerate_form():
    with pytest.raises(DegenerateForm):
        transpose_wrt(np.diag([1.0, 0.0]), np.eye(2))


def test_bilinear_signature_checks():
    assert Bilinear(np.diag([2.0, -1.0, 3.0])).signature == (2, 1)
    with pytest.raises(DegenerateForm):
        Bilinear(np.eye(3), (2, 1))
    with pytest.raises(DegenerateForm):
        Bilinear(np.diag([1.0, 0.0]))
    with pytest.raises(SpecViolation):
        Bilinear(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_bilinear_is_exactly_symmetric():
    raw = np.array([[1.0, 0.3 + 1e-12], [0.3, 2.0]])
    B = Bilinear(raw)
    assert np.array_equal(B.entries, B.entries.T)


def test_form_polar_lands_in_isometry_group():
    rng = np.random.default_rng(5)
    eta = standard_form(3, 1)
    boost = np.array([[1.0, 0.0, 0.0], [0.0, np.cosh(0.4), np.sinh(0.4)], [0.0, np.sinh(0.4), np.cosh(0.4)]])
    Q = boost + 1e-6 * rng.normal(size=(3, 3))
    R = form_polar(Q, eta)
    assert isometry_defect(R, eta) < 1e-12
    assert np.max(np.abs(R - boost)) < 1e-5


def test_gram_schmidt_orders_by_sign():
    G = np.diag([-1.0, 1.0, 1.0])
    p = gram_schmidt(np.eye(3), G, index=1)
    assert np.allclose(p.T @ G @ p, standard_form(3, 1))


def test_oriented_cross_euclidean():
    e1, e2, e3 = np.eye(3)
    assert np.allclose(oriented_cross(np.eye(3), e1, e2), e3)
    assert np.allclose(oriented_cross(np.eye(3), e1, e2, orientation=-1), -e3)


def test_complex_structure_squares_to_minus_identity():
    J = complex_structure(4)
    assert np.allclose(J @ J, -np.eye(4))
