import numpy as np
import pytest
from numpy.testing import assert_allclose

from qframes.herm_space import (
    HermitianOp,
    OperatorError,
    SIGMA_Z,
    bloch_vector,
    cone_test,
    density_from_bloch,
    from_coords,
    gellmann_basis,
    hs_inner,
    hs_norm,
    is_density,
    pauli_basis,
    project_identity_component,
    psd_check,
    pure_state,
    random_density,
    random_hermitian,
    to_coords,
)

I2 = HermitianOp(np.eye(2))
KET0 = HermitianOp(np.diag([1.0, 0.0]))


def test_hermitian_validation():
    with pytest.raises(OperatorError):
        HermitianOp([[0, 1], [0, 0]])
    with pytest.raises(OperatorError):
        HermitianOp([[np.inf, 0], [0, 0]])
    # tiny drift is repaired
    m = np.array([[1, 1e-14j], [0, 1]])
    assert np.allclose(HermitianOp(m).matrix, HermitianOp(m).matrix.conj().T, atol=0)


def test_hs_inner_examples():
    assert hs_inner(I2, I2) == 2
    b = pauli_basis()
    gram = np.array([[hs_inner(x, y) for y in b.elements] for x in b.elements])
    assert_allclose(gram, np.eye(4), atol=1e-12)
    v = random_hermitian(3, np.random.default_rng(0))
    assert_allclose(hs_inner(HermitianOp(np.eye(3)), v), v.trace)
    with pytest.raises(OperatorError):
        hs_inner(I2, HermitianOp(np.eye(3)))


def test_pauli_basis_elements():
    b = pauli_basis()
    assert_allclose(b.elements[0].matrix, np.eye(2) / np.sqrt(2))
    assert_allclose(b.elements[3].matrix, SIGMA_Z / np.sqrt(2))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_gellmann_orthonormal(d):
    b = gellmann_basis(d)
    assert len(b.elements) == d * d
    gram = np.array([[hs_inner(x, y) for y in b.elements] for x in b.elements])
    assert_allclose(gram, np.eye(d * d), atol=1e-12)
    assert all(abs(e.trace) < 1e-12 for e in b.elements[1:])
    tail = np.array([to_coords(e, b).c[1:] for e in b.elements[1:]])
    assert np.linalg.matrix_rank(tail) == d * d - 1


def test_coords_examples():
    assert_allclose(to_coords(I2).c, [np.sqrt(2), 0, 0, 0], atol=1e-15)
    assert_allclose(to_coords(KET0).c, [1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)], atol=1e-15)


@pytest.mark.parametrize("d", [2, 3])
def test_isometry_and_round_trip(d):
    rng = np.random.default_rng(d)
    b = gellmann_basis(d) if d > 2 else pauli_basis()
    worst = 0.0
    for _ in range(1000):
        x, y = random_hermitian(d, rng), random_hermitian(d, rng)
        cx, cy = to_coords(x, b), to_coords(y, b)
        worst = max(worst, abs(hs_inner(x, y) - cx.c @ cy.c))
    assert worst <= 1e-10
    assert_allclose(from_coords(cx).matrix, x.matrix, atol=1e-12)
    assert_allclose(hs_norm(x) ** 2, np.sum(cx.c**2), rtol=1e-12)
    assert_allclose(cx.c[0], x.trace / np.sqrt(d), atol=1e-12)


def test_project_identity_component():
    r, t = project_identity_component(I2)
    assert t == 2 and np.allclose(r.matrix, 0)
    rho = pure_state(1.0, 0.4)
    r, t = project_identity_component(rho)
    assert abs(r.trace) <= 1e-14 and abs(t - 1) < 1e-14
    assert_allclose(r.matrix, rho.matrix - np.eye(2) / 2, atol=1e-15)
    assert abs(hs_inner(r, I2)) <= 1e-12
    r2, _ = project_identity_component(r)
    assert_allclose(r2.matrix, r.matrix, atol=0)
    v = random_hermitian(3, np.random.default_rng(1))
    r, t = project_identity_component(v)
    assert_allclose(r.matrix + t / 3 * np.eye(3), v.matrix, atol=1e-15)


def test_psd_check_examples():
    ok, lam = psd_check(HermitianOp(np.eye(2) / 2))
    assert ok and lam == pytest.approx(0.5)
    ok, lam = psd_check(HermitianOp(SIGMA_Z))
    assert not ok and lam == pytest.approx(-1)
    ok, lam = psd_check(KET0)
    assert ok and abs(lam) < 1e-15
    c = to_coords(KET0).c
    assert_allclose(c[0] ** 2, np.sum(c[1:] ** 2), atol=1e-15)


def test_cone_agrees_with_eigenvalues():
    rng = np.random.default_rng(2)
    disagreements = 0
    for _ in range(1000):
        v = random_hermitian(2, rng)
        c = to_coords(v).c
        ok, lam = psd_check(v, tol=0)
        if abs(lam) > 1e-10 and ok != cone_test(c):
            disagreements += 1
    assert disagreements == 0


def test_density_from_bloch():
    assert_allclose(density_from_bloch([0, 0, 0]).matrix, np.eye(2) / 2)
    with pytest.raises(OperatorError):
        density_from_bloch([1, 1, 0])
    rng = np.random.default_rng(3)
    for _ in range(20):
        r = rng.standard_normal(3)
        r *= rng.uniform() / np.linalg.norm(r)
        rho = density_from_bloch(r)
        assert is_density(rho)
        assert_allclose(to_coords(rho).c[0], 1 / np.sqrt(2), atol=1e-15)
        assert_allclose(bloch_vector(rho), r, atol=1e-15)


def test_pure_state_bloch_vectors():
    assert_allclose(bloch_vector(pure_state(2 * np.pi / 3, 0)), [np.sqrt(3) / 2, 0, -0.5], atol=1e-15)
    assert_allclose(bloch_vector(pure_state(2 * np.pi / 3, np.pi / 3)), [np.sqrt(3) / 4, 0.75, -0.5], atol=1e-15)
    assert_allclose(pure_state(0).matrix, KET0.matrix, atol=1e-16)


def test_random_density_is_density():
    rng = np.random.default_rng(4)
    for d in (2, 3, 4):
        assert is_density(random_density(d, rng))
