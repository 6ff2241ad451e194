import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from qframes.coord_frame import (
    CoordFrame,
    DualFrame,
    FrameError,
    NoiseSpec,
    analyze,
    canonical_dual,
    entf_check,
    expected_recon_error,
    frame_bounds,
    mercedes_benz_frame,
    random_dual,
    range_projector,
    reconstruct,
    synthesis_null_space,
    synthesize,
)

R2 = 1 / np.sqrt(2)
THREE = CoordFrame([[1, 0], [0, 1], [R2, R2]])


def random_frame(rng, n=None, m=None):
    n = n or int(rng.integers(1, 7))
    m = m or int(rng.integers(n, 13))
    return CoordFrame(rng.standard_normal((m, n)))


def test_analyze_examples():
    assert_allclose(analyze(CoordFrame(np.eye(2)), [3, 4]), [3, 4])
    assert_allclose(analyze(THREE, [1, 1]), [1, 1, np.sqrt(2)], atol=1e-15)
    assert_array_equal(analyze(THREE, [0, 0]), np.zeros(3))


def test_synthesize_examples():
    assert_allclose(synthesize(CoordFrame(np.eye(2)), [3, 4]), [3, 4])
    assert_allclose(synthesize(THREE, [0, 0, np.sqrt(2)]), [1, 1], atol=1e-15)
    assert_allclose(synthesize(THREE, [1, 1, -np.sqrt(2)]), [0, 0], atol=1e-15)


def test_dimension_mismatch():
    with pytest.raises(FrameError):
        analyze(THREE, [1, 2, 3])
    with pytest.raises(FrameError):
        synthesize(THREE, [1, 2])


def test_frame_validation():
    with pytest.raises(FrameError):
        CoordFrame([[1, 0], [2, 0], [3, 0]])
    with pytest.raises(FrameError):
        CoordFrame([[1, 0, 0], [0, 1, 0]])
    with pytest.raises(FrameError):
        CoordFrame([[1, np.nan], [0, 1]])


def test_frame_bounds_examples():
    b = frame_bounds(CoordFrame(np.eye(4)))
    assert (b.lower, b.upper, b.is_tight) == (1.0, 1.0, True)
    b = frame_bounds(THREE)
    assert_allclose([b.lower, b.upper], [1, 2])
    assert not b.is_tight
    b = frame_bounds(mercedes_benz_frame())
    assert_allclose([b.lower, b.upper], [1.5, 1.5])
    assert b.is_tight


def test_adjoint_relation():
    f = random_frame(np.random.default_rng(0), 4, 9)
    assert_allclose(f.synthesis_matrix(), f.analysis_matrix().T, atol=1e-14)


def test_canonical_dual_examples():
    assert_allclose(canonical_dual(CoordFrame(np.eye(3))).vectors, np.eye(3))
    mb = mercedes_benz_frame()
    assert_allclose(canonical_dual(mb).vectors, mb.vectors * 2 / 3, atol=1e-15)
    d = canonical_dual(THREE)
    assert_allclose(d.vectors.T @ THREE.vectors, np.eye(2), atol=1e-12)


def test_canonical_dual_is_pseudoinverse():
    f = random_frame(np.random.default_rng(1), 3, 7)
    assert_allclose(canonical_dual(f).vectors.T, np.linalg.pinv(f.vectors), atol=1e-12)


def test_dual_frame_contract_rejects_non_duals():
    with pytest.raises(FrameError):
        DualFrame(THREE.vectors, THREE)


def test_random_dual_basis_is_canonical():
    d = random_dual(CoordFrame(np.eye(3)), 5)
    assert_allclose(d.vectors, np.eye(3))
    assert "unique" in d.note


def test_random_dual_left_inverse_and_range_agreement():
    rng = np.random.default_rng(2)
    f = random_frame(rng, 3, 8)
    d1, d2 = random_dual(f, 1), random_dual(f, 2)
    v = rng.standard_normal((100, 3))
    for d in (d1, d2):
        assert np.max(np.abs(v @ f.vectors.T @ d.vectors - v)) <= 1e-10
    diff = d1.vectors.T - d2.vectors.T
    assert np.max(np.abs(diff)) > 1e-3
    assert_allclose(diff @ range_projector(f), 0, atol=1e-12)


def test_random_dual_deterministic():
    f = random_frame(np.random.default_rng(3), 2, 5)
    assert_array_equal(random_dual(f, 9).vectors, random_dual(f, 9).vectors)


def test_reconstruct_examples():
    rng = np.random.default_rng(4)
    f = random_frame(rng, 3, 6)
    v = rng.standard_normal(3)
    a = analyze(f, v)
    for d in (canonical_dual(f), random_dual(f, 0)):
        assert_allclose(reconstruct(d, a), v, atol=1e-10)
    d = random_dual(f, 7)
    # noise in null of the dual synthesis
    _, s, vt = np.linalg.svd(d.vectors.T)
    e = vt[-1] * 0.7
    assert_allclose(reconstruct(d, a + e), v, atol=1e-10)
    # canonical: noise orthogonal to range(A)
    e = synthesis_null_space(f) @ rng.standard_normal(3)
    assert_allclose(reconstruct(canonical_dual(f), a + e), v, atol=1e-10)


def test_null_space_orthogonal_to_range():
    f = random_frame(np.random.default_rng(5), 4, 10)
    null = synthesis_null_space(f)
    assert null.shape == (10, 6)
    assert np.max(np.abs(null.T @ f.vectors)) <= 1e-12


def test_tight_frame_norm_reduction():
    mb = mercedes_benz_frame()
    w = analyze(mb, [0.3, -1.2])
    assert_allclose(np.sum(reconstruct(canonical_dual(mb), w) ** 2), np.sum(w**2) / 1.5, rtol=1e-10)


def test_expected_error_examples():
    onb = CoordFrame(np.eye(3))
    assert_allclose(expected_recon_error(onb, canonical_dual(onb), NoiseSpec.uniform(3)), 3)
    mb = mercedes_benz_frame()
    assert_allclose(expected_recon_error(mb, canonical_dual(mb), NoiseSpec.uniform(3)), 4 / 3, rtol=1e-14)
    var = np.array([0.5, 1.0, 2.5])
    # N^2 / (M^2 a^2) sum var with N=2, M=3, a=1
    assert_allclose(expected_recon_error(mb, canonical_dual(mb), NoiseSpec(var)), 4 / 9 * var.sum(), rtol=1e-14)


def test_expected_error_monte_carlo():
    rng = np.random.default_rng(6)
    f = random_frame(rng, 3, 5)
    d = random_dual(f, 1)
    cov = np.cov(rng.standard_normal((5, 20)))
    e = rng.multivariate_normal(np.zeros(5), cov, size=100_000)
    err = np.sum((e @ d.vectors) ** 2, axis=1)
    predicted = expected_recon_error(f, d, NoiseSpec(covariance=cov))
    assert abs(err.mean() - predicted) <= 3 * err.std(ddof=1) / np.sqrt(len(err))


def test_noise_spec_validation():
    with pytest.raises(FrameError):
        NoiseSpec(covariance=[[1, 0], [0, -1]])
    with pytest.raises(FrameError):
        NoiseSpec(covariance=[[1, 0.5], [0, 1]])
    with pytest.raises(FrameError):
        NoiseSpec(variances=[-1, 1])
    with pytest.raises(FrameError):
        expected_recon_error(THREE, canonical_dual(THREE), NoiseSpec.uniform(2))


def test_entf_examples():
    r = entf_check(mercedes_benz_frame())
    assert r.is_tight and r.is_equal_norm
    assert_allclose([r.C, r.a], [1.5, 1.0])
    assert r.cn_ma2_residual <= 1e-12
    r = entf_check(CoordFrame([[1, 0], [0, 1], [1, 0]]))
    assert not r.is_tight
    assert_allclose(r.C, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_canonical_beats_random_duals(seed):
    rng = np.random.default_rng(seed)
    f = random_frame(rng)
    noise = NoiseSpec.uniform(f.M, 1.0)
    best = expected_recon_error(f, canonical_dual(f), noise)
    for k in range(5):
        assert best <= expected_recon_error(f, random_dual(f, [seed, k]), noise) * (1 + 1e-12)
