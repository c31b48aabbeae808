import numpy as np
import pytest

from dhrpca.dhr import DhrConfig, run_dhr
from dhrpca.errors import ContractViolation, RankDeficiencyError
from dhrpca.estimators import ceil_count
from dhrpca.kernel import (
    KernelBasis,
    KernelSpec,
    center_gram,
    cross_gram,
    gram,
    kernel_project,
    run_kernel_dhr,
    weighted_kernel_pca,
)
from dhrpca.numerics import top_d_eigen, weighted_second_moment
from dhrpca.synth import SynthConfig, generate

SPECS = [KernelSpec("linear"), KernelSpec("gaussian", bandwidth=1.5), KernelSpec("polynomial", degree=3, offset=0.5)]


def test_linear_gram_is_inner_products():
    rng = np.random.default_rng(0)
    y = rng.standard_normal((7, 4))
    np.testing.assert_allclose(gram(y, KernelSpec("linear")), y @ y.T, rtol=0, atol=1e-12)


def test_gaussian_gram_unit_diagonal():
    rng = np.random.default_rng(1)
    K = gram(rng.standard_normal((5, 3)) * 10, KernelSpec("gaussian", bandwidth=0.7))
    np.testing.assert_array_equal(np.diag(K), np.ones(5))


def test_polynomial_hand_example():
    K = gram([[1.0, 0.0], [0.0, 1.0]], KernelSpec("polynomial", degree=2, offset=1.0))
    np.testing.assert_allclose(K, [[4.0, 1.0], [1.0, 4.0]], rtol=0, atol=1e-15)
    scalar = [[(x[0] * z[0] + x[1] * z[1] + 1.0) ** 2 for z in ([1, 0], [0, 1])] for x in ([1, 0], [0, 1])]
    np.testing.assert_array_equal(K, scalar)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
@pytest.mark.parametrize("seed", range(5))
def test_gram_psd(spec, seed):
    rng = np.random.default_rng(seed)
    K = gram(rng.standard_normal((15, 4)), spec)
    assert np.array_equal(K, K.T)
    assert np.linalg.eigvalsh(K).min() >= -1e-8 * max(1.0, np.abs(K).max())


def test_kernel_spec_validation():
    for bad in (dict(kind="rbf"), dict(kind="gaussian", bandwidth=0.0), dict(kind="polynomial", degree=0),
                dict(kind="polynomial", degree=1.5)):
        with pytest.raises(ContractViolation):
            KernelSpec(**bad)


@pytest.mark.parametrize("seed", range(5))
def test_linear_kernel_projections_match_linear_pca(seed):
    rng = np.random.default_rng(seed)
    y = rng.standard_normal((12, 4))
    a = rng.uniform(size=12)
    a[:3] = 0.0
    basis = weighted_kernel_pca(gram(y, KernelSpec()), a, 2)
    lin = top_d_eigen(weighted_second_moment(y, a), 2)
    k_proj = gram(y, KernelSpec()) @ basis.coefficients
    l_proj = y @ lin.vectors
    for q in range(2):
        sign = np.sign(k_proj[:, q] @ l_proj[:, q])
        np.testing.assert_allclose(sign * k_proj[:, q], l_proj[:, q], rtol=0, atol=1e-8)
    np.testing.assert_allclose(basis.eigenvalues, lin.eigenvalues, rtol=1e-10)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
def test_feature_space_orthonormality(spec):
    rng = np.random.default_rng(3)
    y = rng.standard_normal((20, 3))
    K = gram(y, spec)
    a = rng.uniform(0.1, 1.0, size=20)
    b = weighted_kernel_pca(K, a, 3)
    g = b.coefficients.T @ K @ b.coefficients
    np.testing.assert_allclose(np.diag(g), np.ones(3), atol=1e-8)
    assert np.abs(g - np.diag(np.diag(g))).max() <= 1e-8


def test_unit_weights_reduce_to_kernel_pca():
    rng = np.random.default_rng(4)
    y = rng.standard_normal((10, 2))
    K = gram(y, KernelSpec("gaussian", bandwidth=1.0))
    b = weighted_kernel_pca(K, np.ones(10), 2)
    vals, vecs = np.linalg.eigh(K / 10)
    np.testing.assert_allclose(b.eigenvalues, vals[::-1][:2], rtol=1e-10)
    # coefficients are eigenvectors of K/n rescaled by 1/sqrt(n mu)
    for q in range(2):
        u = vecs[:, -1 - q]
        c = b.coefficients[:, q] / b.normalization[q]
        assert abs(abs(c @ u) - 1.0) <= 1e-8


def test_single_active_point():
    rng = np.random.default_rng(5)
    y = rng.standard_normal((4, 3))
    K = gram(y, KernelSpec())
    b = weighted_kernel_pca(K, [0.0, 0.6, 0.0, 0.0], 1)
    assert np.count_nonzero(b.coefficients[:, 0]) == 1
    w = y.T @ b.coefficients[:, 0]
    np.testing.assert_allclose(abs(w @ y[1]) / np.linalg.norm(y[1]), 1.0, atol=1e-12)
    with pytest.raises(RankDeficiencyError):
        weighted_kernel_pca(K, [0.0, 0.6, 0.0, 0.0], 2)


def test_rank_deficiency_from_spectrum():
    y = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    with pytest.raises(RankDeficiencyError):
        weighted_kernel_pca(gram(y, KernelSpec()), np.ones(3), 2)


def test_kernel_project_examples():
    b = KernelBasis(np.array([[0.0], [1.0], [0.0]]), np.ones(1), np.ones(1))
    assert kernel_project(b, [0.3, -2.5, 7.0])[0] == -2.5
    assert np.all(kernel_project(b, np.zeros(3)) == 0.0)
    with pytest.raises(ContractViolation):
        kernel_project(b, np.zeros(4))


def test_kernel_project_out_of_sample_linear():
    rng = np.random.default_rng(6)
    y = rng.standard_normal((9, 3))
    spec = KernelSpec()
    b = weighted_kernel_pca(gram(y, spec), np.ones(9), 2)
    w = y.T @ b.coefficients
    z = rng.standard_normal((4, 3))
    np.testing.assert_allclose(kernel_project(b, cross_gram(y, z, spec)), w.T @ z.T, atol=1e-10)
    i = 2
    np.testing.assert_allclose(kernel_project(b, cross_gram(y, y[i:i + 1], spec)[:, 0]), w.T @ y[i], atol=1e-8)


@pytest.mark.parametrize("lam", [0.0, 0.1, 0.3])
@pytest.mark.parametrize("seed", range(3))
def test_linear_kernel_dhr_equivalence(lam, seed):
    y, truth = generate(SynthConfig(m=30, n=60, lam=lam, seed=seed))
    t_hat = ceil_count((1 - lam) * 60)
    cfg = DhrConfig(d=1, t_hat=t_hat)
    lin = run_dhr(y, cfg, truth, record_weights=True)
    ker = run_kernel_dhr(y, KernelSpec(), cfg, truth, record_weights=True)
    assert len(lin.trace) == len(ker.trace)
    for a, b in zip(lin.trace, ker.trace):
        assert abs(a.opt - b.opt) <= 1e-8
        assert abs(a.candidate - b.candidate) <= 1e-8
        assert (a.eta is None) == (b.eta is None)
        if a.eta is not None:
            assert abs(a.eta - b.eta) <= 1e-8
        assert abs(a.ev - b.ev) <= 1e-8
    for wa, wb in zip(lin.weight_history, ker.weight_history):
        np.testing.assert_allclose(wa, wb, rtol=0, atol=1e-8)


def test_six_point_outlier_matches_linear_path():
    rng = np.random.default_rng(17)
    y = np.zeros((6, 3))
    y[:5, 0] = [3.0, -2.0, 4.0, -1.0, 2.5]
    y[:5] += rng.standard_normal((5, 3))
    y[5] = [0.0, 100.0, 0.0]
    cfg = DhrConfig(d=1, t_hat=5)
    ker = run_kernel_dhr(y, KernelSpec(), cfg, record_weights=True)
    lin = run_dhr(y, cfg, record_weights=True)
    assert ker.weight_history[1][5] == 0.0
    np.testing.assert_allclose(ker.weight_history[1], lin.weight_history[1], atol=1e-12)


def test_gaussian_kernel_clean_manifold_smoke():
    rng = np.random.default_rng(8)
    theta = rng.uniform(0, 2 * np.pi, 60)
    y = np.column_stack([np.cos(theta), np.sin(theta)]) + 0.05 * rng.standard_normal((60, 2))
    res = run_kernel_dhr(y, KernelSpec("gaussian", bandwidth=0.5), DhrConfig(d=2, t_hat=30, patience=3))
    opts = res.trace.column("opt")
    assert all(b >= a for a, b in zip(opts, opts[1:]))
    assert res.termination == "plateau"


def test_centering_option():
    rng = np.random.default_rng(9)
    y = rng.standard_normal((20, 3)) + 5.0
    K = gram(y, KernelSpec())
    Kc = center_gram(K)
    yc = y - y.mean(axis=0)
    np.testing.assert_allclose(Kc, yc @ yc.T, atol=1e-10)
    res = run_kernel_dhr(y, KernelSpec(), DhrConfig(d=1, t_hat=15), center=True)
    assert res.iterations_run >= 1
