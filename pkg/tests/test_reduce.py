import math

import numpy as np
import pytest

from solspace.errors import ContractError
from solspace.reduce import (TsneConfig, _joint_probabilities, calibrate_sigma,
                             kl_and_gradient, pca, tsne)

# ---------------------------------------------------------------------- pca

def test_pca_recovers_diagonal_line():
    # [DERIVED] points on y=x: first component is (1,1)/sqrt(2), second
    # explained variance is 0
    t = np.linspace(-1, 1, 9)
    X = np.stack([t, t], axis=1)
    emb = pca(X, out_dim=2)
    comp0 = emb.diagnostics["components"][:, 0]
    assert np.allclose(np.abs(comp0), 1 / math.sqrt(2), atol=1e-12)
    assert comp0[np.argmax(np.abs(comp0))] > 0  # sign convention
    assert emb.diagnostics["explained_variance"][1] < 1e-12


def test_pca_full_rank_reconstruction_identity():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((25, 3))
    emb = pca(X, out_dim=3)
    comps = emb.diagnostics["components"]
    recon = emb.coords @ comps.T + X.mean(axis=0)
    assert np.max(np.abs(recon - X)) < 1e-9


def test_pca_matches_svd_oracle():
    # [DERIVED] explained variances equal squared singular values / (N-1)
    rng = np.random.default_rng(1)
    X = rng.standard_normal((40, 6)) * np.array([5, 3, 2, 1, 0.5, 0.1])
    emb = pca(X, out_dim=3)
    sv = np.linalg.svd(X - X.mean(axis=0), compute_uv=False)
    oracle = (sv ** 2) / (len(X) - 1)
    assert np.allclose(emb.diagnostics["explained_variance"], oracle[:3],
                       rtol=1e-9, atol=1e-12)
    # reconstruction error equals the discarded variance
    comps = emb.diagnostics["components"]
    recon = emb.coords @ comps.T + X.mean(axis=0)
    err = np.sum((recon - X) ** 2)
    assert math.isclose(err, float(oracle[3:].sum()) * (len(X) - 1),
                        rel_tol=1e-9, abs_tol=1e-9)


def test_pca_components_orthonormal():
    rng = np.random.default_rng(2)
    emb = pca(rng.standard_normal((30, 8)), out_dim=3)
    comps = emb.diagnostics["components"]
    assert np.allclose(comps.T @ comps, np.eye(3), atol=1e-9)


def test_pca_translation_invariant():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((20, 5))
    a = pca(X, out_dim=3).coords
    b = pca(X + 1000.0, out_dim=3).coords
    assert np.allclose(a, b, atol=1e-8)


def test_pca_deterministic():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((15, 4))
    assert np.array_equal(pca(X).coords, pca(X.copy()).coords)


def test_pca_input_validation():
    with pytest.raises(ContractError):
        pca(np.zeros((1, 5)))
    bad = np.zeros((5, 5))
    bad[0, 0] = np.inf
    with pytest.raises(ContractError):
        pca(bad)


# ------------------------------------------------------------- calibration

def _achieved_perplexity(p):
    nz = p[p > 0]
    return 2.0 ** float(-(nz * np.log2(nz)).sum())


def test_calibrate_sigma_uniform_distances():
    # [TRIVIAL] equidistant neighbors: any beta gives the uniform
    # distribution, perplexity N-1 exactly
    d2 = np.full(9, 4.0)
    p, _ = calibrate_sigma(d2, perplexity=9.0)
    assert np.allclose(p, 1.0 / 9.0, atol=1e-9)


def test_calibrate_sigma_hits_target():
    rng = np.random.default_rng(5)
    d2 = rng.random(50) * 10
    for target in (2.0, 5.0, 20.0):
        p, sigma = calibrate_sigma(d2, perplexity=target)
        assert abs(_achieved_perplexity(p) - target) <= 1e-5
        assert sigma > 0
        assert math.isclose(p.sum(), 1.0, abs_tol=1e-12)


def test_joint_probabilities_valid_distribution():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((30, 4))
    P = _joint_probabilities(X, perplexity=5.0)
    assert np.allclose(P, P.T, atol=1e-15)
    assert np.all(P >= 0)
    assert math.isclose(P.sum(), 1.0, abs_tol=1e-9)


def test_joint_probabilities_handles_duplicates():
    X = np.zeros((6, 3))
    X[3:] = 1.0  # two stacks of identical rows
    P = _joint_probabilities(X, perplexity=1.5)
    assert np.all(np.isfinite(P))
    assert math.isclose(P.sum(), 1.0, abs_tol=1e-9)


# ------------------------------------------------------------------- tsne

def test_gradient_matches_finite_differences():
    # [DERIVED] central finite differences on the KL objective
    rng = np.random.default_rng(7)
    X = rng.standard_normal((10, 5))
    P = _joint_probabilities(X, perplexity=3.0)
    Y = rng.standard_normal((10, 2)) * 0.1
    _, grad = kl_and_gradient(P, Y)
    eps = 1e-6
    for i in (0, 4, 9):
        for k in range(2):
            Yp, Ym = Y.copy(), Y.copy()
            Yp[i, k] += eps
            Ym[i, k] -= eps
            klp, _ = kl_and_gradient(P, Yp)
            klm, _ = kl_and_gradient(P, Ym)
            fd = (klp - klm) / (2 * eps)
            assert math.isclose(grad[i, k], fd, rel_tol=1e-4, abs_tol=1e-7)


def test_tsne_deterministic_and_centered():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((25, 6))
    cfg = TsneConfig(perplexity=5.0, iterations=300, seed=3)
    a = tsne(X, cfg)
    b = tsne(X.copy(), cfg)
    assert np.array_equal(a.coords, b.coords)
    assert np.allclose(a.coords.mean(axis=0), 0.0, atol=1e-9)
    assert a.coords.shape == (25, 3)


def test_tsne_kl_decreases_after_exaggeration():
    rng = np.random.default_rng(9)
    X = np.concatenate([rng.standard_normal((20, 5)),
                        rng.standard_normal((20, 5)) + 6.0])
    cfg = TsneConfig(perplexity=8.0, iterations=500, seed=0)
    emb = tsne(X, cfg)
    trace = emb.diagnostics["kl_trace"]
    # after early exaggeration ends, the tail should show net improvement
    assert trace[-1] < trace[cfg.exaggeration_iters] + 1e-9
    assert emb.diagnostics["kl_divergence"] == trace[-1]


def test_tsne_separates_two_blobs_small():
    rng = np.random.default_rng(10)
    a = rng.normal(0.0, 0.3, size=(15, 4))
    b = rng.normal(5.0, 0.3, size=(15, 4))
    X = np.concatenate([a, b])
    emb = tsne(X, TsneConfig(perplexity=5.0, iterations=400, seed=1))
    Y = emb.coords
    intra = max(np.linalg.norm(Y[:15] - Y[:15].mean(axis=0), axis=1).max(),
                np.linalg.norm(Y[15:] - Y[15:].mean(axis=0), axis=1).max())
    inter = np.linalg.norm(Y[:15].mean(axis=0) - Y[15:].mean(axis=0))
    assert inter > intra  # clusters end up separated


def test_tsne_duplicate_rows_do_not_crash():
    X = np.zeros((8, 3))
    X[4:] = 1.0
    emb = tsne(X, TsneConfig(perplexity=2.0, iterations=250, seed=0))
    assert np.all(np.isfinite(emb.coords))


def test_tsne_progress_callback_fires():
    rng = np.random.default_rng(11)
    seen = []
    tsne(rng.standard_normal((12, 4)),
         TsneConfig(perplexity=3.0, iterations=250, seed=0),
         progress=lambda it, kl: seen.append((it, kl)))
    assert seen[0][0] == 0 and seen[-1][0] == 249
    assert all(np.isfinite(kl) for _, kl in seen)


def test_tsne_config_validation():
    with pytest.raises(ContractError):
        TsneConfig(iterations=100).validate(50)
    with pytest.raises(ContractError):
        TsneConfig(perplexity=40.0).validate(10)
