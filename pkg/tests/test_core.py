import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solspace.core import (METRIC_CHANNELS, SHAPE_BINS, FeatureVector,
                           FeatureWeights, normalize_metrics,
                           weighted_distance, weighted_distances,
                           weighted_feature_matrix)


def fv(metric, shape):
    return FeatureVector(metric=np.asarray(metric, float),
                         shape=np.asarray(shape, float))
from solspace.errors import ContractError, IngestError

from conftest import space_from_matrix


# ---------------------------------------------------------------- normalize

def test_normalize_simple_column():
    # [TRIVIAL] min-max of [1, 3] is [0, 1]
    scaled, bounds = normalize_metrics(np.array([[1.0], [3.0]]))
    assert scaled.tolist() == [[0.0], [1.0]]
    assert bounds.tolist() == [[1.0, 3.0]]


def test_normalize_midpoint():
    scaled, _ = normalize_metrics(np.array([[0.0], [5.0], [10.0]]))
    assert scaled[:, 0].tolist() == [0.0, 0.5, 1.0]


def test_normalize_constant_column_maps_to_half():
    scaled, bounds = normalize_metrics(np.array([[7.0, 1.0], [7.0, 2.0]]))
    assert scaled[:, 0].tolist() == [0.5, 0.5]
    assert bounds[0].tolist() == [7.0, 7.0]


def test_normalize_rejects_non_finite_with_location():
    raw = np.ones((3, 4))
    raw[2, 1] = np.nan
    with pytest.raises(IngestError) as exc:
        normalize_metrics(raw)
    assert "2" in str(exc.value) and "1" in str(exc.value)


def test_normalize_idempotent_on_unit_range():
    rng = np.random.default_rng(3)
    raw = rng.random((20, 5))
    scaled, _ = normalize_metrics(raw)
    again, _ = normalize_metrics(scaled)
    assert np.allclose(scaled, again, atol=1e-12)


# ----------------------------------------------------------------- weights

def test_uniform_weights_sum_to_one():
    w = FeatureWeights.uniform(11, SHAPE_BINS)
    assert math.isclose(w.metric.sum(), 1.0, abs_tol=1e-12)
    assert math.isclose(w.shape.sum(), 1.0, abs_tol=1e-12)


def test_weights_validation():
    with pytest.raises(ContractError):
        FeatureWeights(metric=np.array([0.5, 0.4]),
                       shape=np.full(SHAPE_BINS, 1.0 / SHAPE_BINS), lam=0.5)
    with pytest.raises(ContractError):
        FeatureWeights(metric=np.array([0.5, 0.5]),
                       shape=np.full(SHAPE_BINS, 1.0 / SHAPE_BINS), lam=1.5)


# ---------------------------------------------------------------- distance

def _rand_weights(rng, m, bins, lam):
    wm = rng.random(m) + 0.1
    ws = rng.random(bins) + 0.1
    return FeatureWeights(metric=wm / wm.sum(), shape=ws / ws.sum(), lam=lam)


def _oracle_distance(am, ash, bm, bsh, w):
    # straight-line reimplementation with scalar loops
    sq = 0.0
    for j in range(len(am)):
        sq += w.metric[j] * (am[j] - bm[j]) ** 2
    l1 = 0.0
    for j in range(len(ash)):
        l1 += w.shape[j] * abs(ash[j] - bsh[j])
    return w.lam * math.sqrt(sq) + (1.0 - w.lam) * l1


def test_distance_identity_is_zero():
    w = FeatureWeights.uniform(3, 4)
    a = fv([0.1, 0.2, 0.3], [0.25, 0.25, 0.25, 0.25])
    assert weighted_distance(a, a, w) == 0.0


def test_distance_metric_only_example():
    # [DERIVED] two channels, uniform weights 0.5 each, lam=1:
    # d = sqrt(0.5*(1-0)^2 + 0.5*(1-0)^2) = 1
    w = FeatureWeights(metric=np.array([0.5, 0.5]),
                       shape=np.array([1.0]), lam=1.0)
    d = weighted_distance(fv([0.0, 0.0], [0.0]), fv([1.0, 1.0], [0.0]), w)
    assert math.isclose(d, 1.0, abs_tol=1e-12)


def test_distance_matches_scalar_oracle():
    rng = np.random.default_rng(7)
    w = _rand_weights(rng, 6, 16, 0.4)
    for _ in range(50):
        am, bm = rng.random(6), rng.random(6)
        ash, bsh = rng.random(16), rng.random(16)
        got = weighted_distance(fv(am, ash), fv(bm, bsh), w)
        assert math.isclose(got, _oracle_distance(am, ash, bm, bsh, w),
                            rel_tol=1e-12, abs_tol=1e-12)


def test_vectorized_distances_match_scalar():
    rng = np.random.default_rng(8)
    w = _rand_weights(rng, 5, 8, 0.6)
    qm, qs = rng.random(5), rng.random(8)
    M, S = rng.random((30, 5)), rng.random((30, 8))
    got = weighted_distances(M, S, qm, qs, w)
    for i in range(30):
        assert math.isclose(got[i], weighted_distance(fv(M[i], S[i]), fv(qm, qs), w),
                            rel_tol=1e-12, abs_tol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_distance_is_pseudo_metric(seed, lam):
    # spec invariants: non-negative, symmetric, triangle inequality
    rng = np.random.default_rng(seed)
    w = _rand_weights(rng, 4, 6, lam)
    pts = [(rng.random(4), rng.random(6)) for _ in range(3)]
    (a, b, c) = pts
    va, vb, vc = fv(*a), fv(*b), fv(*c)
    dab = weighted_distance(va, vb, w)
    dba = weighted_distance(vb, va, w)
    dbc = weighted_distance(vb, vc, w)
    dac = weighted_distance(va, vc, w)
    assert dab >= 0.0
    assert math.isclose(dab, dba, rel_tol=1e-12, abs_tol=1e-12)
    assert dac <= dab + dbc + 1e-9


def test_weighted_feature_matrix_preserves_sq_euclid_for_lam_one():
    # with lam=1 the weighted matrix's euclidean distance equals d()
    rng = np.random.default_rng(9)
    w = _rand_weights(rng, 5, 8, 1.0)
    M, S = rng.random((10, 5)), rng.random((10, 8))
    sp = space_from_matrix(M, S)
    X = weighted_feature_matrix(sp.metric, sp.shape, w)
    for i in range(10):
        for j in range(10):
            de = float(np.linalg.norm(X[i] - X[j]))
            dd = weighted_distance(fv(M[i], S[i]), fv(M[j], S[j]), w)
            assert math.isclose(de, dd, rel_tol=1e-9, abs_tol=1e-9)


# ------------------------------------------------------------------- space

def test_space_orders_by_id_and_rejects_duplicates():
    rng = np.random.default_rng(4)
    sp = space_from_matrix(rng.random((6, 3)))
    ids = [s.id for s in sp.solutions]
    assert ids == sorted(ids)
    assert sp.index_of("s00003") == 3
    with pytest.raises(ContractError):
        sp.index_of("nope")


def test_space_serialization_is_deterministic():
    rng = np.random.default_rng(5)
    M, S = rng.random((6, 3)), rng.random((6, 64))
    a = space_from_matrix(M.copy(), S.copy()).serialize()
    b = space_from_matrix(M.copy(), S.copy()).serialize()
    assert a == b
    json.loads(a.decode())  # must be valid JSON


def test_space_arrays_are_immutable():
    sp = space_from_matrix(np.random.default_rng(6).random((4, 2)))
    with pytest.raises(ValueError):
        sp.metric[0, 0] = 9.0


def test_raw_value_roundtrip():
    raw = np.array([[2.0, 10.0], [4.0, 30.0], [3.0, 20.0]])
    scaled, bounds = normalize_metrics(raw)
    sp = space_from_matrix(scaled)
    # space_from_matrix recomputes bounds from scaled values; rebuild manually
    from solspace.core import SolutionSpace
    sp = SolutionSpace(sp.solutions, scaled, sp.shape, bounds,
                       metric_channels=sp.metric_channels)
    for i in range(3):
        for j, ch in enumerate(sp.metric_channels):
            assert math.isclose(sp.raw_value(i, ch), raw[i, j], rel_tol=1e-12)


def test_metric_channel_contract():
    # [PAPER]-aligned channel list: exactly 11 scalar metrics
    assert len(METRIC_CHANNELS) == 11
    assert "objective_value" not in METRIC_CHANNELS
