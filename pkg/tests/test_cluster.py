import itertools
import math

import numpy as np
import pytest

from solspace.cluster import (ClusterTree, choose_k, expand_cluster, kmeans,
                              medoid)
from solspace.errors import ContractError, NotFoundError


def _best_tree(points, k, restarts=10):
    trees = [kmeans(points, k, seed) for seed in range(restarts)]
    return min(trees, key=lambda t: t.sse)


# ---------------------------------------------------------------- choose_k

def test_choose_k_examples():
    # [TRIVIAL] round(sqrt(N/2)) clamped to [1, 50]
    assert choose_k(1) == 1
    assert choose_k(2) == 1
    assert choose_k(8) == 2
    assert choose_k(200) == 10
    assert choose_k(16_800) == 50  # sqrt(8400) ~ 91.7, capped
    with pytest.raises(ContractError):
        choose_k(0)


# ------------------------------------------------------------------ kmeans

def test_two_obvious_pairs():
    # [DERIVED] two tight pairs: optimal SSE is the two within-pair spreads
    pts = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
    tree = _best_tree(pts, 2)
    parts = sorted(sorted(c.members) for c in tree.roots)
    assert parts == [[0, 1], [2, 3]]
    assert math.isclose(tree.sse, 1.0, abs_tol=1e-12)  # 2 * (0.5^2 + 0.5^2)


def test_k_equals_n_gives_zero_sse():
    rng = np.random.default_rng(0)
    pts = rng.random((7, 3))
    tree = kmeans(pts, 7, seed=1)
    assert tree.sse == 0.0
    assert sorted(c.members[0] for c in tree.roots) == list(range(7))


def test_restarts_find_global_optimum_n8():
    # [DERIVED] brute force over all 2-partitions of 8 points
    rng = np.random.default_rng(5)
    pts = rng.random((8, 2))

    def sse_of(mask):
        total = 0.0
        for side in (True, False):
            grp = pts[np.array(mask) == side]
            if len(grp) == 0:
                return math.inf
            total += float(np.sum((grp - grp.mean(axis=0)) ** 2))
        return total

    best = min(sse_of([bool(b >> i & 1) for i in range(8)])
               for b in range(1, 255))
    tree = _best_tree(pts, 2, restarts=20)
    assert math.isclose(tree.sse, best, rel_tol=1e-9)


def test_kmeans_is_deterministic():
    rng = np.random.default_rng(6)
    pts = rng.random((40, 4))
    a = kmeans(pts, 5, seed=9).serialize()
    b = kmeans(pts.copy(), 5, seed=9).serialize()
    assert a == b


def test_kmeans_partitions_all_points():
    rng = np.random.default_rng(7)
    pts = rng.random((33, 3))
    tree = kmeans(pts, 6, seed=0)
    members = sorted(i for c in tree.roots for i in c.members)
    assert members == list(range(33))
    assert all(len(c.members) >= 1 for c in tree.roots)


def test_kmeans_duplicate_points_no_crash():
    pts = np.zeros((10, 2))
    tree = kmeans(pts, 3, seed=0)
    assert tree.sse == 0.0
    assert len(tree.roots) == 3


def test_kmeans_k_validation():
    pts = np.zeros((4, 2))
    with pytest.raises(ContractError):
        kmeans(pts, 0, seed=0)
    with pytest.raises(ContractError):
        kmeans(pts, 5, seed=0)


def test_kmeans_respects_index_mapping():
    pts = np.array([[0.0], [0.1], [5.0], [5.1]])
    idx = np.array([100, 101, 200, 201])
    tree = kmeans(pts, 2, seed=0, indices=idx)
    parts = sorted(sorted(c.members) for c in tree.roots)
    assert parts == [[100, 101], [200, 201]]
    reps = sorted(c.representative for c in tree.roots)
    assert set(reps) <= {100, 101, 200, 201}


# ------------------------------------------------------------------ medoid

def test_medoid_nearest_to_mean():
    # [DERIVED] mean of {0, 1, 5} is 2; nearest member is 1
    pts = np.array([[0.0], [1.0], [5.0]])
    assert medoid(np.array([0, 1, 2]), pts) == 1


def test_medoid_tie_breaks_to_smallest_index():
    pts = np.array([[0.0], [2.0]])
    assert medoid(np.array([0, 1]), pts) == 0


def test_medoid_requires_members():
    with pytest.raises(ContractError):
        medoid(np.array([], dtype=int), np.zeros((3, 2)))


def test_representative_is_member():
    rng = np.random.default_rng(8)
    pts = rng.random((50, 4))
    tree = kmeans(pts, 7, seed=2)
    for c in tree.roots:
        assert c.representative in c.members


# ------------------------------------------------------------------ expand

def test_expand_splits_only_target():
    rng = np.random.default_rng(9)
    pts = rng.random((30, 3))
    tree = kmeans(pts, 3, seed=0)
    cid = tree.roots[0].id
    tree2, diag = expand_cluster(tree, cid, 2, seed=1,
                                 points_for=lambda idx: pts[idx])
    assert diag is None
    target = tree2.find(cid)
    assert target.children is not None and len(target.children) == 2
    child_members = sorted(i for ch in target.children for i in ch.members)
    assert child_members == sorted(target.members)
    assert all(ch.id.startswith(cid + ".") for ch in target.children)
    for other in tree2.roots[1:]:
        assert other.children is None


def test_expand_singleton_is_noop_with_diagnostic():
    pts = np.array([[0.0, 0.0], [9.0, 9.0]])
    tree = kmeans(pts, 2, seed=0)
    single = tree.roots[0].id
    tree2, diag = expand_cluster(tree, single, 2, seed=0,
                                 points_for=lambda idx: pts[idx])
    assert diag is not None and "singleton" in diag
    assert tree2.serialize() == tree.serialize()


def test_expand_unknown_cluster():
    tree = kmeans(np.zeros((3, 2)), 1, seed=0)
    with pytest.raises(NotFoundError):
        expand_cluster(tree, "nope", 2, seed=0, points_for=lambda i: np.zeros((len(i), 2)))


def test_expand_recovers_planted_subblobs():
    # parent cluster made of two well-separated blobs: expansion finds them
    rng = np.random.default_rng(10)
    a = rng.normal(0.0, 0.05, size=(20, 2))
    b = rng.normal(1.0, 0.05, size=(20, 2))
    far = rng.normal(50.0, 0.05, size=(10, 2))
    pts = np.concatenate([a, b, far])
    tree = kmeans(pts, 2, seed=0)
    parent = next(c for c in tree.roots if 0 in c.members)
    tree2, _ = expand_cluster(tree, parent.id, 2, seed=0,
                              points_for=lambda idx: pts[idx])
    kids = tree2.find(parent.id).children
    sets = [set(ch.members) for ch in kids]
    assert {frozenset(s) for s in sets} == {frozenset(range(20)),
                                            frozenset(range(20, 40))}


def test_tree_serialize_roundtrip_is_json():
    import json
    tree = kmeans(np.random.default_rng(11).random((12, 3)), 3, seed=4)
    doc = json.loads(tree.serialize().decode())
    assert doc["k"] == 3 and len(doc["clusters"]) == 3
