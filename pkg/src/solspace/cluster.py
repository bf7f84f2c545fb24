"""Seeded k-means partitioning with medoid representatives and on-demand
hierarchical expansion."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import ContractError, NotFoundError

MAX_ROOT_CLUSTERS = 50
LLOYD_MAX_ITER = 100

# lookup from solution indices to their weighted feature rows
PointLookup = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Cluster:
    id: str
    members: tuple[int, ...]  # solution indices, ascending
    centroid: np.ndarray
    representative: int  # medoid: member nearest the centroid
    children: Optional[tuple["Cluster", ...]] = None


@dataclass(frozen=True)
class ClusterTree:
    roots: tuple[Cluster, ...]
    k: int
    seed: int
    sse: float

    def find(self, cluster_id: str) -> Cluster:
        stack = list(self.roots)
        while stack:
            c = stack.pop()
            if c.id == cluster_id:
                return c
            if c.children:
                stack.extend(c.children)
        raise NotFoundError(f"no cluster with id {cluster_id!r}")

    def serialize(self) -> bytes:
        def enc(c: Cluster) -> dict:
            doc = {
                "id": c.id,
                "members": list(c.members),
                "representative": c.representative,
                "centroid": c.centroid.tolist(),
            }
            if c.children is not None:
                doc["children"] = [enc(ch) for ch in c.children]
            return doc

        doc = {"k": self.k, "seed": self.seed, "sse": self.sse,
               "clusters": [enc(c) for c in self.roots]}
        return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def choose_k(n: int, cap: int = MAX_ROOT_CLUSTERS) -> int:
    """Default cluster count: round(sqrt(N/2)) clamped to [1, cap]."""
    if n < 1:
        raise ContractError("choose_k needs N >= 1")
    return max(1, min(cap, round(math.sqrt(n / 2.0))))


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    first = rng.integers(n)
    centroids[0] = points[first]
    d2 = np.square(points - centroids[0]).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centroids[j] = points[idx]
        d2 = np.minimum(d2, np.square(points - centroids[j]).sum(axis=1))
    return centroids


def _lloyd(points: np.ndarray, k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, float]:
    """Lloyd iterations from a k-means++ start. Returns (labels, centroids, sse).

    Asserts the within-cluster SSE never increases across iterations.
    """
    centroids = _kmeans_pp_init(points, k, rng)
    labels = np.zeros(points.shape[0], dtype=np.int64)
    prev_sse = math.inf
    for _ in range(LLOYD_MAX_ITER):
        d2 = np.square(points[:, None, :] - centroids[None, :, :]).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        # repair empty clusters: reseed to the point farthest from its
        # centroid, but only steal from clusters that keep >= 2 members
        counts = np.bincount(new_labels, minlength=k)
        for j in range(k):
            if counts[j] == 0:
                own = d2[np.arange(len(points)), new_labels]
                movable = counts[new_labels] >= 2
                pool = np.flatnonzero(movable)
                far = int(pool[own[pool].argmax()])
                counts[new_labels[far]] -= 1
                counts[j] += 1
                centroids[j] = points[far]
                new_labels[far] = j
                d2[:, j] = np.square(points - centroids[j]).sum(axis=1)
        sse = float(d2[np.arange(len(points)), new_labels].sum())
        assert sse <= prev_sse + 1e-9, "Lloyd SSE increased"
        if np.array_equal(new_labels, labels) and prev_sse < math.inf:
            break
        labels = new_labels
        prev_sse = sse
        for j in range(k):
            centroids[j] = points[labels == j].mean(axis=0)
    d2 = np.square(points[:, None, :] - centroids[None, :, :]).sum(axis=2)
    sse = float(d2[np.arange(len(points)), labels].sum())
    return labels, centroids, sse


def _medoid_of(member_idx: np.ndarray, member_points: np.ndarray,
               centroid: np.ndarray) -> int:
    """Member nearest the centroid; ties broken by smallest solution index."""
    d2 = np.square(member_points - centroid).sum(axis=1)
    candidates = member_idx[np.flatnonzero(d2 == d2.min())]
    return int(candidates.min())


def medoid(members: np.ndarray, points: np.ndarray) -> int:
    """Medoid of an explicit member set: argmin distance to the member mean."""
    members = np.asarray(members, dtype=np.int64)
    if members.size == 0:
        raise ContractError("medoid of empty cluster")
    centroid = points[members].mean(axis=0)
    return _medoid_of(members, points[members], centroid)


def kmeans(points: np.ndarray, k: int, seed: int, *,
           indices: Optional[np.ndarray] = None,
           id_prefix: str = "c") -> ClusterTree:
    """Single-level k-means over `points` (rows = weighted feature vectors).

    `indices` maps point rows to solution indices when clustering a subset;
    identity by default. Deterministic given (points, k, seed).
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ContractError(f"k={k} out of range for N={n}")
    if indices is None:
        indices = np.arange(n, dtype=np.int64)
    rng = np.random.default_rng(seed)
    labels, centroids, sse = _lloyd(points, k, rng)
    clusters = []
    for j in range(k):
        rows = np.flatnonzero(labels == j)
        member_idx = np.sort(indices[rows])
        rep = _medoid_of(indices[rows], points[rows], centroids[j])
        clusters.append(Cluster(
            id=f"{id_prefix}{j}",
            members=tuple(int(i) for i in member_idx),
            centroid=centroids[j].copy(),
            representative=rep,
        ))
    return ClusterTree(roots=tuple(clusters), k=k, seed=seed, sse=sse)


def expand_cluster(tree: ClusterTree, cluster_id: str, k_child: int, seed: int,
                   points_for: "PointLookup") -> tuple[ClusterTree, Optional[str]]:
    """Split one root cluster into k_child sub-clusters via k-means over its
    members. Returns (new tree, diagnostic). Expanding a singleton is a no-op
    with a diagnostic; the parent representative is unchanged.

    `points_for(member_indices)` must return the weighted feature rows for
    those solution indices.
    """
    target = tree.find(cluster_id)
    if len(target.members) < 2:
        return tree, f"cluster {cluster_id} is a singleton; expansion skipped"
    members = np.array(target.members, dtype=np.int64)
    k_eff = min(k_child, len(members))
    sub = kmeans(points_for(members), k_eff, seed, indices=members,
                 id_prefix=f"{cluster_id}.")
    new_target = replace(target, children=sub.roots)

    def rebuild(c: Cluster) -> Cluster:
        if c.id == cluster_id:
            return new_target
        if c.children:
            return replace(c, children=tuple(rebuild(ch) for ch in c.children))
        return c

    roots = tuple(rebuild(c) for c in tree.roots)
    return ClusterTree(roots=roots, k=tree.k, seed=tree.seed, sse=tree.sse), None
