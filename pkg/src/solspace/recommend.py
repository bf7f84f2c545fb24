"""The system half of the hybrid search: derive feature weights from seed
solutions, score and eliminate low-relevance survivors, and re-cluster what
remains."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import cluster as cluster_mod
from . import reduce as reduce_mod
from .core import FeatureWeights, SolutionSpace, weighted_distances, weighted_feature_matrix
from .errors import ContractError

VARIANCE_EPSILON = 1e-6
DEFAULT_ELIMINATION = 0.5  # fraction of survivors dropped per cycle


@dataclass(frozen=True)
class CycleResult:
    weights: FeatureWeights
    survivors: tuple[int, ...]  # solution indices, ascending
    tree: cluster_mod.ClusterTree
    embedding: reduce_mod.Embedding
    eliminated: int
    cycle: int


def seed_weights(space: SolutionSpace, seed_indices: list[int],
                 lam: float = 0.5) -> FeatureWeights:
    """Inverse-variance weights: channels the seeds agree on dominate.

    weight_j  proportional to  1 / (Var_seeds(channel_j) + eps), normalized
    within each block. A single seed has no variance; fall back to uniform.
    """
    if not seed_indices:
        raise ContractError("seed_weights needs at least one seed")
    if len(seed_indices) == 1:
        return FeatureWeights.uniform(space.n_metric, space.n_shape, lam=lam)
    idx = np.asarray(seed_indices, dtype=np.int64)
    wm = 1.0 / (space.metric[idx].var(axis=0) + VARIANCE_EPSILON)
    ws = 1.0 / (space.shape[idx].var(axis=0) + VARIANCE_EPSILON)
    return FeatureWeights(metric=wm / wm.sum(), shape=ws / ws.sum(), lam=lam)


def score_survivors(space: SolutionSpace, survivors: np.ndarray,
                    seed_indices: list[int], weights: FeatureWeights) -> np.ndarray:
    """Relevance of each survivor: minus the distance to its nearest seed.

    Higher is better; seeds score exactly 0.
    """
    survivors = np.asarray(survivors, dtype=np.int64)
    if not set(seed_indices) <= set(survivors.tolist()):
        raise ContractError("seeds must be a subset of survivors")
    m = space.metric[survivors]
    s = space.shape[survivors]
    best = np.full(len(survivors), np.inf)
    for si in seed_indices:
        d = weighted_distances(m, s, space.metric[si], space.shape[si], weights)
        best = np.minimum(best, d)
    return -best


def eliminate(survivors: np.ndarray, scores: np.ndarray, rho: float,
              seed_indices: list[int]) -> np.ndarray:
    """Keep the ceil((1-rho) * n) best-scoring survivors; ties broken by
    smaller solution index. Seeds are always kept, displacing the worst kept
    non-seeds if they fall below the cut. Never returns an empty set."""
    if not 0.0 < rho < 1.0:
        raise ContractError("elimination fraction must lie in (0,1)")
    survivors = np.asarray(survivors, dtype=np.int64)
    n = len(survivors)
    keep_n = max(1, math.ceil((1.0 - rho) * n))
    # sort by (-score, index): best score first, smaller index wins ties
    order = np.lexsort((survivors, -scores))
    kept = list(survivors[order[:keep_n]])
    seed_set = set(seed_indices)
    missing = [s for s in sorted(seed_set) if s not in kept]
    if missing:
        non_seeds = [i for i in kept if i not in seed_set]
        # displace the worst-ranked kept non-seeds
        for s in missing:
            if non_seeds:
                kept.remove(non_seeds.pop())
            kept.append(s)
    return np.array(sorted(kept), dtype=np.int64)


def run_cycle(space: SolutionSpace, survivors: np.ndarray, seed_indices: list[int],
              rho: float, k: int | None, rng_seed: int, cycle: int = 0,
              embed_method: str = "pca",
              tsne_config: reduce_mod.TsneConfig | None = None,
              lam: float = 0.5,
              progress=None) -> CycleResult:
    """One search/select/re-cluster cycle: derive weights from the current
    seeds, eliminate the least relevant survivors, then re-cluster and
    re-embed what remains in the weighted feature space."""
    survivors = np.asarray(survivors, dtype=np.int64)
    weights = seed_weights(space, seed_indices, lam=lam)
    scores = score_survivors(space, survivors, seed_indices, weights)
    new_survivors = eliminate(survivors, scores, rho, seed_indices)
    tree, embedding = cluster_and_embed(
        space, new_survivors, weights, k, rng_seed,
        embed_method=embed_method, tsne_config=tsne_config, progress=progress)
    return CycleResult(
        weights=weights,
        survivors=tuple(int(i) for i in new_survivors),
        tree=tree,
        embedding=embedding,
        eliminated=int(len(survivors) - len(new_survivors)),
        cycle=cycle,
    )


def cluster_and_embed(space: SolutionSpace, survivors: np.ndarray,
                      weights: FeatureWeights, k: int | None, rng_seed: int,
                      embed_method: str = "pca",
                      tsne_config: reduce_mod.TsneConfig | None = None,
                      progress=None) -> tuple[cluster_mod.ClusterTree, reduce_mod.Embedding]:
    """Embed the survivor set in 3D and cluster it, both in weighted feature
    space. `progress(phase, fraction, info)` reports embed/cluster progress."""
    survivors = np.asarray(survivors, dtype=np.int64)
    points = weighted_feature_matrix(space.metric[survivors], space.shape[survivors], weights)
    n = len(survivors)
    if embed_method == "tsne" and n >= 4:
        cfg = tsne_config or reduce_mod.TsneConfig(seed=rng_seed)
        perp = min(cfg.perplexity, max(1.0 + 1e-9, (n - 1) / 3.0))
        if perp <= 1.0 + 1e-6:
            embedding = _pca_or_pad(points, n)
        else:
            from dataclasses import replace as _replace
            tsne_progress = None
            if progress is not None:
                tsne_progress = lambda it, kl: progress(
                    "embed", (it + 1) / cfg.iterations, {"iteration": it, "kl": kl})
            embedding = reduce_mod.tsne(points, _replace(cfg, perplexity=perp),
                                        progress=tsne_progress)
    else:
        embedding = _pca_or_pad(points, n)
    if progress is not None:
        progress("embed", 1.0, {})
    k_eff = min(k if k is not None else cluster_mod.choose_k(len(survivors)), len(survivors))
    tree = cluster_mod.kmeans(points, k_eff, rng_seed, indices=survivors)
    if progress is not None:
        progress("cluster", 1.0, {})
    return tree, embedding


def _pca_or_pad(points: np.ndarray, n: int) -> reduce_mod.Embedding:
    """PCA embedding, degrading gracefully for tiny survivor sets."""
    if n < 2 or points.shape[1] < 3:
        coords = np.zeros((n, 3))
        return reduce_mod.Embedding(coords=coords, method="pca",
                                    diagnostics={"explained_variance": [0.0] * 3})
    return reduce_mod.pca(points, 3)
