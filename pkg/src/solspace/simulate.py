"""Navigation-policy simulation harness.

Quantifies the stochastic / recommender / hybrid navigation strategies with
an oracle user: the simulated user knows the hidden target and always makes
the choice that moves toward it, isolating the machinery's convergence from
human factors. Metrics (inspections, cycles) are instrumentation of this
artifact, not measurements from the original study.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import cluster as cluster_mod
from . import recommend
from .core import (METRIC_CHANNELS, SHAPE_BINS, DesignSolution, FeatureWeights,
                   ParamSet, PropertySet, SolutionSpace, weighted_distances,
                   normalize_metrics)
from .errors import ContractError

MAX_CYCLES = 64


@dataclass(frozen=True)
class Policy:
    kind: str  # "stochastic" | "recommender" | "hybrid"
    switch_cycle: int = 2  # hybrid: stochastic phase length

    def __post_init__(self):
        if self.kind not in ("stochastic", "recommender", "hybrid"):
            raise ContractError(f"unknown policy {self.kind!r}")


@dataclass
class SimTrace:
    policy: str
    target_id: str
    records: list[tuple[int, int]] = field(default_factory=list)  # (inspections, survivors)
    total_inspections: int = 0
    cycles_to_locate: int | None = None
    found: bool = False


def _nearest_to_target(space: SolutionSpace, candidates: np.ndarray,
                       target: int, weights: FeatureWeights) -> int:
    d = weighted_distances(space.metric[candidates], space.shape[candidates],
                           space.metric[target], space.shape[target], weights)
    order = np.lexsort((candidates, d))
    return int(candidates[order[0]])


def _scan_cost(members: tuple[int, ...], target: int) -> tuple[int, bool]:
    """Inspections spent scanning a cluster's members one at a time (id order),
    stopping at the target if present."""
    for pos, m in enumerate(sorted(members), 1):
        if m == target:
            return pos, True
    return len(members), False


def _simulate_recommender(space: SolutionSpace, target: int, rho: float,
                          rng_seed: int, trace: SimTrace,
                          survivors: np.ndarray | None = None,
                          start_cycle: int = 0) -> SimTrace:
    weights = FeatureWeights.uniform(space.n_metric, space.n_shape)
    if survivors is None:
        survivors = np.arange(len(space), dtype=np.int64)
    cycles = start_cycle
    while True:
        points = _weighted_rows(space, survivors, weights)
        k = min(cluster_mod.choose_k(len(survivors)), len(survivors))
        tree = cluster_mod.kmeans(points, k, rng_seed + cycles, indices=survivors)
        trace.total_inspections += len(tree.roots)  # one table per representative
        reps = np.array([c.representative for c in tree.roots], dtype=np.int64)
        if target in set(int(r) for r in reps):
            trace.records.append((trace.total_inspections, len(survivors)))
            trace.cycles_to_locate = cycles
            trace.found = True
            return trace
        # approach clusters in order of representative nearness, scanning
        # members, and keep going while each visit still improves the best
        # candidate seen (diminishing-returns stopping rule)
        rep_d = weighted_distances(space.metric[reps], space.shape[reps],
                                   space.metric[target], space.shape[target],
                                   weights)
        order = np.lexsort((reps, rep_d))
        inspected = list(reps)
        hit = False
        best_d = math.inf
        for pos in order:
            approached = tree.roots[int(pos)]
            cost, hit = _scan_cost(approached.members, target)
            trace.total_inspections += cost
            inspected.extend(approached.members[:cost])
            if hit:
                break
            members = np.array(approached.members, dtype=np.int64)
            nearest = _nearest_to_target(space, members, target, weights)
            d = float(weighted_distances(
                space.metric[[nearest]], space.shape[[nearest]],
                space.metric[target], space.shape[target], weights)[0])
            if d >= best_d:
                break  # this cluster brought nothing closer; stop exploring
            best_d = d
        trace.records.append((trace.total_inspections, len(survivors)))
        if hit:
            trace.cycles_to_locate = cycles
            trace.found = True
            return trace
        if len(survivors) <= 1 or cycles - start_cycle >= MAX_CYCLES:
            return trace  # floor reached without locating the target
        # seed = the inspected solution nearest the target
        candidates = np.unique(np.array(inspected, dtype=np.int64))
        seed_idx = [_nearest_to_target(space, candidates, target, weights)]
        result = recommend.run_cycle(space, survivors, seed_idx, rho, None,
                                     rng_seed + cycles, cycle=cycles + 1,
                                     embed_method="pca")
        weights = result.weights
        survivors = np.array(result.survivors, dtype=np.int64)
        cycles += 1
        if target not in set(int(i) for i in survivors):
            trace.records.append((trace.total_inspections, len(survivors)))
            return trace  # target eliminated: search failed


def _weighted_rows(space: SolutionSpace, indices: np.ndarray,
                   weights: FeatureWeights) -> np.ndarray:
    from .core import weighted_feature_matrix
    return weighted_feature_matrix(space.metric[indices], space.shape[indices], weights)


def _simulate_stochastic(space: SolutionSpace, target: int, rng_seed: int,
                         trace: SimTrace, max_visits: int | None = None) -> tuple[SimTrace, int | None]:
    """Greedy walk over the cluster adjacency graph. Returns the trace and,
    for hybrid handoff, the best seed seen so far (member nearest target)."""
    weights = FeatureWeights.uniform(space.n_metric, space.n_shape)
    survivors = np.arange(len(space), dtype=np.int64)
    points = _weighted_rows(space, survivors, weights)
    k = cluster_mod.choose_k(len(survivors))
    tree = cluster_mod.kmeans(points, k, rng_seed)
    centroids = np.stack([c.centroid for c in tree.roots])
    rng = np.random.default_rng(rng_seed)
    current = int(rng.integers(len(tree.roots)))
    visited: set[int] = set()
    best_seed: int | None = None
    best_d = math.inf
    visits = 0
    while True:
        visited.add(current)
        c = tree.roots[current]
        cost, hit = _scan_cost(c.members, target)
        trace.total_inspections += cost
        visits += 1
        trace.records.append((trace.total_inspections, len(survivors)))
        # remember the member nearest the target among inspected clusters
        members = np.array(c.members, dtype=np.int64)
        nearest = _nearest_to_target(space, members, target, weights)
        d = weighted_distances(space.metric[[nearest]], space.shape[[nearest]],
                               space.metric[target], space.shape[target], weights)[0]
        if d < best_d:
            best_d, best_seed = d, nearest
        if hit:
            trace.cycles_to_locate = visits - 1
            trace.found = True
            return trace, best_seed
        if max_visits is not None and visits >= max_visits:
            return trace, best_seed
        remaining = [j for j in range(len(tree.roots)) if j not in visited]
        if not remaining:
            return trace, best_seed
        # move toward the unvisited cluster whose centroid is nearest the target
        tgt_point = _weighted_rows(space, np.array([target]), weights)[0]
        dists = [float(np.linalg.norm(centroids[j] - tgt_point)) for j in remaining]
        current = remaining[int(np.argmin(dists))]


def simulate(space: SolutionSpace, policy: Policy, target_id: str,
             rho: float = 0.5, rng_seed: int = 0) -> SimTrace:
    """Run one oracle-user search for `target_id` under the given policy."""
    target = space.index_of(target_id)
    trace = SimTrace(policy=policy.kind, target_id=target_id)
    if policy.kind == "stochastic":
        trace, _ = _simulate_stochastic(space, target, rng_seed, trace)
        return trace
    if policy.kind == "recommender":
        return _simulate_recommender(space, target, rho, rng_seed, trace)
    # hybrid: stochastic exploration first, then recommender cycles
    trace, seed = _simulate_stochastic(space, target, rng_seed, trace,
                                       max_visits=policy.switch_cycle)
    if trace.found:
        return trace
    return _simulate_recommender(space, target, rho, rng_seed, trace,
                                 start_cycle=policy.switch_cycle)


def write_traces_csv(traces: list[SimTrace], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["policy", "target", "cycles", "inspections",
                    "survivors_final", "found"])
        for t in traces:
            survivors_final = t.records[-1][1] if t.records else 0
            w.writerow([t.policy, t.target_id,
                        t.cycles_to_locate if t.cycles_to_locate is not None else "",
                        t.total_inspections, survivors_final, t.found])


def make_feature_space(n: int, seed: int = 0, n_blobs: int = 8) -> SolutionSpace:
    """In-memory solution space with blob-structured features, for simulation
    experiments and tests that need no meshes on disk."""
    rng = np.random.default_rng(seed)
    m = len(METRIC_CHANNELS)
    centers = rng.random((n_blobs, m))
    blob = rng.integers(n_blobs, size=n)
    raw = centers[blob] + rng.normal(scale=0.05, size=(n, m))
    metric, bounds = normalize_metrics(raw)
    # each blob gets a distinct smooth histogram profile
    bin_pos = np.linspace(0, 1, SHAPE_BINS)
    peaks = rng.random(n_blobs) * 0.8 + 0.1
    widths = rng.random(n_blobs) * 0.15 + 0.05
    shape = np.empty((n, SHAPE_BINS))
    for i in range(n):
        mu = peaks[blob[i]] + rng.normal(scale=0.02)
        profile = np.exp(-0.5 * ((bin_pos - mu) / widths[blob[i]]) ** 2)
        shape[i] = profile / profile.sum()
    solutions = []
    for i in range(n):
        props = PropertySet(
            center_of_mass=(float(raw[i, 0]), float(raw[i, 1]), float(raw[i, 2])),
            weight=float(abs(raw[i, 3]) + 1.0),
            overhang_percentage=float(np.clip(raw[i, 4], 0, 1) * 100),
            surface_area=float(abs(raw[i, 5]) + 1.0),
            area_volume_ratio=float(abs(raw[i, 6]) + 0.1),
            max_displacement=float(abs(raw[i, 7])),
            max_strain=float(abs(raw[i, 8])),
            total_strain=float(abs(raw[i, 9])),
            max_vonmises=float(abs(raw[i, 10])),
            objective_value=float(raw[i].sum()),
        )
        params = ParamSet(middle_load=100.0, outer_load=100.0, voxel_size=1.0,
                          volume_minimization=1)
        solutions.append(DesignSolution(id=f"s{i:05d}", params=params,
                                        properties=props, mesh_ref=""))
    return SolutionSpace(solutions, metric, shape, bounds)
