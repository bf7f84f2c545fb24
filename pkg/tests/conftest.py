import numpy as np
import pytest

from solspace.core import (METRIC_CHANNELS, SHAPE_BINS, DesignSolution, ParamSet,
                           PropertySet, SolutionSpace)
from solspace.ingest import SynthConfig, generate_synthetic, load_dataset


def space_from_matrix(metric: np.ndarray, shape: np.ndarray | None = None,
                      channels=None) -> SolutionSpace:
    """Build an in-memory space around explicit feature matrices."""
    n, m = metric.shape
    if shape is None:
        shape = np.full((n, SHAPE_BINS), 1.0 / SHAPE_BINS)
    channels = channels or tuple(f"ch{j}" for j in range(m))
    params = ParamSet(middle_load=100.0, outer_load=100.0, voxel_size=1.0,
                      volume_minimization=1)
    sols = []
    for i in range(n):
        props = PropertySet(center_of_mass=(0.0, 0.0, 0.0), weight=1.0,
                            overhang_percentage=0.0, surface_area=1.0,
                            area_volume_ratio=1.0, max_displacement=0.0,
                            max_strain=0.0, total_strain=0.0, max_vonmises=0.0,
                            objective_value=0.0)
        sols.append(DesignSolution(id=f"s{i:05d}", params=params,
                                   properties=props, mesh_ref=""))
    bounds = np.stack([metric.min(axis=0), metric.max(axis=0)], axis=1)
    return SolutionSpace(sols, metric, shape, bounds, metric_channels=channels)


TINY_GRID = dict(middle_loads=[100.0, 150.0], outer_loads=[100.0, 150.0],
                 voxel_sizes=[1.0, 2.0], vm_levels=[1, 2, 3])


@pytest.fixture(scope="session")
def tiny_dataset_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("tinyds")
    generate_synthetic(SynthConfig(seed=11, **TINY_GRID), out)
    return out


@pytest.fixture(scope="session")
def tiny_space(tiny_dataset_dir):
    return load_dataset(tiny_dataset_dir, descriptor_pairs=1000)


FAST_CONFIG = {"embedding": "pca", "rng_seed": 0}


def random_event_sequence(rng: np.random.Generator, space: SolutionSpace,
                          n_events: int = 8) -> list:
    """A random but always-valid event log for replay testing."""
    from solspace.session import ExplorationSession, SessionEvent

    probe = ExplorationSession(space, "probe")
    events = [SessionEvent(seq=0, timestamp=0.0, type="create_session",
                           payload={"config": dict(FAST_CONFIG)})]
    probe.apply_event(events[0])
    for seq in range(1, n_events + 1):
        choices = ["select_seed"]
        seeds = probe.seed_ids()
        survivors = probe.survivor_ids()
        if seeds:
            choices += ["remove_seed", "trigger_recluster"]
        if probe.tree is not None:
            choices.append("expand_cluster")
        kind = choices[rng.integers(len(choices))]
        if kind == "select_seed":
            free = [s for s in survivors if s not in seeds]
            if not free:
                kind = "trigger_recluster" if seeds else "expand_cluster"
        if kind == "select_seed":
            payload = {"id": free[rng.integers(len(free))]}
        elif kind == "remove_seed":
            payload = {"id": seeds[rng.integers(len(seeds))]}
        elif kind == "trigger_recluster":
            payload = {"rho": float(rng.uniform(0.2, 0.7)),
                       "seed": int(rng.integers(100))}
        else:
            roots = probe.tree.roots
            payload = {"cluster_id": roots[rng.integers(len(roots))].id,
                       "k_child": 2, "seed": int(rng.integers(100))}
        ev = SessionEvent(seq=seq, timestamp=float(seq), type=kind,
                          payload=payload)
        probe.apply_event(ev)
        events.append(ev)
        if len(probe.survivors) <= 2:
            break
    return events
