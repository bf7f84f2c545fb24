import csv
import math

import numpy as np
import pytest

from solspace.errors import ContractError
from solspace.simulate import (MAX_CYCLES, Policy, SimTrace, make_feature_space,
                               simulate, write_traces_csv)


@pytest.fixture(scope="module")
def space64():
    return make_feature_space(64, seed=1)


def test_policy_validation():
    with pytest.raises(ContractError):
        Policy(kind="psychic")
    assert Policy(kind="hybrid").switch_cycle == 2


def test_make_feature_space_shape(space64):
    assert len(space64) == 64
    assert space64.metric.shape == (64, 11)
    assert space64.shape.shape == (64, 64)
    assert np.allclose(space64.shape.sum(axis=1), 1.0, atol=1e-9)


def test_simulation_is_deterministic(space64):
    a = simulate(space64, Policy("recommender"), "s00017", rng_seed=3)
    b = simulate(space64, Policy("recommender"), "s00017", rng_seed=3)
    assert a.records == b.records
    assert a.total_inspections == b.total_inspections
    assert a.cycles_to_locate == b.cycles_to_locate


@pytest.mark.parametrize("kind", ["stochastic", "recommender", "hybrid"])
def test_every_policy_locates_target(space64, kind):
    trace = simulate(space64, Policy(kind), "s00030", rng_seed=0)
    assert trace.found
    assert trace.total_inspections >= 1
    assert trace.total_inspections <= 64  # never worse than exhaustive scan


def test_recommender_cycle_bound_small(space64):
    # [DERIVED] oracle seeding halves the space around the target:
    # located within ceil(log2 N) elimination cycles
    bound = math.ceil(math.log2(64))
    for t in (0, 13, 40, 63):
        trace = simulate(space64, Policy("recommender"), f"s{t:05d}", rng_seed=5)
        assert trace.found
        assert trace.cycles_to_locate is not None
        assert trace.cycles_to_locate <= bound


def test_survivor_counts_never_increase(space64):
    trace = simulate(space64, Policy("recommender"), "s00050", rng_seed=2)
    survivors = [s for _, s in trace.records]
    assert all(a >= b for a, b in zip(survivors, survivors[1:]))


def test_hybrid_switches_to_recommender(space64):
    hy = simulate(space64, Policy("hybrid", switch_cycle=1), "s00022", rng_seed=9)
    assert hy.found
    assert hy.total_inspections <= 64


def test_traces_csv_schema(tmp_path, space64):
    traces = [simulate(space64, Policy(k), "s00005", rng_seed=1)
              for k in ("stochastic", "recommender", "hybrid")]
    path = tmp_path / "traces.csv"
    write_traces_csv(traces, str(path))
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 3
    assert set(rows[0]) == {"policy", "target", "cycles", "inspections",
                            "survivors_final", "found"}
    assert all(r["found"] == "True" for r in rows)
    assert all(int(r["inspections"]) >= 1 for r in rows)


def test_unknown_target_rejected(space64):
    with pytest.raises(ContractError):
        simulate(space64, Policy("recommender"), "zzz")
