import pytest
from hypothesis import given
from hypothesis import strategies as st

from psoxplain.configspace import (
    DOMAINS, PARAM_NAMES, HyperParams, TopologyKind, config_key, dumps_space, effective_params,
    from_record, full_grid, loads_space, random_configs, to_record, validate,
)

grid_configs = st.sampled_from(full_grid().configs)
topologies = st.sampled_from(list(TopologyKind))


def test_grid_size_and_first_element():
    g = full_grid()
    assert len(g) == 4 * 4 * 3 * 3 * 3 * 2 * 2 == 1728
    assert g[0] == HyperParams(0.3, 0.2, 0.9, 50, 1, 1, 1)
    assert len(set(g)) == len(g)


def test_grid_order_is_lexicographic_in_table_order():
    keys = [config_key(hp) for hp in full_grid()]
    assert keys == sorted(keys)


def test_effective_params_examples():
    hp = HyperParams(0.5, 0.4, 0.7, 100, 3, 2, 2)
    assert effective_params(hp, TopologyKind.STAR) == HyperParams(0.5, 0.4, 0.7, 100, 1, 1, 1)
    assert effective_params(hp, TopologyKind.RING) == HyperParams(0.5, 0.4, 0.7, 100, 3, 2, 1)
    assert effective_params(hp, TopologyKind.VON_NEUMANN) == HyperParams(0.5, 0.4, 0.7, 100, 1, 2, 2)


def test_star_behaviour_count():
    assert len({effective_params(hp, "Star") for hp in full_grid()}) == 144


@given(grid_configs, topologies)
def test_effective_params_idempotent(hp, topo):
    once = effective_params(hp, topo)
    assert effective_params(once, topo) == once


def test_validate_examples():
    assert validate(HyperParams(0.9, 0.7, 0.5, 50, 1, 1, 1)) == []
    assert "c1 out of range" in validate(HyperParams(-0.1, 0.7, 0.5, 50))
    assert "c1+c2 ≥ 4" in validate(HyperParams(2.5, 2.0, 0.5, 50))
    assert "p out of range" in validate(HyperParams(0.5, 0.5, 0.5, 50, p=3))
    assert "n_particles out of range" in validate(HyperParams(0.5, 0.5, 0.5, 0))


@given(grid_configs)
def test_grid_configs_are_valid(hp):
    assert validate(hp) == []
    for name in PARAM_NAMES:
        assert getattr(hp, name) in DOMAINS[name]


@given(grid_configs)
def test_record_round_trip(hp):
    assert from_record(to_record(hp)) == hp


def test_space_round_trip():
    space = random_configs(40, seed=3, topology=TopologyKind.RING)
    text = dumps_space(space)
    assert text.splitlines()[0] == "c1,c2,w,n_particles,k,p,r,topology"
    assert loads_space(text) == space
    assert loads_space(dumps_space(full_grid())) == full_grid()


def test_loads_space_rejects_bad_header():
    with pytest.raises(ValueError):
        loads_space("c1,c2\n0.3,0.2\n")


def test_random_configs_distinct_and_ordered():
    space = random_configs(100, seed=1)
    assert len(set(space)) == 100
    assert [config_key(c) for c in space] == sorted(config_key(c) for c in space)


def test_topology_parse():
    assert TopologyKind.parse("von_neumann") is TopologyKind.VON_NEUMANN
    assert TopologyKind.parse("ring") is TopologyKind.RING
    with pytest.raises(ValueError):
        TopologyKind.parse("torus")
