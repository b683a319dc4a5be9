from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psoxplain.configspace import HyperParams, TopologyKind, full_grid
from psoxplain.suite import evaluate_batch, make_instance
from psoxplain.swarm import (
    RunAborted, RunSpec, SwarmState, attractors, draw_coefficients, init_swarm, pack_trajectories, run, step,
    trajectory_csv, unpack_trajectories, velocity_update,
)


def spec(fid=1, dim=2, topology="Star", config=None, budget=20, seed=0):
    config = config or HyperParams(0.9, 0.7, 0.5, 20)
    return RunSpec(make_instance(fid, 1, dim), config, topology, budget, seed)


def test_init_swarm():
    s = spec(dim=5, config=HyperParams(0.5, 0.5, 0.5, 50))
    a, b = init_swarm(s), init_swarm(s)
    assert a.positions.shape == (50, 5)
    assert np.array_equal(a.positions, b.positions)
    assert np.all((a.positions >= -5) & (a.positions <= 5))
    assert np.all(a.velocities == 0)
    assert np.array_equal(a.pbest_values, evaluate_batch(s.instance, a.positions))
    assert a.t == 0


def _one_particle_state(x, v, pbest, lbest_pos, cfg):
    """Two 1-d particles; particle 1 sits at ``lbest_pos`` and is the swarm best."""
    inst = replace(make_instance(1, 1, 1), x_opt=np.array([lbest_pos]))
    pos = np.array([[x], [lbest_pos]])
    pb = np.array([[pbest], [lbest_pos]])
    state = SwarmState(pos, np.array([[v], [0.0]]), pb, evaluate_batch(inst, pb), 0, np.random.default_rng(0),
                       None)
    s = RunSpec(inst, cfg, TopologyKind.STAR, 5, 0)
    state.graph = init_swarm(replace(s, config=replace(cfg, n_particles=2))).graph
    return state, s


def test_hand_fixture_full_update():
    cfg = HyperParams(0.3, 0.2, 0.5, 2)
    state, s = _one_particle_state(0.0, 1.0, 2.0, 4.0, cfg)
    new = step(state, s, coefficients=(1.0, 1.0))
    assert new.velocities[0, 0] == 0.5 * 1.0 + 0.3 * 1.0 * (2.0 - 0.0) + 0.2 * 1.0 * (4.0 - 0.0)
    assert new.velocities[0, 0] == pytest.approx(1.9, abs=1e-15)
    assert new.positions[0, 0] == new.velocities[0, 0]
    assert new.t == 1


def test_pure_inertia_keeps_velocity():
    cfg = HyperParams(0.0, 0.0, 1.0, 2)
    state, s = _one_particle_state(0.25, -0.75, 2.0, 4.0, cfg)
    new = step(state, s, coefficients=(1.0, 1.0))
    assert new.velocities[0, 0] == -0.75
    assert new.positions[0, 0] == 0.25 + -0.75


def test_consensus_only_inertia():
    cfg = HyperParams(0.9, 0.7, 0.5, 2)
    state, s = _one_particle_state(4.0, 0.6, 4.0, 4.0, cfg)
    new = step(state, s, coefficients=(1.0, 1.0))
    assert new.velocities[0, 0] == 0.5 * 0.6


def test_velocity_update_vectorised():
    cfg = HyperParams(0.7, 0.4, 0.9, 3)
    rng = np.random.default_rng(1)
    v, x, p, l, r1, r2 = (rng.normal(size=(3, 4)) for _ in range(6))
    got = velocity_update(v, x, p, l, r1, r2, cfg)
    for i in range(3):
        for j in range(4):
            ref = 0.9 * v[i, j] + 0.7 * r1[i, j] * (p[i, j] - x[i, j]) + 0.4 * r2[i, j] * (l[i, j] - x[i, j])
            assert got[i, j] == ref


def test_draw_order_particle_major():
    r1, r2 = draw_coefficients(np.random.default_rng(5), 3, 2)
    flat = np.random.default_rng(5).random(12)
    assert r1.tolist() == [flat[0:2].tolist(), flat[4:6].tolist(), flat[8:10].tolist()]
    assert r2.tolist() == [flat[2:4].tolist(), flat[6:8].tolist(), flat[10:12].tolist()]


def test_step_past_budget_rejected():
    s = spec(budget=1)
    st_ = step(init_swarm(s), s)
    with pytest.raises(ValueError):
        step(st_, s)


def test_run_is_deterministic():
    for topo in TopologyKind:
        s = spec(topology=topo, config=HyperParams(0.5, 0.4, 0.7, 30, 2, 2, 1), seed=42)
        a, b = run(s), run(s)
        assert a.best_so_far.tobytes() == b.best_so_far.tobytes()
        assert np.array_equal(a.final_position, b.final_position)


def test_budget_one():
    s = spec(budget=1)
    traj = run(s)
    assert traj.best_so_far.shape == (1,)
    st1 = step(init_swarm(s), s)
    assert traj.best_so_far[0] == st1.pbest_values.min()


def test_star_attractor_shared():
    s = spec(config=HyperParams(0.5, 0.4, 0.7, 15))
    state = init_swarm(s)
    for _ in range(5):
        att = attractors(state, s)
        assert np.all(att == att[0])
        state = step(state, s)


def test_von_neumann_graph_static():
    s = spec(dim=3, topology="VonNeumann", config=HyperParams(0.5, 0.4, 0.7, 30, 1, 2, 1))
    state = init_swarm(s)
    g0 = state.graph.neighbors.copy()
    assert g0.shape == (30, 7)  # delannoy(3, 1)
    for _ in range(3):
        state = step(state, s)
    assert np.array_equal(state.graph.neighbors, g0)


def test_per_evaluation_log():
    s = spec(budget=6, config=HyperParams(0.5, 0.4, 0.7, 10))
    per_it = run(s).best_so_far
    per_ev = run(s, per_evaluation=True).best_so_far
    assert per_ev.shape == (60,)
    assert np.array_equal(per_ev[9::10], per_it)
    assert np.all(np.diff(per_ev) <= 0)


def test_non_finite_objective_aborts(monkeypatch):
    import psoxplain.swarm as sw

    s = spec(budget=3)
    calls = {"n": 0}

    def bad(instance, X):
        calls["n"] += 1
        out = np.zeros(len(X))
        if calls["n"] == 2:
            out[1] = np.inf
        return out

    monkeypatch.setattr(sw, "evaluate_batch", bad)
    with pytest.raises(RunAborted) as info:
        run(s)
    assert info.value.record["t"] == 1 and info.value.record["particle"] == 1
    assert info.value.record["topology"] == "Star"


@settings(max_examples=40, deadline=None)
@given(fid=st.integers(1, 24), cfg=st.sampled_from(full_grid().configs[::7]),
       topo=st.sampled_from(list(TopologyKind)), seed=st.integers(0, 2**63 - 1))
def test_best_so_far_monotone_and_pbest_dominates(fid, cfg, topo, seed):
    s = RunSpec(make_instance(fid, 1, 2), replace(cfg, n_particles=10), topo, 8, seed)
    state = init_swarm(s)
    prev = state.pbest_values.copy()
    for _ in range(8):
        state = step(state, s)
        assert np.all(state.pbest_values <= prev)
        assert np.all(state.pbest_values <= evaluate_batch(s.instance, state.positions))
        prev = state.pbest_values.copy()
    traj = run(s)
    assert np.all(np.diff(traj.best_so_far) <= 0)


def test_trajectory_exports():
    trajs = [run(spec(seed=i, budget=5)) for i in range(3)]
    assert trajectory_csv(trajs[0]).splitlines()[0] == "iteration,best_so_far"
    blob = pack_trajectories(trajs)
    assert blob[:4] == b"PSOT"
    assert np.array_equal(unpack_trajectories(blob), np.stack([t.best_so_far for t in trajs]))
    with pytest.raises(ValueError):
        unpack_trajectories(blob[:-8])


def test_run_spec_validation():
    with pytest.raises(ValueError):
        spec(budget=0)
    assert spec(topology="Ring").topology is TopologyKind.RING
