import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import aocc_direct

from psoxplain.configspace import HyperParams
from psoxplain.metrics import AoccParams, IntegrityError, RunRecord, aocc, log_regret_series, performance_stats, performance_table

A = HyperParams(0.3, 0.2, 0.9, 50)
B = HyperParams(0.5, 0.2, 0.9, 50)


def rec(config, value, fid=1, rep=0, topology="Star", iid=1):
    return RunRecord(topology, fid, iid, 2, rep, 0, config, value, 0.0)


def test_log_regret_examples():
    y = log_regret_series([1.0, 0.0, 316.0])
    assert y[0] == 0.0
    assert y[1] == -8.0
    assert y[2] == pytest.approx(2.4997, abs=1e-4)


def test_log_regret_with_offset_and_tolerance():
    assert log_regret_series([11.0], f_opt=10.0)[0] == 0.0
    # tiny negative regret inside the tolerance is floored, not rejected
    assert log_regret_series([-1e-12])[0] == -8.0
    with pytest.raises(IntegrityError):
        log_regret_series([-1e-6])
    with pytest.raises(ValueError):
        log_regret_series([np.inf])


def test_aocc_examples():
    assert aocc([-6.0, -5.0, -100.0]) == 1.0
    assert aocc([5.0, 7.0]) == 0.0
    assert aocc([0.0]) == 0.5
    with pytest.raises(ValueError):
        aocc([])


def test_aocc_params_validation():
    with pytest.raises(ValueError):
        AoccParams(lb=1, ub=1)
    with pytest.raises(ValueError):
        AoccParams(floor=0)


@settings(max_examples=200)
@given(st.lists(st.floats(-20, 20, allow_nan=False), min_size=1, max_size=300))
def test_aocc_matches_direct_formula(y):
    assert abs(aocc(y) - aocc_direct(y)) <= 1e-12
    assert 0.0 <= aocc(y) <= 1.0


@given(st.lists(st.floats(-20, 20, allow_nan=False), min_size=1, max_size=50), st.data())
def test_aocc_monotone_in_each_entry(y, data):
    i = data.draw(st.integers(0, len(y) - 1))
    delta = data.draw(st.floats(0, 10))
    z = list(y)
    z[i] -= delta
    assert aocc(z) >= aocc(y) - 1e-15


def test_stats_single_config():
    s = performance_stats([rec(A, 0.2), rec(A, 0.3, rep=1)])
    assert s.sbm == s.abm == s.all_mean == pytest.approx(0.25)
    assert s.sbs == s.abs == s.all_std == pytest.approx(0.05)


def test_stats_two_configs():
    s = performance_stats([rec(A, 0.9), rec(A, 0.9, rep=1), rec(B, 0.1), rec(B, 0.1, rep=1)])
    assert s.single_best_config == A
    assert s.sbm == pytest.approx(0.9)
    assert s.all_mean == pytest.approx(0.5)


def test_stats_average_best_differs_from_single_best():
    # A wins on f_a, B is better pooled over both functions
    records = [rec(A, 0.8, fid=1), rec(B, 0.7, fid=1), rec(A, 0.1, fid=2), rec(B, 0.6, fid=2)]
    s = performance_stats(records, fid=1)
    assert s.single_best_config == A and s.avg_best_config == B
    assert s.sbm == pytest.approx(0.8) and s.abm == pytest.approx(0.7)
    assert s.abm <= s.sbm


def test_stats_ties_go_to_grid_order():
    s = performance_stats([rec(B, 0.5), rec(A, 0.5)])
    assert s.single_best_config == A


def test_stats_errors():
    with pytest.raises(ValueError):
        performance_stats([])
    with pytest.raises(ValueError):
        performance_stats([rec(A, 0.5, fid=1), rec(A, 0.5, fid=2)])


CONFIGS = [A, B, HyperParams(0.7, 0.4, 0.5, 100), HyperParams(0.9, 0.7, 0.7, 150)]


@st.composite
def records(draw):
    """A complete run table: every config has runs on every function."""
    n_cfg = draw(st.integers(1, len(CONFIGS)))
    n_fid = draw(st.integers(1, 3))
    reps = draw(st.integers(1, 3))
    vals = st.floats(0, 1)
    return [rec(c, draw(vals), fid=f, rep=r) for c in CONFIGS[:n_cfg] for f in range(1, n_fid + 1) for r in range(reps)]


@settings(max_examples=100)
@given(records(), st.randoms(use_true_random=False))
def test_stats_properties(recs, rnd):
    table = performance_table(recs)
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    again = performance_table(shuffled)
    for s, t in zip(table, again):
        assert s.single_best_config == t.single_best_config and s.avg_best_config == t.avg_best_config
        assert math.isclose(s.sbm, t.sbm, abs_tol=1e-15) and math.isclose(s.all_std, t.all_std, abs_tol=1e-12)
    for s in table:
        assert s.sbm >= s.abm - 1e-12
        for v in (s.sbm, s.sbs, s.abm, s.abs, s.all_mean, s.all_std):
            assert -1e-12 <= v <= 1 + 1e-12


def test_population_std():
    vals = [0.1, 0.4, 0.8]
    s = performance_stats([rec(A, v, rep=i) for i, v in enumerate(vals)])
    assert s.sbs == pytest.approx(float(np.std(vals)))


def test_performance_table_order():
    recs = [rec(A, 0.5, fid=f, topology=t) for t in ("Star", "Ring") for f in (3, 1)]
    keys = [(s.topology, s.fid) for s in performance_table(recs)]
    assert keys == sorted(keys)
    random.Random(0).shuffle(recs)
    assert [(s.topology, s.fid) for s in performance_table(recs)] == keys
