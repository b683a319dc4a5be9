import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from psoxplain.topology import (
    delannoy, local_best, minkowski_distances, ring_neighbors, star_neighbors, von_neumann_k, write_edges,
)


def test_delannoy_examples():
    assert delannoy(1, 1) == 3
    assert delannoy(5, 1) == 11
    assert delannoy(5, 2) == 61
    assert delannoy(0, 7) == 1
    # closed form: sum_k C(m,k) C(n,k) 2^k
    from math import comb

    for m in range(6):
        for n in range(6):
            assert delannoy(m, n) == sum(comb(m, k) * comb(n, k) * 2**k for k in range(min(m, n) + 1))


def test_von_neumann_k_examples():
    assert von_neumann_k(5, 1, 50) == 11
    assert von_neumann_k(5, 2, 50) == 50
    assert von_neumann_k(2, 0, 50) == 1


@given(st.integers(1, 8), st.integers(0, 4), st.integers(1, 200))
def test_von_neumann_k_monotone(dim, r, n):
    k = von_neumann_k(dim, r, n)
    assert 1 <= k <= n
    assert von_neumann_k(dim, r + 1, n) >= k
    assert von_neumann_k(dim + 1, r, n) >= k


def test_ring_k1_is_self():
    X = np.random.default_rng(0).normal(size=(7, 3))
    assert ring_neighbors(X, 1, 2).neighbors[:, 0].tolist() == list(range(7))


def test_ring_collinear_example():
    X = np.array([[0.0], [1.0], [3.0]])
    g = ring_neighbors(X, 2, 2)
    assert g.lists() == [[0, 1], [1, 0], [2, 1]]


def test_ring_p1_equals_p2_on_a_line():
    X = np.array([[0.0, 0], [2, 0], [5, 0], [5.5, 0], [9, 0]])
    assert np.array_equal(ring_neighbors(X, 3, 1).neighbors, ring_neighbors(X, 3, 2).neighbors)


def test_ring_ties_go_to_lower_index():
    X = np.array([[0.0], [-1.0], [1.0]])
    assert ring_neighbors(X, 2, 1).lists()[0] == [0, 1]


def test_ring_rejects_bad_k():
    X = np.zeros((3, 2))
    with pytest.raises(ValueError):
        ring_neighbors(X, 0, 2)
    with pytest.raises(ValueError):
        ring_neighbors(X, 4, 2)


def test_coincident_particles_keep_self_first():
    X = np.zeros((4, 2))
    g = ring_neighbors(X, 2, 2)
    assert g.neighbors[:, 0].tolist() == [0, 1, 2, 3]


def test_star_examples():
    assert star_neighbors(1).lists() == [[0]]
    g = star_neighbors(3)
    assert all(sorted(row) == [0, 1, 2] for row in g.lists())
    assert g.neighbors[:, 0].tolist() == [0, 1, 2]


def test_local_best_examples():
    vals = np.array([3.0, 1.0, 2.0, 0.0])
    assert local_best(star_neighbors(4), vals).tolist() == [3, 3, 3, 3]
    X = np.arange(4.0)[:, None]
    assert local_best(ring_neighbors(X, 1, 2), vals).tolist() == [0, 1, 2, 3]
    g = ring_neighbors(X, 2, 2)
    brute = [min(row, key=lambda j: (vals[j], j)) for row in g.lists()]
    assert local_best(g, vals).tolist() == brute == [1, 1, 1, 3]


def test_local_best_ties_to_lower_index():
    g = ring_neighbors(np.array([[0.0], [1.0], [2.0]]), 3, 1)
    assert local_best(g, np.array([1.0, 1.0, 1.0])).tolist() == [0, 0, 0]


positions = st.integers(2, 25).flatmap(
    lambda n: arrays(np.float64, (n, 3), elements=st.floats(-5, 5, allow_nan=False))
)


@settings(max_examples=60, deadline=None)
@given(positions, st.data())
def test_ring_matches_brute_force(X, data):
    n = len(X)
    k = data.draw(st.integers(1, n))
    p = data.draw(st.sampled_from([1, 2]))
    g = ring_neighbors(X, k, p)
    for i in range(n):
        d = [0.0 if j == i else float(np.sum(np.abs(X[i] - X[j]) ** p) ** (1 / p)) for j in range(n)]
        # self first, then by distance and index
        expect = sorted(range(n), key=lambda j: (j != i, d[j], j))[:k]
        got = g.lists()[i]
        assert got[0] == i
        assert sorted(d[j] for j in got[1:]) == pytest.approx(sorted(d[j] for j in expect[1:]), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 20), st.integers(0, 10**6), st.data())
def test_ring_permutation_equivariant(n, seed, data):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))  # continuous draws: no distance ties
    k = data.draw(st.integers(1, n))
    perm = rng.permutation(n)
    g = ring_neighbors(X, k, 2).neighbors
    gp = ring_neighbors(X[perm], k, 2).neighbors
    # particle perm[i] in the original is particle i in the permuted set
    for i in range(n):
        assert sorted(perm[gp[i]].tolist()) == sorted(g[perm[i]].tolist())


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(1, 40), elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_star_local_best_is_global_argmin(vals):
    best = local_best(star_neighbors(len(vals)), vals)
    assert np.all(best == int(np.argmin(vals)))


def test_minkowski_distances():
    X = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert minkowski_distances(X, 1)[0, 1] == 7.0
    assert minkowski_distances(X, 2)[0, 1] == 5.0


def test_write_edges(tmp_path):
    path = tmp_path / "g.csv"
    write_edges(star_neighbors(2), path)
    assert path.read_text() == "particle,neighbor\n0,0\n0,1\n1,1\n1,0\n"
