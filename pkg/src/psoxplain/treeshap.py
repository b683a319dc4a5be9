"""Exact path-dependent TreeSHAP for the trees in :mod:`psoxplain.trees`.

The recursion follows Lundberg et al.'s polynomial-time algorithm.  Which
nodes are visited, and the "zero" fractions (cover ratios) along each path,
do not depend on the explained sample; only the "one" fractions do (1 when
the sample would follow that branch).  So the whole batch is explained in a
single traversal, carrying per-sample arrays for the one fractions and the
permutation weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trees import LEAF, TreeModel, as_forest


@dataclass
class ShapAttribution:
    base_value: float
    contributions: np.ndarray
    prediction: float


class _Path:
    __slots__ = ("d", "z", "o", "w")

    def __init__(self, d, z, o, w):
        self.d = d  # feature per element (list[int])
        self.z = z  # zero fraction per element (list[float])
        self.o = o  # one fraction per element (list of (n,) arrays)
        self.w = w  # permutation weight per element (list of (n,) arrays)

    def copy(self):
        return _Path(list(self.d), list(self.z), list(self.o), [w.copy() for w in self.w])


def _extend(m: _Path, pz: float, po: np.ndarray, pi: int, n: int) -> _Path:
    m = m.copy()
    depth = len(m.d)
    m.d.append(pi)
    m.z.append(pz)
    m.o.append(po)
    m.w.append(np.ones(n) if depth == 0 else np.zeros(n))
    for i in range(depth - 1, -1, -1):
        m.w[i + 1] += po * m.w[i] * ((i + 1) / (depth + 1))
        m.w[i] = pz * m.w[i] * ((depth - i) / (depth + 1))
    return m


def _unwind(m: _Path, i: int) -> _Path:
    depth = len(m.d) - 1
    nxt = m.w[depth].copy()
    o, z = m.o[i], m.z[i]
    hot = o != 0
    w = [x.copy() for x in m.w[:depth]]
    for j in range(depth - 1, -1, -1):
        with np.errstate(divide="ignore", invalid="ignore"):
            w_hot = nxt * (depth + 1) / ((j + 1) * o)
            w_cold = w[j] * (depth + 1) / (z * (depth - j)) if z != 0 else np.zeros_like(w[j])
        tmp = w[j]
        new = np.where(hot, w_hot, w_cold)
        nxt = np.where(hot, tmp - new * z * ((depth - j) / (depth + 1)), nxt)
        w[j] = new
    d = m.d[:i] + m.d[i + 1 :]
    zz = m.z[:i] + m.z[i + 1 :]
    oo = m.o[:i] + m.o[i + 1 :]
    return _Path(d, zz, oo, w)


def _unwound_sum(m: _Path, i: int) -> np.ndarray:
    """Sum of the weights after unwinding element ``i``, without building the path."""
    depth = len(m.d) - 1
    o, z = m.o[i], m.z[i]
    hot = o != 0
    nxt = m.w[depth].copy()
    total = np.zeros_like(nxt)
    for j in range(depth - 1, -1, -1):
        with np.errstate(divide="ignore", invalid="ignore"):
            w_hot = nxt * (depth + 1) / ((j + 1) * o)
            w_cold = m.w[j] * (depth + 1) / (z * (depth - j)) if z != 0 else np.zeros_like(nxt)
        new = np.where(hot, w_hot, w_cold)
        total += new
        nxt = np.where(hot, m.w[j] - new * z * ((depth - j) / (depth + 1)), nxt)
    return total


def tree_shap_values(tree: TreeModel, X: np.ndarray, output: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """SHAP values ``(n, m)`` and the base value for one tree.

    ``output`` gives the per-node value to explain (defaults to the
    regression mean, or the first class probability for classifiers).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, m = X.shape
    if output is None:
        out = tree.leaf_output()
        output = out if out.ndim == 1 else out[:, 0]
    phi = np.zeros((n, m))
    cover = tree.cover

    def recurse(j, path, pz, po, pi):
        path = _extend(path, pz, po, pi, n)
        if tree.feature[j] == LEAF:
            v = output[j]
            for i in range(1, len(path.d)):
                w = _unwound_sum(path, i)
                phi[:, path.d[i]] += w * (path.o[i] - path.z[i]) * v
            return
        f = tree.feature[j]
        goes_left = (X[:, f] <= tree.threshold[j]).astype(float)
        iz, io = 1.0, np.ones(n)
        if f in path.d[1:]:
            k = path.d.index(f, 1)
            iz, io = path.z[k], path.o[k]
            path = _unwind(path, k)
        lc, rc = tree.left[j], tree.right[j]
        recurse(lc, path, iz * cover[lc] / cover[j], io * goes_left, f)
        recurse(rc, path, iz * cover[rc] / cover[j], io * (1.0 - goes_left), f)

    recurse(0, _Path([], [], [], []), 1.0, np.ones(n), -1)
    return phi, expected_value(tree, output)


def expected_value(tree: TreeModel, output: np.ndarray | None = None) -> float:
    """Cover-weighted mean of the leaf outputs."""
    if output is None:
        out = tree.leaf_output()
        output = out if out.ndim == 1 else out[:, 0]
    leaves = tree.feature == LEAF
    return float(np.sum(cover_fraction(tree)[leaves] * output[leaves]))


def cover_fraction(tree: TreeModel) -> np.ndarray:
    """Probability of reaching each node when following cover ratios from the root."""
    frac = np.zeros(tree.n_nodes)
    frac[0] = 1.0
    for j in range(tree.n_nodes):
        if tree.feature[j] != LEAF:
            for c in (tree.left[j], tree.right[j]):
                frac[c] = frac[j] * tree.cover[c] / tree.cover[j]
    return frac


def _class_output(tree: TreeModel, class_index: int | None):
    out = tree.leaf_output()
    if out.ndim == 1:
        return out
    return out[:, 0 if class_index is None else class_index]


def _threshold_signature(tree: TreeModel, X: np.ndarray) -> np.ndarray:
    """Side of every split threshold for each row; equal rows get equal SHAP values."""
    internal = tree.feature != LEAF
    feats, thr = tree.feature[internal], tree.threshold[internal]
    if feats.size == 0:
        return np.zeros((len(X), 1), dtype=bool)
    return X[:, feats] <= thr


def shap_values(model, X, class_index: int | None = None) -> tuple[np.ndarray, float, np.ndarray]:
    """Batch TreeSHAP for a tree or forest.

    Returns ``(phi, base_value, prediction)``; forest attributions are the
    mean of the per-tree attributions, matching the mean-of-trees prediction.
    For classifiers the explained output is the probability of
    ``classes[class_index]``.
    """
    forest = as_forest(model)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != forest.n_features:
        raise ValueError(f"expected {forest.n_features} features, got {X.shape[1]}")
    phi = np.zeros(X.shape)
    base = 0.0
    pred = np.zeros(len(X))
    for tree in forest.trees:
        out = _class_output(tree, class_index)
        sig = _threshold_signature(tree, X)
        _, first, inverse = np.unique(sig, axis=0, return_index=True, return_inverse=True)
        p, b = tree_shap_values(tree, X[first], out)
        phi += p[inverse.reshape(-1)]
        base += b
        pred += out[tree.apply(X)]
    k = forest.n_trees
    return phi / k, base / k, pred / k


def tree_shap(model, x, class_index: int | None = None) -> ShapAttribution:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("tree_shap explains one feature vector; use shap_values for batches")
    phi, base, pred = shap_values(model, x[None, :], class_index)
    return ShapAttribution(base, phi[0], float(pred[0]))
