"""CART decision trees and random forests, written for TreeSHAP.

Trees are flat node arrays.  A sample goes left when
``x[feature] <= threshold``.  Leaves store a value vector: the target mean
for regression, the class histogram (counts) for classification.  Every node
keeps its cover, the number of training rows that reached it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

LEAF = -1
MODEL_FORMAT_VERSION = 1


@dataclass
class TreeModel:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    cover: np.ndarray
    value: np.ndarray  # (n_nodes, n_outputs)
    max_depth: int
    task: str = "regression"
    classes: np.ndarray | None = None
    n_features: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] == LEAF

    def depth(self) -> int:
        def walk(node):
            if self.is_leaf(node):
                return 0
            return 1 + max(walk(self.left[node]), walk(self.right[node]))

        return walk(0)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=int)
        active = self.feature[node] != LEAF
        while active.any():
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] != LEAF
        return node

    def leaf_output(self) -> np.ndarray:
        """Per-node prediction: mean for regression, class probabilities otherwise."""
        if self.task == "regression":
            return self.value[:, 0]
        return self.value / self.value.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        leaves = self.apply(np.atleast_2d(X))
        if self.task == "regression":
            return self.value[leaves, 0]
        return self.classes[np.argmax(self.value[leaves], axis=1)]

    def predict_proba(self, X) -> np.ndarray:
        return self.leaf_output()[self.apply(np.atleast_2d(X))]

    def to_dict(self) -> dict:
        return {
            "format": "psoxplain-tree",
            "version": MODEL_FORMAT_VERSION,
            "task": self.task,
            "max_depth": self.max_depth,
            "n_features": self.n_features,
            "classes": None if self.classes is None else self.classes.tolist(),
            "nodes": [
                {
                    "feature": int(self.feature[i]),
                    "threshold": float(self.threshold[i]),
                    "left": int(self.left[i]),
                    "right": int(self.right[i]),
                    "value": self.value[i].tolist(),
                    "cover": float(self.cover[i]),
                }
                for i in range(self.n_nodes)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeModel":
        if d.get("format") != "psoxplain-tree" or d.get("version") != MODEL_FORMAT_VERSION:
            raise ValueError("unsupported tree model format")
        nodes = d["nodes"]
        col = lambda k, dt: np.array([n[k] for n in nodes], dtype=dt)  # noqa: E731
        return cls(
            feature=col("feature", int), threshold=col("threshold", float),
            left=col("left", int), right=col("right", int), cover=col("cover", float),
            value=np.array([n["value"] for n in nodes], dtype=float),
            max_depth=d["max_depth"], task=d["task"],
            classes=None if d["classes"] is None else np.array(d["classes"]),
            n_features=d["n_features"],
        )


# --------------------------------------------------------------------------
# split search


def _best_split(X, y_enc, task, min_leaf, features):
    """Return (impurity, feature, threshold) of the best split or None.

    ``y_enc`` is the target column for regression and a one-hot matrix for
    classification.  Impurity is the weighted child impurity (sum, not mean).
    """
    n = len(X)
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        # candidate cut after position i (left = [:i+1])
        valid = xs[:-1] < xs[1:]
        nl = np.arange(1, n)
        valid &= (nl >= min_leaf) & (n - nl >= min_leaf)
        if not valid.any():
            continue
        ys = y_enc[order]
        if task == "regression":
            cs = np.cumsum(ys)
            cs2 = np.cumsum(ys * ys)
            sl, sl2 = cs[:-1], cs2[:-1]
            sr, sr2 = cs[-1] - sl, cs2[-1] - sl2
            nr = n - nl
            imp = (sl2 - sl * sl / nl) + (sr2 - sr * sr / nr)
        else:
            cc = np.cumsum(ys, axis=0)
            left = cc[:-1]
            right = cc[-1] - left
            nr = n - nl
            gl = nl - (left * left).sum(axis=1) / nl
            gr = nr - (right * right).sum(axis=1) / nr
            imp = gl + gr
        imp = np.where(valid, imp, np.inf)
        i = int(np.argmin(imp))
        # tolerance keeps float noise from overriding the index tie-break
        if best is None or imp[i] < best[0] - 1e-12 * max(1.0, abs(best[0])):
            best = (float(imp[i]), int(f), float((xs[i] + xs[i + 1]) / 2.0))
    return best


def _node_impurity(y_enc, task) -> float:
    if task == "regression":
        return float(np.sum((y_enc - y_enc.mean()) ** 2))
    counts = y_enc.sum(axis=0)
    n = counts.sum()
    return float(n - (counts * counts).sum() / n)


def _leaf_value(y_enc, task) -> np.ndarray:
    if task == "regression":
        return np.array([y_enc.mean()])
    return y_enc.sum(axis=0).astype(float)


def _prepare_targets(y, task, classes=None):
    y = np.asarray(y)
    if task == "regression":
        return y.astype(float), None
    if task != "classification":
        raise ValueError(f"unknown task {task!r}")
    if classes is None:
        classes = np.unique(y)
    lookup = {c: i for i, c in enumerate(classes.tolist())}
    onehot = np.zeros((len(y), len(classes)))
    onehot[np.arange(len(y)), [lookup[v] for v in y.tolist()]] = 1.0
    return onehot, classes


def fit_tree(X, y, task="regression", max_depth=7, min_leaf=1, *,
             max_features=None, rng=None, classes=None) -> TreeModel:
    """Greedy CART.

    Splits minimise weighted variance (regression) or weighted Gini impurity
    (classification) over every feature and every midpoint between adjacent
    distinct values.  ``max_features`` draws a feature subset at each split
    from ``rng``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError("X must be a 2-d array with at least one column")
    n, m = X.shape
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    if n < 2 * min_leaf:
        raise ValueError(f"need at least {2 * min_leaf} rows, got {n}")
    y_enc, classes = _prepare_targets(y, task, classes)
    if len(y_enc) != n:
        raise ValueError("X and y lengths differ")

    feature, threshold, left, right, cover, value = [], [], [], [], [], []

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        cover.append(float(len(idx)))
        value.append(_leaf_value(y_enc[idx], task))
        return len(feature) - 1

    root = new_node(np.arange(n))
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if depth >= max_depth or len(idx) < 2 * min_leaf:
            continue
        yi = y_enc[idx]
        parent_imp = _node_impurity(yi, task)
        if parent_imp <= 1e-12 * max(1.0, len(idx)):
            continue
        if max_features is not None and max_features < m:
            feats = np.sort(rng.choice(m, size=max_features, replace=False))
        else:
            feats = range(m)
        split = _best_split(X[idx], yi, task, min_leaf, feats)
        if split is None or split[0] >= parent_imp - 1e-12 * max(1.0, parent_imp):
            continue
        _, f, thr = split
        mask = X[idx, f] <= thr
        feature[node], threshold[node] = f, thr
        li, ri = idx[mask], idx[~mask]
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # right pushed first so the left subtree is numbered first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return TreeModel(
        feature=np.array(feature), threshold=np.array(threshold),
        left=np.array(left), right=np.array(right), cover=np.array(cover),
        value=np.array(value), max_depth=max_depth, task=task, classes=classes, n_features=m,
    )


# --------------------------------------------------------------------------
# forests


@dataclass
class ForestModel:
    trees: list[TreeModel]
    task: str
    seed: int
    bootstrap_seeds: list[int] = field(default_factory=list)
    max_features: int | None = None
    classes: np.ndarray | None = None

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.task == "regression":
            return np.mean([t.predict(X) for t in self.trees], axis=0)
        votes = np.zeros((len(X), len(self.classes)))
        for t in self.trees:
            pick = np.argmax(t.value[t.apply(X)], axis=1)
            votes[np.arange(len(X)), pick] += 1
        # ties go to the smallest label: classes are sorted and argmax takes the first
        return self.classes[np.argmax(votes, axis=1)]

    def predict_proba(self, X) -> np.ndarray:
        return np.mean([t.predict_proba(X) for t in self.trees], axis=0)

    def to_dict(self) -> dict:
        return {
            "format": "psoxplain-forest",
            "version": MODEL_FORMAT_VERSION,
            "task": self.task,
            "seed": self.seed,
            "bootstrap_seeds": self.bootstrap_seeds,
            "max_features": self.max_features,
            "classes": None if self.classes is None else self.classes.tolist(),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        if d.get("format") != "psoxplain-forest" or d.get("version") != MODEL_FORMAT_VERSION:
            raise ValueError("unsupported forest model format")
        return cls(
            trees=[TreeModel.from_dict(t) for t in d["trees"]], task=d["task"], seed=d["seed"],
            bootstrap_seeds=d["bootstrap_seeds"], max_features=d["max_features"],
            classes=None if d["classes"] is None else np.array(d["classes"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def tree_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


def fit_forest(X, y, task="regression", n_trees=100, max_depth=7, min_leaf=1, seed=0,
               *, bootstrap=True, max_features="auto") -> ForestModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n, m = X.shape
    if max_features == "auto":
        max_features = math.ceil(math.sqrt(m)) if task == "classification" else math.ceil(m / 3)
    classes = np.unique(y) if task == "classification" else None
    trees, seeds = [], []
    for i in range(n_trees):
        s = tree_seed(seed, i)
        rng = np.random.default_rng(s)
        idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(fit_tree(X[idx], y[idx], task, max_depth, min_leaf,
                              max_features=max_features, rng=rng, classes=classes))
        seeds.append(s)
    return ForestModel(trees, task, seed, seeds, max_features, classes)


def as_forest(model) -> ForestModel:
    if isinstance(model, ForestModel):
        return model
    return ForestModel([model], model.task, 0, [], None, model.classes)


def r_squared(pred, y) -> float:
    pred = np.asarray(pred, dtype=float)
    y = np.asarray(y, dtype=float)
    if pred.shape != y.shape or y.size < 2:
        raise ValueError("need equal-length vectors with at least two entries")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        return 0.0
    return 1.0 - float(np.sum((y - pred) ** 2)) / ss_tot
