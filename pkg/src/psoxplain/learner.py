"""Landscape-aware configuration learning with LoFo / LoIo validation.

Rows are problem instances ``(fid, iid, dim)`` described by their ELA
feature vector; the label of a row is the configuration with the best mean
AOCC on that instance.  Models predict one hyperparameter at a time (one
classifier per parameter), and the predicted configuration is scored by
looking its AOCC up in the run table.
"""

from __future__ import annotations

import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .configspace import DOMAINS, PARAM_NAMES, HyperParams, config_key, to_record
from .ela import FEATURE_NAMES
from .metrics import IntegrityError
from .trees import LEAF, TreeModel, fit_forest, fit_tree

METHODS = ("DT", "RF", "SB", "AB")
SCHEMES = ("LoFo", "LoIo")


def mean_aocc_table(runs) -> dict[tuple, dict[HyperParams, float]]:
    """(fid, iid, dim) -> config -> mean AOCC over repetitions."""
    acc: dict[tuple, dict[HyperParams, list[float]]] = defaultdict(lambda: defaultdict(list))
    topologies = set()
    for r in runs:
        topologies.add(r.topology)
        acc[(r.fid, r.iid, r.dim)][r.config].append(r.aocc)
    if len(topologies) > 1:
        raise ValueError(f"run table mixes topologies {sorted(topologies)}; split it first")
    return {key: {hp: math.fsum(v) / len(v) for hp, v in cfgs.items()} for key, cfgs in acc.items()}


def best_config(scores: dict[HyperParams, float]) -> HyperParams:
    return min(scores, key=lambda hp: (-scores[hp], config_key(hp)))


def snap_to_grid(name: str, value: float) -> float:
    """Nearest value of the parameter's grid; ties go to the smaller value."""
    dom = sorted(DOMAINS[name])
    return min(dom, key=lambda v: (abs(v - value), v))


def performance_classes(values, thresholds) -> np.ndarray:
    """Bin AOCC values by user-supplied, increasing thresholds (0 = worst bin)."""
    return np.digitize(np.asarray(values, dtype=float), np.asarray(thresholds, dtype=float))


@dataclass
class LabeledDataset:
    keys: list[tuple[int, int, int]]
    X: np.ndarray
    best: list[HyperParams]
    best_aocc: np.ndarray
    targets: tuple[str, ...] = ("w",)
    feature_names: tuple[str, ...] = FEATURE_NAMES
    excluded: list[tuple[int, int, int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.keys)

    def labels(self, name: str) -> np.ndarray:
        return np.array([getattr(hp, name) for hp in self.best])

    @property
    def fids(self) -> np.ndarray:
        return np.array([k[0] for k in self.keys])

    @property
    def iids(self) -> np.ndarray:
        return np.array([k[1] for k in self.keys])


def build_dataset(runs, ela, targets=("w",)) -> LabeledDataset:
    """One row per instance in the run table that has an ELA vector.

    ``ela`` maps ``(fid, iid, dim)`` to an ElaVector or a feature array in
    canonical order.  Instances without features are listed in
    ``excluded`` rather than dropped silently.
    """
    table = mean_aocc_table(runs)
    for t in targets:
        if t not in PARAM_NAMES:
            raise ValueError(f"unknown target parameter {t!r}")
    keys, rows, best, best_val, excluded = [], [], [], [], []
    for key in sorted(table):
        vec = ela.get(key)
        if vec is None:
            excluded.append(key)
            continue
        arr = vec.as_array() if hasattr(vec, "as_array") else np.asarray(vec, dtype=float)
        hp = best_config(table[key])
        keys.append(key)
        rows.append(arr)
        best.append(hp)
        best_val.append(table[key][hp])
    X = np.array(rows) if rows else np.empty((0, len(FEATURE_NAMES)))
    return LabeledDataset(keys, X, best, np.array(best_val), tuple(targets), FEATURE_NAMES, excluded)


# --------------------------------------------------------------------------
# models


def impute_median(train: np.ndarray, *others: np.ndarray):
    """Replace non-finite features by the training column median (0 if none)."""
    if len(train) == 0:
        raise ValueError("cannot impute from an empty training set")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN columns fall back to 0 below
        med = np.nanmedian(np.where(np.isfinite(train), train, np.nan), axis=0)
    med = np.where(np.isfinite(med), med, 0.0)

    def fill(a):
        a = a.copy()
        bad = ~np.isfinite(a)
        a[bad] = np.take(med, np.nonzero(bad)[1])
        return a

    return (fill(train),) + tuple(fill(o) for o in others)


@dataclass
class ConfigModel:
    """One classifier per target hyperparameter.

    Parameters that are not targets are filled in from ``pool``: the
    best-scoring pooled training configuration that agrees with the
    predicted target values.
    """

    kind: str
    models: dict[str, object]
    pool: dict[HyperParams, float]

    def predict_targets(self, X: np.ndarray) -> list[dict[str, float]]:
        preds = {name: m.predict(X) for name, m in self.models.items()}
        return [{n: snap_to_grid(n, float(preds[n][i])) for n in preds} for i in range(len(X))]

    def complete(self, values: dict[str, float]) -> HyperParams:
        match = {hp: s for hp, s in self.pool.items() if all(getattr(hp, n) == v for n, v in values.items())}
        if not match:
            raise IntegrityError(f"no training configuration has {values}")
        return best_config(match)

    def predict(self, X: np.ndarray) -> list[HyperParams]:
        return [self.complete(v) for v in self.predict_targets(X)]


def fit_config_model(X, best: list[HyperParams], targets, kind="DT", depth=7, seed=0,
                     pool: dict[HyperParams, float] | None = None, n_trees=100) -> ConfigModel:
    models = {}
    for name in targets:
        y = np.array([getattr(hp, name) for hp in best])
        if kind == "DT":
            models[name] = fit_tree(X, y, "classification", max_depth=depth, min_leaf=1)
        elif kind == "RF":
            models[name] = fit_forest(X, y, "classification", n_trees=n_trees, max_depth=depth,
                                      min_leaf=1, seed=seed)
        else:
            raise ValueError(f"unknown model kind {kind!r}")
    if pool is None:
        pool = {hp: 0.0 for hp in best}
    return ConfigModel(kind, models, pool)


# --------------------------------------------------------------------------
# validation


@dataclass
class FoldResult:
    scheme: str
    fold: int
    method: str
    predicted: list[HyperParams]
    achieved: float
    sbm: float

    @property
    def aocc_loss(self) -> float:
        return self.sbm - self.achieved

    @property
    def predicted_config(self) -> str:
        return "|".join(to_record(hp) for hp in self.predicted)


@dataclass
class ValidationReport:
    scheme: str
    folds: list[FoldResult]

    def by_method(self, method: str) -> list[FoldResult]:
        return [f for f in self.folds if f.method == method]

    def fold_keys(self) -> list[int]:
        return sorted({f.fold for f in self.folds})

    def summary(self) -> dict[str, dict[str, float]]:
        out = {}
        for m in METHODS:
            losses = np.array([f.aocc_loss for f in self.by_method(m)])
            if losses.size:
                out[m] = {"mean": float(losses.mean()), "median": float(np.median(losses)),
                          "max": float(losses.max()), "n": int(losses.size)}
        return out


def pooled_scores(table, keys) -> dict[HyperParams, float]:
    """Mean AOCC of every configuration over the given instances."""
    pooled: dict[HyperParams, list[float]] = defaultdict(list)
    for key in keys:
        for hp, v in table[key].items():
            pooled[hp].append(v)
    return {hp: math.fsum(v) / len(v) for hp, v in pooled.items()}


def validate(dataset: LabeledDataset, runs, scheme="LoFo", model_kinds=("DT", "RF"),
             depth=7, seed=0, n_trees=100) -> ValidationReport:
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    table = mean_aocc_table(runs)
    groups = dataset.fids if scheme == "LoFo" else dataset.iids
    results: list[FoldResult] = []
    for fold in np.unique(groups):
        test = np.flatnonzero(groups == fold)
        train = np.flatnonzero(groups != fold)
        test_keys = [dataset.keys[i] for i in test]
        oracle = [table[k][dataset.best[i]] for k, i in zip(test_keys, test)]
        sbm = math.fsum(oracle) / len(oracle)

        def score(method, configs):
            vals = []
            for key, hp in zip(test_keys, configs):
                if hp not in table[key]:
                    raise IntegrityError(f"{method} predicted {to_record(hp)} which has no runs on {key}")
                vals.append(table[key][hp])
            results.append(FoldResult(scheme, int(fold), method, list(configs),
                                      math.fsum(vals) / len(vals), sbm))

        score("SB", [dataset.best[i] for i in test])
        if len(train) == 0:
            continue
        pool = pooled_scores(table, [dataset.keys[i] for i in train])
        score("AB", [best_config(pool)] * len(test))
        Xtr, Xte = impute_median(dataset.X[train], dataset.X[test])
        for kind in model_kinds:
            model = fit_config_model(Xtr, [dataset.best[i] for i in train], dataset.targets,
                                     kind, depth, seed, pool=pool, n_trees=n_trees)
            score(kind, model.predict(Xte))
    order = {m: i for i, m in enumerate(METHODS)}
    results.sort(key=lambda f: (f.fold, order.get(f.method, len(order))))
    return ValidationReport(scheme, results)


# --------------------------------------------------------------------------
# rule export


def _fmt_label(v) -> str:
    v = v.item() if hasattr(v, "item") else v
    return repr(v) if isinstance(v, float) else str(v)


def export_tree_rules(tree: TreeModel, feature_names, label: str = "w") -> str:
    """One line per leaf, depth-first with the ``<=`` branch first.

    Each line is the conjunction of split conditions on the path followed by
    the leaf's training-class histogram.
    """
    lines = []

    def hist(node):
        counts = tree.value[node]
        if tree.classes is None:
            return f"[value={counts[0]!r} | n={int(tree.cover[node])}]"
        parts = [f"{label}={_fmt_label(c)}: {int(round(k))}" for c, k in zip(tree.classes, counts)]
        return "[" + " | ".join(parts) + "]"

    def walk(node, conds):
        if tree.feature[node] == LEAF:
            body = " AND ".join(conds) if conds else "TRUE"
            lines.append(f"{body} → {hist(node)}")
            return
        name = feature_names[tree.feature[node]]
        thr = f"{tree.threshold[node]:.10g}"
        walk(tree.left[node], conds + [f"{name} ≤ {thr}"])
        walk(tree.right[node], conds + [f"{name} > {thr}"])

    walk(0, [])
    return "\n".join(lines) + "\n"
