"""Hyperparameter attribution: a forest surrogate of AOCC explained with TreeSHAP."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .configspace import PARAM_NAMES
from .trees import ForestModel, fit_forest, r_squared
from .treeshap import shap_values

SURROGATE_FEATURES = PARAM_NAMES + ("instance_variance", "stochastic_variance")


@dataclass
class ShapTable:
    """Per-record attributions of one (topology, fid, dim) group."""

    topology: str
    fid: int
    dim: int
    features: tuple[str, ...]
    X: np.ndarray
    shap: np.ndarray
    base_value: float
    prediction: np.ndarray
    r2_train: float
    record_ids: np.ndarray
    model: ForestModel | None = None

    def rows(self):
        """(record_id, feature, feature_value, shap_value) in record then feature order."""
        for i, rid in enumerate(self.record_ids):
            for j, name in enumerate(self.features):
                yield int(rid), name, float(self.X[i, j]), float(self.shap[i, j])

    def mean_abs(self) -> dict[str, float]:
        return dict(zip(self.features, np.abs(self.shap).mean(axis=0).tolist()))


def surrogate_matrix(records) -> np.ndarray:
    return np.array(
        [[getattr(r.config, n) for n in PARAM_NAMES] + [r.iid, r.rep] for r in records],
        dtype=float,
    )


def aggregate_shap(records, seed: int = 0, *, n_trees: int = 30, max_depth: int = 8,
                   min_leaf: int = 5, record_ids=None) -> ShapTable:
    """Fit a regression forest of AOCC on the run settings and explain every record."""
    records = list(records)
    if len(records) < 30:
        raise ValueError(f"need at least 30 run records, got {len(records)}")
    keys = {(r.topology, r.fid, r.dim) for r in records}
    if len(keys) != 1:
        raise ValueError("records must share topology, fid and dim")
    topology, fid, dim = keys.pop()
    X = surrogate_matrix(records)
    y = np.array([r.aocc for r in records])
    ids = np.arange(len(records)) if record_ids is None else np.asarray(record_ids)
    model = fit_forest(X, y, "regression", n_trees=n_trees, max_depth=max_depth,
                       min_leaf=min_leaf, seed=seed)
    phi, base, pred = shap_values(model, X)
    if np.ptp(y) == 0:
        warnings.warn(f"constant AOCC for {topology} f{fid} d{dim}; R2 reported as 0", RuntimeWarning, stacklevel=2)
        r2 = 0.0
    else:
        r2 = r_squared(model.predict(X), y)
    return ShapTable(topology, fid, dim, SURROGATE_FEATURES, X, phi, base, pred, r2, ids, model)
