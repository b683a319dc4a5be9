"""Design-space sampling of a problem instance for landscape analysis."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import qmc

from .suite import LOWER, UPPER, ProblemInstance, evaluate_batch

METHODS = ("uniform", "latin_hypercube", "sobol")


@dataclass(frozen=True)
class SampleSet:
    X: np.ndarray
    y: np.ndarray
    fid: int
    iid: int
    dim: int
    sample_seed: int
    method: str

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X rows and y length differ")

    @property
    def n(self) -> int:
        return self.X.shape[0]


def _unit_points(n: int, dim: int, seed: int, method: str) -> np.ndarray:
    if method == "uniform":
        return np.random.default_rng(seed).random((n, dim))
    if method == "latin_hypercube":
        return qmc.LatinHypercube(d=dim, seed=np.random.default_rng(seed)).random(n)
    if method == "sobol":
        sampler = qmc.Sobol(d=dim, scramble=True, seed=np.random.default_rng(seed))
        with warnings.catch_warnings():
            # balance warning for n not a power of two
            warnings.simplefilter("ignore", UserWarning)
            return sampler.random(n)
    raise ValueError(f"unknown sampling method {method!r}; expected one of {METHODS}")


def sample_instance(instance: ProblemInstance, n: int, seed: int, method: str = "latin_hypercube") -> SampleSet:
    if n < 2:
        raise ValueError(f"need n >= 2 sample points, got {n}")
    U = _unit_points(n, instance.dim, seed, method)
    X = LOWER + (UPPER - LOWER) * U
    # guard against rounding past the upper edge
    np.clip(X, LOWER, UPPER, out=X)
    y = evaluate_batch(instance, X)
    return SampleSet(X, y, instance.fid, instance.iid, instance.dim, seed, method)


def write_sample_csv(sample: SampleSet, path) -> None:
    header = [f"x{j + 1}" for j in range(sample.dim)] + ["y"]
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row, val in zip(sample.X, sample.y):
            w.writerow([f"{v:.17g}" for v in row] + [f"{val:.17g}"])


def read_sample_csv(path, *, fid=0, iid=0, sample_seed=0, method="file") -> SampleSet:
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    X, y = data[:, :-1], data[:, -1]
    return SampleSet(X, y, fid, iid, X.shape[1], sample_seed, method)
