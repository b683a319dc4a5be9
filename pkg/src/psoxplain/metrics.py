"""Anytime performance (AOCC) and per-function performance statistics."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .configspace import HyperParams, config_key


class IntegrityError(Exception):
    """Data that cannot be right: impossible regret, missing configs, corrupt files."""


@dataclass(frozen=True)
class AoccParams:
    lb: float = -5.0
    ub: float = 5.0
    floor: float = 1e-8

    def __post_init__(self):
        if not self.lb < self.ub:
            raise ValueError("need lb < ub")
        if not self.floor > 0:
            raise ValueError("regret floor must be positive")


DEFAULT_AOCC = AoccParams()


def log_regret_series(best_so_far, f_opt: float = 0.0, params: AoccParams = DEFAULT_AOCC) -> np.ndarray:
    best = np.asarray(getattr(best_so_far, "best_so_far", best_so_far), dtype=float)
    if not np.all(np.isfinite(best)):
        raise ValueError("best-so-far series must be finite")
    regret = best - f_opt
    if np.any(regret < -1e-9):
        raise IntegrityError(f"best-so-far value below f_opt (min regret {regret.min():.3e})")
    return np.log10(np.maximum(regret, params.floor))


def aocc(y, params: AoccParams = DEFAULT_AOCC) -> float:
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("AOCC of an empty series")
    clipped = np.clip(y, params.lb, params.ub)
    return float(np.mean(1.0 - (clipped - params.lb) / (params.ub - params.lb)))


# --------------------------------------------------------------------------
# run records and statistics


@dataclass(frozen=True)
class RunRecord:
    topology: str
    fid: int
    iid: int
    dim: int
    rep: int
    seed: int
    config: HyperParams
    aocc: float
    final_regret: float
    config_id: int = -1


@dataclass(frozen=True)
class PerfStats:
    sbm: float
    sbs: float
    abm: float
    abs: float
    all_mean: float
    all_std: float
    single_best_config: HyperParams
    avg_best_config: HyperParams
    topology: str = ""
    fid: int = 0
    dim: int = 0


def _mean(values) -> float:
    return math.fsum(values) / len(values)


def _pstd(values) -> float:
    m = _mean(values)
    return math.sqrt(math.fsum((v - m) ** 2 for v in values) / len(values))


def _argmax_config(scores: dict[HyperParams, float]) -> HyperParams:
    # highest score wins; ties go to the config that comes first in grid order
    return min(scores, key=lambda hp: (-scores[hp], config_key(hp)))


def performance_stats(records, fid: int | None = None) -> PerfStats:
    """Statistics for one function.

    ``records`` may span several functions of one (topology, dim); the
    average-best configuration is chosen over all of them, the remaining
    statistics are taken on ``fid`` (or on the only function present).
    """
    records = list(records)
    if not records:
        raise ValueError("no run records")
    fids = {r.fid for r in records}
    if fid is None:
        if len(fids) != 1:
            raise ValueError("records span several functions; pass fid")
        fid = next(iter(fids))
    if fid not in fids:
        raise ValueError(f"no records for fid {fid}")

    on_fid: dict[HyperParams, list[float]] = defaultdict(list)
    pooled: dict[HyperParams, list[float]] = defaultdict(list)
    for r in records:
        pooled[r.config].append(r.aocc)
        if r.fid == fid:
            on_fid[r.config].append(r.aocc)

    sb = _argmax_config({hp: _mean(v) for hp, v in on_fid.items()})
    ab = _argmax_config({hp: _mean(v) for hp, v in pooled.items()})
    if ab not in on_fid:
        raise IntegrityError(f"average-best config has no runs on fid {fid}")
    everything = [a for v in on_fid.values() for a in v]
    first = records[0]
    return PerfStats(
        sbm=_mean(on_fid[sb]), sbs=_pstd(on_fid[sb]),
        abm=_mean(on_fid[ab]), abs=_pstd(on_fid[ab]),
        all_mean=_mean(everything), all_std=_pstd(everything),
        single_best_config=sb, avg_best_config=ab,
        topology=first.topology, fid=fid, dim=first.dim,
    )


def performance_table(records) -> list[PerfStats]:
    """One PerfStats per (topology, fid, dim), sorted by that key."""
    groups: dict[tuple[str, int], list[RunRecord]] = defaultdict(list)
    for r in records:
        groups[(r.topology, r.dim)].append(r)
    out = []
    for _, recs in sorted(groups.items()):
        for fid in sorted({r.fid for r in recs}):
            out.append(performance_stats(recs, fid))
    return out
