"""Experiment plans, seeding and the resumable grid sweep."""

from __future__ import annotations

import csv
import hashlib
import json
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .configspace import ConfigSpace, HyperParams, TopologyKind, full_grid, to_record
from .metrics import IntegrityError, RunRecord, aocc, log_regret_series
from .suite import make_instance
from .swarm import RunSpec, run
from .tables import FAILURE_COLUMNS, RUN_COLUMNS, fmt, read_runs, run_row, runs_csv, to_csv

OUT_ENV = "PSOXPLAIN_OUT"
DEFAULT_BUDGETS = {2: 100, 5: 500}
DEFAULT_REPS = 5

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One round of the SplitMix64 output function (Steele, Lea and Flood)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def split64(master: int, *parts: int) -> int:
    """Fold integers into a 64-bit seed: h = mix(master), then h = mix(h xor part)."""
    h = splitmix64(master & _MASK64)
    for p in parts:
        h = splitmix64(h ^ (int(p) & _MASK64))
    return h


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "psoxplain-out"))


def default_budget(dim: int) -> int:
    if dim not in DEFAULT_BUDGETS:
        raise ValueError(f"no default budget for dim={dim}; pass --budget")
    return DEFAULT_BUDGETS[dim]


@dataclass(frozen=True)
class RunKey:
    topology: TopologyKind
    config_id: int
    fid: int
    iid: int
    dim: int
    rep: int

    def text(self) -> str:
        return f"{self.topology.value},{self.config_id},{self.fid},{self.iid},{self.dim},{self.rep}"

    @classmethod
    def parse(cls, text: str) -> "RunKey":
        parts = text.split(",")
        if len(parts) != 6:
            raise ValueError(f"bad run key {text!r}")
        topo, *nums = parts
        return cls(TopologyKind.parse(topo), *(int(v) for v in nums))


@dataclass
class ExperimentPlan:
    topologies: tuple[TopologyKind, ...]
    fids: tuple[int, ...]
    iids: tuple[int, ...]
    dims: tuple[int, ...]
    reps: int = DEFAULT_REPS
    budgets: dict[int, int] = field(default_factory=dict)
    master_seed: int = 0
    configs: ConfigSpace = field(default_factory=full_grid)
    out_dir: Path = field(default_factory=default_out_dir)
    jobs: int = 1
    per_evaluation: bool = False

    def __post_init__(self):
        self.topologies = tuple(TopologyKind(t) for t in self.topologies)
        self.out_dir = Path(self.out_dir)
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if not (self.topologies and self.fids and self.iids and self.dims and len(self.configs)):
            raise ValueError("plan has an empty axis")
        budgets = {}
        for d in self.dims:
            budgets[d] = self.budgets.get(d) or default_budget(d)
        self.budgets = budgets
        # reject bad fids and dims before any work starts
        for fid in self.fids:
            make_instance(fid, 1, 1)
        for d in self.dims:
            if d < 1:
                raise ValueError(f"dim must be >= 1, got {d}")

    @property
    def n_runs(self) -> int:
        return len(self.topologies) * len(self.configs) * len(self.fids) * len(self.iids) * len(self.dims) * self.reps

    def keys(self):
        for topo in self.topologies:
            for fid in self.fids:
                for iid in self.iids:
                    for dim in self.dims:
                        for rep in range(1, self.reps + 1):
                            for cid in range(len(self.configs)):
                                yield RunKey(topo, cid, fid, iid, dim, rep)

    def seed(self, key: RunKey) -> int:
        return split64(self.master_seed, key.topology.index, key.config_id, key.fid, key.iid, key.dim, key.rep)

    def fingerprint(self) -> str:
        """Hash of everything that changes results; guards resumes against a different plan."""
        blob = json.dumps({
            "topologies": [t.value for t in self.topologies], "fids": list(self.fids),
            "iids": list(self.iids), "dims": list(self.dims), "reps": self.reps,
            "budgets": {str(k): v for k, v in sorted(self.budgets.items())},
            "seed": self.master_seed, "configs": [to_record(c) for c in self.configs],
            "per_evaluation": self.per_evaluation,
        }, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()


# --------------------------------------------------------------------------
# single runs


def execute(key: RunKey, config: HyperParams, budget: int, seed: int, per_evaluation: bool = False) -> RunRecord:
    inst = make_instance(key.fid, key.iid, key.dim)
    traj = run(RunSpec(inst, config, key.topology, budget, seed), per_evaluation=per_evaluation)
    score = aocc(log_regret_series(traj, inst.f_opt))
    return RunRecord(key.topology.value, key.fid, key.iid, key.dim, key.rep, seed, config,
                     score, float(traj.best_so_far[-1] - inst.f_opt), key.config_id)


def _execute_safe(args):
    key, config, budget, seed, per_eval = args
    try:
        return key, execute(key, config, budget, seed, per_eval), None
    except Exception as exc:  # recorded in failures.csv, the sweep goes on
        msg = f"{type(exc).__name__}: {exc}"
        if not str(exc):
            msg += " " + traceback.format_exc(limit=1).strip().replace("\n", " ")
        return key, None, msg


# --------------------------------------------------------------------------
# checkpointed sweep

PARTIAL = "runs.partial.csv"
CHECKPOINT = "runs.checkpoint"
FINAL = "runs.csv"
FAILURES = "failures.csv"


@dataclass
class SweepResult:
    complete: bool
    executed: int
    skipped: int
    failures: list[tuple[RunKey, int, str]]
    path: Path | None


def _load_checkpoint(plan: ExperimentPlan, out: Path) -> dict[RunKey, list[str]]:
    """Completed keys and their CSV lines; raises IntegrityError on anything suspicious."""
    ck, part = out / CHECKPOINT, out / PARTIAL
    if not ck.exists():
        if part.exists():
            raise IntegrityError(f"{part} exists without {ck}; refusing to resume")
        return {}
    text = ck.read_text(encoding="utf-8")
    lines = text.split("\n")
    if not lines or not lines[0].startswith("# plan "):
        raise IntegrityError(f"{ck}: missing plan header")
    if lines[0][len("# plan "):] != plan.fingerprint():
        raise IntegrityError(f"{ck}: written by a different plan; use a fresh --out or delete it")
    # the last line may be cut short by a kill; only newline-terminated keys count
    done = set()
    for ln in lines[1:-1]:
        try:
            done.add(RunKey.parse(ln))
        except ValueError as exc:
            raise IntegrityError(f"{ck}: {exc}") from None
    rows: dict[RunKey, list[str]] = {}
    if part.exists():
        with open(part, newline="", encoding="utf-8") as fh:
            body = fh.read()
        complete_body = body[: body.rfind("\n") + 1]
        reader = csv.reader(complete_body.splitlines())
        header = next(reader, None)
        if header is None or tuple(header) != RUN_COLUMNS:
            raise IntegrityError(f"{part}: bad header")
        for row in reader:
            if len(row) != len(RUN_COLUMNS):
                raise IntegrityError(f"{part}: malformed row {row}")
            try:
                key = RunKey.parse(",".join(row[:6]))
            except ValueError as exc:
                raise IntegrityError(f"{part}: {exc}") from None
            rows[key] = row
    missing = done - set(rows)
    if missing:
        raise IntegrityError(f"{ck}: {len(missing)} completed keys have no row in {part}")
    return {k: rows[k] for k in done}


def run_sweep(plan: ExperimentPlan, max_runs: int | None = None, progress=None) -> SweepResult:
    """Execute every run of ``plan``, resuming from the checkpoint in ``plan.out_dir``.

    ``max_runs`` stops after that many new runs (an interruption, for
    tests); the final ``runs.csv`` is only written once every key is done.
    """
    out = plan.out_dir
    out.mkdir(parents=True, exist_ok=True)
    done = _load_checkpoint(plan, out)
    ck_path, part_path = out / CHECKPOINT, out / PARTIAL

    if not ck_path.exists():
        ck_path.write_text(f"# plan {plan.fingerprint()}\n", encoding="utf-8")
    # rewrite the partial file from verified rows, dropping any torn tail
    with open(part_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(to_csv(RUN_COLUMNS, []))
        for row in done.values():
            fh.write(",".join(row) + "\n")
    # same for the checkpoint
    with open(ck_path, "w", encoding="utf-8") as fh:
        fh.write(f"# plan {plan.fingerprint()}\n")
        fh.writelines(k.text() + "\n" for k in done)

    todo = [k for k in plan.keys() if k not in done]
    if max_runs is not None:
        todo = todo[:max_runs]
    tasks = [(k, plan.configs[k.config_id], plan.budgets[k.dim], plan.seed(k), plan.per_evaluation) for k in todo]

    failures: list[tuple[RunKey, int, str]] = []
    executed = 0
    with open(part_path, "a", encoding="utf-8", newline="") as part, open(ck_path, "a", encoding="utf-8") as ck:
        if plan.jobs > 1 and len(tasks) > 1:
            pool = ProcessPoolExecutor(max_workers=plan.jobs)
            results = pool.map(_execute_safe, tasks, chunksize=max(1, len(tasks) // (plan.jobs * 16)))
        else:
            pool = None
            results = map(_execute_safe, tasks)
        try:
            for (key, record, error), task in zip(results, tasks):
                if record is None:
                    failures.append((key, task[3], error))
                    continue
                # row first, then key: a key on disk always has its row
                part.write(",".join(fmt(v) for v in run_row(record)) + "\n")
                part.flush()
                ck.write(key.text() + "\n")
                ck.flush()
                executed += 1
                if progress is not None:
                    progress(executed, len(tasks))
        finally:
            if pool is not None:
                pool.shutdown()

    if failures:
        (out / FAILURES).write_text(to_csv(FAILURE_COLUMNS, [
            [k.topology.value, k.config_id, k.fid, k.iid, k.dim, k.rep, seed, err] for k, seed, err in failures
        ]), encoding="utf-8")
    elif (out / FAILURES).exists():
        (out / FAILURES).unlink()

    finished = len(done) + executed
    complete = finished == plan.n_runs
    path = None
    if complete:
        path = out / FINAL
        path.write_text(runs_csv(read_runs(part_path)), encoding="utf-8")
    return SweepResult(complete, executed, len(done), failures, path)


# --------------------------------------------------------------------------
# ELA sweep


def ela_sample_seed(master: int, fid: int, iid: int, dim: int) -> int:
    # 32 bits keep the value readable and exact in any CSV consumer
    return split64(master, 0xE1A, fid, iid, dim) & 0xFFFFFFFF


def _ela_one(args):
    import warnings

    from .ela import ElaWarning, compute_features
    from .sampling import sample_instance

    fid, iid, dim, n, seed, method = args
    sample = sample_instance(make_instance(fid, iid, dim), n, seed, method)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ElaWarning)
        return compute_features(sample)


def ela_sweep(fids, iids, dims, n=1000, seed=0, method="latin_hypercube", jobs=1):
    tasks = [(f, i, d, n, ela_sample_seed(seed, f, i, d), method) for f in fids for i in iids for d in dims]
    tasks.sort(key=lambda t: (t[0], t[1], t[2]))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_ela_one, tasks))
    return [_ela_one(t) for t in tasks]

