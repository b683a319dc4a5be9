"""CSV schemas and readers/writers for every pipeline artifact.

Floats are written with ``repr`` (shortest string that round-trips), so a
file read back and re-written is byte-identical.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from .configspace import PARAM_NAMES, HyperParams, TopologyKind, config_from_mapping, to_record
from .ela import FEATURE_NAMES, ElaVector
from .metrics import IntegrityError, PerfStats, RunRecord

RUN_COLUMNS = ("topology", "config_id", "fid", "iid", "dim", "rep", "seed") + PARAM_NAMES + ("aocc", "final_regret")
FAILURE_COLUMNS = ("topology", "config_id", "fid", "iid", "dim", "rep", "seed", "error")
ELA_COLUMNS = ("fid", "iid", "dim", "sample_seed") + FEATURE_NAMES + ("warnings",)
STATS_COLUMNS = ("topology", "fid", "dim", "sbm", "sbs", "abm", "abs", "all_mean", "all_std", "sb_config", "ab_config")
SHAP_COLUMNS = ("topology", "fid", "dim", "feature", "feature_value", "shap_value", "record_id")
SURROGATE_COLUMNS = ("topology", "fid", "dim", "n_records", "r2_train", "base_value")
VALIDATION_COLUMNS = ("scheme", "fold", "method", "predicted_config", "achieved_aocc", "sbm", "aocc_loss")


class SchemaError(ValueError):
    """A CSV header does not match the documented column list."""


def fmt(value) -> str:
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else ("nan" if math.isnan(value) else repr(value))
    if isinstance(value, TopologyKind):
        return value.value
    return str(value)


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns, rows) -> None:
    Path(path).write_text(to_csv(columns, rows), encoding="utf-8")


def read_csv(path, columns) -> list[dict[str, str]]:
    """Rows of a file whose header must equal ``columns`` exactly."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = tuple(reader.fieldnames or ())
        check_header(header, columns, path.name)
        return list(reader)


def check_header(header, columns, name="input") -> None:
    for i, col in enumerate(columns):
        if i >= len(header):
            raise SchemaError(f"{name}: missing column {col!r}")
        if header[i] != col:
            raise SchemaError(f"{name}: column {i + 1} is {header[i]!r}, expected {col!r}")
    if len(header) > len(columns):
        raise SchemaError(f"{name}: unexpected column {header[len(columns)]!r}")


# --------------------------------------------------------------------------
# runs


def run_row(r: RunRecord) -> list:
    return [r.topology, r.config_id, r.fid, r.iid, r.dim, r.rep, r.seed,
            *(getattr(r.config, n) for n in PARAM_NAMES), r.aocc, r.final_regret]


def run_sort_key(r: RunRecord) -> tuple:
    return (TopologyKind(r.topology).index, r.fid, r.iid, r.dim, r.rep, r.config_id)


def parse_run(row: dict[str, str]) -> RunRecord:
    try:
        return RunRecord(
            topology=TopologyKind.parse(row["topology"]).value,
            fid=int(row["fid"]), iid=int(row["iid"]), dim=int(row["dim"]), rep=int(row["rep"]),
            seed=int(row["seed"]), config=config_from_mapping(row),
            aocc=float(row["aocc"]), final_regret=float(row["final_regret"]),
            config_id=int(row["config_id"]),
        )
    except (TypeError, ValueError) as exc:
        raise IntegrityError(f"malformed run row {row}: {exc}") from exc


def runs_csv(records) -> str:
    return to_csv(RUN_COLUMNS, (run_row(r) for r in sorted(records, key=run_sort_key)))


def read_runs(path) -> list[RunRecord]:
    return [parse_run(row) for row in read_csv(path, RUN_COLUMNS)]


# --------------------------------------------------------------------------
# ELA


def ela_row(v: ElaVector) -> list:
    return [v.fid, v.iid, v.dim, v.sample_seed, *(float(v.values.get(k, math.nan)) for k in FEATURE_NAMES),
            " | ".join(v.warnings)]


def read_ela(path) -> dict[tuple[int, int, int], ElaVector]:
    out = {}
    for row in read_csv(path, ELA_COLUMNS):
        key = (int(row["fid"]), int(row["iid"]), int(row["dim"]))
        values = {k: float(row[k]) for k in FEATURE_NAMES}
        notes = [s for s in row["warnings"].split(" | ") if s]
        out[key] = ElaVector(values, *key, sample_seed=int(row["sample_seed"]), warnings=notes)
    return out


# --------------------------------------------------------------------------
# statistics and validation


def stats_row(s: PerfStats) -> list:
    return [s.topology, s.fid, s.dim, s.sbm, s.sbs, s.abm, s.abs, s.all_mean, s.all_std,
            to_record(s.single_best_config), to_record(s.avg_best_config)]


def validation_rows(report) -> list[list]:
    return [[f.scheme, f.fold, f.method, f.predicted_config, f.achieved, f.sbm, f.aocc_loss]
            for f in report.folds]


def config_cell(hp: HyperParams) -> str:
    return to_record(hp)
