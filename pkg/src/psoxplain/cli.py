"""Command-line entry point: ``psoxplain <verb> [options]``.

Exit codes: 0 success, 1 argument or input errors, 2 integrity errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from .configspace import PARAM_NAMES, TopologyKind, full_grid, loads_space, random_configs
from .ela import FEATURE_NAMES
from .explain import aggregate_shap
from .learner import (
    build_dataset, export_tree_rules, fit_config_model, impute_median, mean_aocc_table, pooled_scores, validate,
)
from .metrics import IntegrityError, performance_table
from .pipeline import ExperimentPlan, default_out_dir, ela_sweep, run_sweep
from .plots import swarm_svg
from .sampling import METHODS
from .suite import N_FUNCTIONS, evaluate_batch, make_instance
from .tables import (
    ELA_COLUMNS, SHAP_COLUMNS, STATS_COLUMNS, SURROGATE_COLUMNS, VALIDATION_COLUMNS,
    ela_row, read_ela, read_runs, stats_row, validation_rows, write_csv,
)

log = logging.getLogger("psoxplain")


class ArgumentError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(f"{self.prog}: {message}")


def int_list(text: str) -> tuple[int, ...]:
    """``"1-3,7"`` -> (1, 2, 3, 7)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        try:
            out.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return tuple(dict.fromkeys(out))


def topology_list(text: str) -> tuple[TopologyKind, ...]:
    if text.lower() == "all":
        return tuple(TopologyKind)
    try:
        return tuple(TopologyKind.parse(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _out(args) -> Path:
    out = Path(args.out) if args.out else default_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _input(args, name, default) -> Path:
    value = getattr(args, name)
    return Path(value) if value else _out(args) / default


def _common(p, *, grid=True):
    p.add_argument("--out", help="output directory (default: $PSOXPLAIN_OUT or ./psoxplain-out)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    if grid:
        p.add_argument("--topology", type=topology_list, default=tuple(TopologyKind), help="comma list or 'all'")
        p.add_argument("--fids", type=int_list, default=tuple(range(1, N_FUNCTIONS + 1)))
        p.add_argument("--iids", type=int_list, default=(1, 2, 3, 4, 5))
        p.add_argument("--dims", type=int_list, default=(2,))


def _filter(records, args):
    keep = []
    topo = {t.value for t in getattr(args, "topology", None) or ()}
    for r in records:
        if topo and r.topology not in topo:
            continue
        if args.fids and r.fid not in args.fids:
            continue
        if args.dims and r.dim not in args.dims:
            continue
        keep.append(r)
    if not keep:
        raise ArgumentError("no run records left after filtering")
    return keep


def _filter_flags(p):
    p.add_argument("--topology", type=topology_list, default=None)
    p.add_argument("--fids", type=int_list, default=None)
    p.add_argument("--dims", type=int_list, default=None)


# --------------------------------------------------------------------------
# verbs


def cmd_run(args) -> int:
    if args.configs == "grid":
        configs = full_grid()
    elif args.configs.startswith("random:"):
        configs = random_configs(int(args.configs.split(":", 1)[1]), args.seed)
    else:
        configs = loads_space(Path(args.configs).read_text(encoding="utf-8"))
    budgets = {d: args.budget for d in args.dims} if args.budget else {}
    plan = ExperimentPlan(args.topology, args.fids, args.iids, args.dims, args.reps, budgets,
                          args.seed, configs, _out(args), args.jobs, args.per_evaluation)
    log.info("plan: %d runs into %s", plan.n_runs, plan.out_dir)
    res = run_sweep(plan, max_runs=args.max_runs)
    for key, _, err in res.failures:
        log.warning("run %s failed: %s", key.text(), err)
    if res.complete:
        print(f"{res.path}: {plan.n_runs} runs ({res.executed} new, {res.skipped} resumed, {len(res.failures)} failed)")
    else:
        print(f"stopped after {res.executed} new runs; rerun the same command to resume")
    return 0


def cmd_ela(args) -> int:
    if args.n < 2:
        raise ArgumentError("--n must be at least 2")
    vectors = ela_sweep(args.fids, args.iids, args.dims, args.n, args.seed, args.method, args.jobs)
    path = _out(args) / "ela.csv"
    write_csv(path, ELA_COLUMNS, (ela_row(v) for v in vectors))
    for v in vectors:
        for w in v.warnings:
            log.warning("f%d i%d d%d: %s", v.fid, v.iid, v.dim, w)
    print(f"{path}: {len(vectors)} rows")
    return 0


def cmd_stats(args) -> int:
    records = _filter(read_runs(_input(args, "runs", "runs.csv")), args)
    table = performance_table(records)
    table.sort(key=lambda s: (TopologyKind(s.topology).index, s.fid, s.dim))
    path = _out(args) / "stats.csv"
    write_csv(path, STATS_COLUMNS, (stats_row(s) for s in table))
    print(f"{path}: {len(table)} rows")
    return 0


def cmd_explain(args) -> int:
    records = read_runs(_input(args, "runs", "runs.csv"))
    ids = {id(r): i for i, r in enumerate(records)}
    records = _filter(records, args)
    groups = defaultdict(list)
    for r in records:
        groups[(TopologyKind(r.topology).index, r.fid, r.dim)].append(r)
    out = _out(args)
    shap_rows, surrogate_rows = [], []
    plots = defaultdict(list)
    for (_, fid, dim), recs in sorted(groups.items()):
        table = aggregate_shap(recs, args.seed, n_trees=args.trees, max_depth=args.depth,
                               min_leaf=args.min_leaf, record_ids=[ids[id(r)] for r in recs])
        for rid, name, value, phi in table.rows():
            shap_rows.append([table.topology, fid, dim, name, value, phi, rid])
        surrogate_rows.append([table.topology, fid, dim, len(recs), table.r2_train, table.base_value])
        (out / f"surrogate_{table.topology}_f{fid}_d{dim}.json").write_text(table.model.dumps(), encoding="utf-8")
        plots[(table.topology, fid)].append(table)
    write_csv(out / "shap.csv", SHAP_COLUMNS, shap_rows)
    write_csv(out / "surrogates.csv", SURROGATE_COLUMNS, surrogate_rows)
    for (topo, fid), tables in plots.items():
        X = np.vstack([t.X for t in tables])
        phi = np.vstack([t.shap for t in tables])
        dims = ",".join(str(t.dim) for t in tables)
        svg = swarm_svg(tables[0].features, X, phi, title=f"{topo} f{fid} (dim {dims})", seed=args.seed)
        (out / f"swarm_{topo}_f{fid}.svg").write_text(svg, encoding="utf-8")
    print(f"{out / 'shap.csv'}: {len(shap_rows)} rows, {len(groups)} surrogates")
    return 0


def _targets(text: str) -> tuple[str, ...]:
    if text == "config":
        return PARAM_NAMES
    names = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [t for t in names if t not in PARAM_NAMES]
    if bad or not names:
        raise ArgumentError(f"unknown target {bad or text!r}; use one of {', '.join(PARAM_NAMES)} or 'config'")
    return names


def _by_topology(records):
    groups = defaultdict(list)
    for r in records:
        groups[r.topology].append(r)
    return sorted(groups.items(), key=lambda kv: TopologyKind(kv[0]).index)


def _report_exclusions(ds, out, topo):
    if ds.excluded:
        path = out / f"excluded_{topo}.csv"
        write_csv(path, ("fid", "iid", "dim"), ds.excluded)
        log.warning("%s: %d instances have no ELA row, listed in %s", topo, len(ds.excluded), path)


def cmd_learn(args) -> int:
    runs = _filter(read_runs(_input(args, "runs", "runs.csv")), args)
    ela = read_ela(_input(args, "ela", "ela.csv"))
    targets = _targets(args.target)
    out = _out(args)
    for topo, recs in _by_topology(runs):
        ds = build_dataset(recs, ela, targets)
        _report_exclusions(ds, out, topo)
        if len(ds) < 2:
            raise ArgumentError(f"{topo}: need at least two labelled instances, got {len(ds)}")
        (X,) = impute_median(ds.X)
        pool = pooled_scores(mean_aocc_table(recs), ds.keys)
        model = fit_config_model(X, ds.best, targets, args.model, args.depth, args.seed, pool=pool, n_trees=args.trees)
        for name, m in model.models.items():
            (out / f"learner_{topo}_{name}.json").write_text(
                json.dumps(m.to_dict(), indent=1), encoding="utf-8")
            if args.model == "DT":
                rules = export_tree_rules(m, FEATURE_NAMES, label=name)
                (out / f"rules_{topo}_{name}.txt").write_text(rules, encoding="utf-8")
        print(f"{topo}: {args.model} on {len(ds)} instances, targets {','.join(targets)}")
    return 0


def cmd_validate(args) -> int:
    runs = _filter(read_runs(_input(args, "runs", "runs.csv")), args)
    ela = read_ela(_input(args, "ela", "ela.csv"))
    targets = _targets(args.target)
    kinds = tuple(k.strip() for k in args.model.split(",") if k.strip())
    if any(k not in ("DT", "RF") for k in kinds):
        raise ArgumentError("--model takes DT, RF or DT,RF")
    out = _out(args)
    for topo, recs in _by_topology(runs):
        ds = build_dataset(recs, ela, targets)
        _report_exclusions(ds, out, topo)
        report = validate(ds, recs, args.scheme, kinds, args.depth, args.seed, n_trees=args.trees)
        path = out / f"validation_{topo}_{args.scheme}.csv"
        write_csv(path, VALIDATION_COLUMNS, validation_rows(report))
        print(f"{path}: {len(report.fold_keys())} folds")
        for method, s in report.summary().items():
            print(f"  {method}: mean loss {s['mean']:.4g}, median {s['median']:.4g}, max {s['max']:.4g}")
    return 0


def cmd_bench_eval(args) -> int:
    inst = make_instance(args.fid, args.iid, args.dim)
    if args.x:
        X = np.array([[float(v) for v in args.x.split(",")]])
        if X.shape[1] != args.dim:
            raise ArgumentError(f"--x has {X.shape[1]} coordinates, expected {args.dim}")
    else:
        X = np.random.default_rng(args.seed).uniform(-5, 5, (args.probes, args.dim))
    for row, val in zip(X, evaluate_batch(inst, X)):
        print(",".join(repr(float(v)) for v in row) + f" -> {float(val)!r}")
    print(f"# {inst.name}: f_opt={inst.f_opt!r} at x_opt={','.join(repr(float(v)) for v in inst.x_opt)}")
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="psoxplain", description="Explainable PSO benchmarking pipeline.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="grid sweep of PSO runs -> runs.csv")
    _common(r)
    r.add_argument("--reps", type=int, default=5)
    r.add_argument("--budget", type=int, default=None, help="iterations (default 100 at dim 2, 500 at dim 5)")
    r.add_argument("--configs", default="grid", help="'grid', 'random:N' or a config CSV file")
    r.add_argument("--per-evaluation", action="store_true", help="AOCC over evaluations, not iterations")
    r.add_argument("--max-runs", type=int, default=None, help="stop after N new runs (resume later)")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("ela", help="landscape features -> ela.csv")
    _common(e)
    e.add_argument("--n", type=int, default=1000, help="sample size")
    e.add_argument("--method", choices=METHODS, default="latin_hypercube")
    e.set_defaults(func=cmd_ela)

    s = sub.add_parser("stats", help="per-function performance statistics -> stats.csv")
    _common(s, grid=False)
    _filter_flags(s)
    s.add_argument("--runs", help="run CSV (default: <out>/runs.csv)")
    s.set_defaults(func=cmd_stats)

    x = sub.add_parser("explain", help="surrogate forests + TreeSHAP -> shap.csv, SVG swarm plots")
    _common(x, grid=False)
    _filter_flags(x)
    x.add_argument("--runs")
    x.add_argument("--trees", type=int, default=30)
    x.add_argument("--depth", type=int, default=8)
    x.add_argument("--min-leaf", type=int, default=5)
    x.set_defaults(func=cmd_explain)

    for verb, func, help_ in (("learn", cmd_learn, "fit landscape -> config models, export rules"),
                              ("validate", cmd_validate, "LoFo / LoIo validation report")):
        q = sub.add_parser(verb, help=help_)
        _common(q, grid=False)
        _filter_flags(q)
        q.add_argument("--runs")
        q.add_argument("--ela")
        q.add_argument("--target", default="w", help="parameter name(s), comma separated, or 'config'")
        q.add_argument("--depth", type=int, default=7)
        q.add_argument("--trees", type=int, default=100)
        if verb == "learn":
            q.add_argument("--model", choices=("DT", "RF"), default="DT")
        else:
            q.add_argument("--model", default="DT,RF")
            q.add_argument("--scheme", choices=("LoFo", "LoIo"), default="LoFo")
        q.set_defaults(func=func)

    b = sub.add_parser("bench-eval", help="evaluate one benchmark function")
    b.add_argument("--fid", type=int, required=True)
    b.add_argument("--iid", type=int, default=1)
    b.add_argument("--dim", type=int, default=2)
    b.add_argument("--x", help="comma separated point")
    b.add_argument("--probes", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_bench_eval)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
