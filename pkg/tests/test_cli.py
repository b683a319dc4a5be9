import csv
import math
from pathlib import Path

import numpy as np
import pytest
from synthetic import planted_table

from psoxplain.cli import int_list, main
from psoxplain.ela import FEATURE_NAMES, ElaVector
from psoxplain.tables import ELA_COLUMNS, RUN_COLUMNS, ela_row, runs_csv, write_csv

GOLDEN = dict(line.split(": ", 1) for line in (Path(__file__).parent / "golden" / "headers.txt").read_text().splitlines())


def header(path):
    return path.read_text().split("\n", 1)[0]


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_cli(*argv):
    return main([str(a) for a in argv])


SMALL = ("--topology", "Star,Ring", "--fids", "1,2", "--iids", "1", "--reps", "1", "--budget", "3",
         "--configs", "random:2")


def test_int_list():
    assert int_list("1-3,7") == (1, 2, 3, 7)
    assert int_list("2,2,1") == (2, 1)


def test_run_writes_canonical_csv(tmp_path):
    assert run_cli("run", *SMALL, "--out", tmp_path / "a") == 0
    out = tmp_path / "a" / "runs.csv"
    assert header(out) == GOLDEN["runs.csv"]
    recs = rows(out)
    assert len(recs) == 2 * 2 * 2
    assert [r["topology"] for r in recs] == ["Star"] * 4 + ["Ring"] * 4
    # resumed in two steps, same bytes
    assert run_cli("run", *SMALL, "--out", tmp_path / "b", "--max-runs", "3") == 0
    assert not (tmp_path / "b" / "runs.csv").exists()
    assert run_cli("run", *SMALL, "--out", tmp_path / "b") == 0
    assert (tmp_path / "b" / "runs.csv").read_bytes() == out.read_bytes()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("PSOXPLAIN_OUT", str(tmp_path / "env"))
    assert run_cli("run", "--topology", "Star", "--fids", "1", "--iids", "1", "--reps", "1",
                   "--budget", "2", "--configs", "random:1") == 0
    assert (tmp_path / "env" / "runs.csv").exists()


@pytest.mark.parametrize("argv", [
    ["fly"],
    ["run", "--fids", "one"],
    ["run", "--topology", "Mesh"],
    ["run", "--fids", "30", "--dims", "2"],
    ["run", "--dims", "3", "--fids", "1"],
    ["validate", "--scheme", "LoXo"],
    ["ela", "--n", "1"],
    ["bench-eval", "--fid", "0"],
    ["bench-eval", "--fid", "1", "--dim", "3", "--x", "1,2"],
])
def test_argument_errors_exit_1(tmp_path, argv, capsys):
    assert run_cli(*argv, *([] if argv[0] == "bench-eval" else ["--out", tmp_path])) == 1
    assert "error" in capsys.readouterr().err


def test_missing_input_exits_1(tmp_path):
    assert run_cli("stats", "--out", tmp_path) == 1


def test_schema_mismatch_names_column(tmp_path, capsys):
    bad = tmp_path / "runs.csv"
    bad.write_text("topology,config,fid\nStar,0,1\n")
    assert run_cli("stats", "--runs", bad, "--out", tmp_path) == 1
    assert "'config'" in capsys.readouterr().err


def test_corrupt_checkpoint_exits_2(tmp_path, capsys):
    args = ("run", *SMALL, "--out", tmp_path)
    assert run_cli(*args, "--max-runs", "2") == 0
    ck = tmp_path / "runs.checkpoint"
    ck.write_text(ck.read_text() + "garbage\n")
    assert run_cli(*args) == 2
    assert "integrity error" in capsys.readouterr().err


def test_stats_toy_fixture(tmp_path):
    runs = tmp_path / "runs.csv"
    runs.write_text(
        ",".join(RUN_COLUMNS) + "\n"
        "Star,0,1,1,2,1,0,0.3,0.2,0.9,50,1,1,1,0.9,0.0\n"
        "Star,0,1,1,2,2,0,0.3,0.2,0.9,50,1,1,1,0.9,0.0\n"
        "Star,1,1,1,2,1,0,0.5,0.2,0.9,50,1,1,1,0.1,0.0\n"
        "Star,1,1,1,2,2,0,0.5,0.2,0.9,50,1,1,1,0.1,0.0\n"
    )
    assert run_cli("stats", "--runs", runs, "--out", tmp_path) == 0
    out = tmp_path / "stats.csv"
    assert header(out) == GOLDEN["stats.csv"]
    (row,) = rows(out)
    assert float(row["sbm"]) == pytest.approx(0.9) and float(row["sbs"]) == 0.0
    assert float(row["all_mean"]) == pytest.approx(0.5) and float(row["all_std"]) == pytest.approx(0.4)
    assert row["sb_config"].startswith("c1=0.3") and row["ab_config"] == row["sb_config"]


def test_ela_small_sample_warns(tmp_path):
    args = ("ela", "--fids", "1,2", "--iids", "1,2", "--dims", "2", "--n", "10", "--seed", "4", "--out", tmp_path)
    assert run_cli(*args) == 0
    out = tmp_path / "ela.csv"
    assert header(out) == GOLDEN["ela.csv"]
    recs = rows(out)
    assert len(recs) == 4
    for r in recs:
        assert "dispersion" in r["warnings"]
        assert math.isnan(float(r["disp.diff_mean_10"]))
    first = out.read_bytes()
    assert run_cli(*args) == 0 and out.read_bytes() == first


def test_explain_constant_aocc(tmp_path):
    runs = tmp_path / "runs.csv"
    assert run_cli("run", "--topology", "Star", "--fids", "1", "--iids", "1,2", "--reps", "3", "--budget", "2",
                   "--configs", "random:6", "--out", tmp_path) == 0
    text = runs.read_text().splitlines()
    cols = text[0].split(",")
    i = cols.index("aocc")
    body = []
    for line in text[1:]:
        cells = line.split(",")
        cells[i] = "0.25"
        body.append(",".join(cells))
    runs.write_text("\n".join([text[0], *body]) + "\n")
    with pytest.warns(RuntimeWarning):
        assert run_cli("explain", "--out", tmp_path, "--trees", "5") == 0
    shap = tmp_path / "shap.csv"
    assert header(shap) == GOLDEN["shap.csv"]
    assert header(tmp_path / "surrogates.csv") == GOLDEN["surrogates.csv"]
    vals = [float(r["shap_value"]) for r in rows(shap)]
    assert len(vals) == 36 * 9 and all(v == 0 for v in vals)
    assert (tmp_path / "swarm_Star_f1.svg").read_text().startswith("<svg")
    assert (tmp_path / "surrogate_Star_f1_d2.json").exists()


def write_synthetic(tmp_path, drop=()):
    runs, ela = planted_table(reps=1)
    (tmp_path / "runs.csv").write_text(runs_csv(runs))
    vecs = [ElaVector(dict(zip(FEATURE_NAMES, v.tolist())), *k) for k, v in sorted(ela.items()) if k not in drop]
    write_csv(tmp_path / "ela.csv", ELA_COLUMNS, (ela_row(v) for v in vecs))


def test_validate_lofo_24_folds(tmp_path, capsys):
    write_synthetic(tmp_path)
    assert run_cli("validate", "--out", tmp_path, "--trees", "5") == 0
    out = tmp_path / "validation_Star_LoFo.csv"
    assert header(out) == GOLDEN["validation_Star_LoFo.csv"]
    recs = rows(out)
    assert sorted({int(r["fold"]) for r in recs}) == list(range(1, 25))
    assert all(float(r["aocc_loss"]) == 0 for r in recs if r["method"] == "SB")
    assert all(float(r["aocc_loss"]) >= -1e-12 for r in recs)
    assert "SB: mean loss 0" in capsys.readouterr().out


def test_learn_writes_rules_and_exclusions(tmp_path):
    write_synthetic(tmp_path, drop={(5, 1, 2)})
    assert run_cli("learn", "--out", tmp_path, "--target", "w,c1") == 0
    rules = (tmp_path / "rules_Star_w.txt").read_text(encoding="utf-8")
    assert "nbc.nn_nb.cor ≤ 8.53" in rules
    assert (tmp_path / "learner_Star_c1.json").exists()
    assert rows(tmp_path / "excluded_Star.csv") == [{"fid": "5", "iid": "1", "dim": "2"}]
    assert run_cli("learn", "--out", tmp_path, "--target", "speed") == 1


def test_bench_eval(capsys):
    assert run_cli("bench-eval", "--fid", "1", "--dim", "2", "--probes", "3") == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4 and lines[-1].startswith("# ")
    assert all(float(line.split(" -> ")[1]) >= 0 for line in lines[:3])


def test_bench_eval_at_optimum(capsys):
    from psoxplain.suite import make_instance

    x = make_instance(7, 2, 3).x_opt
    assert run_cli("bench-eval", "--fid", "7", "--iid", "2", "--dim", "3", "--x=" + ",".join(map(repr, x.tolist()))) == 0
    val = float(capsys.readouterr().out.splitlines()[0].split(" -> ")[1])
    assert np.isclose(val, 0.0, atol=1e-12)
