import csv
import io
import json
import math
import subprocess
import sys

import pytest

from tailforge.cli import ConfigError, build_config, main, parse_grid

POLY = ["--family", "polynomial", "--c", "1", "--beta", "2"]
GNEDIN = ["--family", "gnedin-sinh", "--lambda", "1"]


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_saddle_csv(capsys):
    code, out, _ = run_cli(capsys, "saddle", *POLY, "--n", "50", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    assert abs(float(rows[0]["residual"])) <= 1e-9 * 50
    assert rows[0]["method"] == "numeric"


def test_saddle_gnedin_json(capsys):
    code, out, _ = run_cli(capsys, "saddle", *GNEDIN, "--n", "50")
    assert code == 0
    d = json.loads(out)
    assert abs(d["s"] - (2 * math.log(50.5) + 2 * math.log(2.0))) <= 0.05


def test_csv_keeps_full_precision(capsys):
    code, out, _ = run_cli(capsys, "saddle", *GNEDIN, "--grid", "5,10", "--format", "csv")
    code2, out2, _ = run_cli(capsys, "saddle", *GNEDIN, "--grid", "5,10")
    assert code == code2 == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    js = json.loads(out2)
    assert [float(r["s"]) for r in rows] == [d["s"] for d in js]


@pytest.mark.parametrize("argv,code", [
    (["saddle", "--family", "nope", "--n", "5"], 3),
    (["saddle", "--n", "5"], 3),
    (["saddle", *POLY], 3),
    (["saddle", *POLY, "--n", "0"], 2),
    (["saddle", "--family", "list", "--n", "12"], 3),
    (["saddle", *POLY, "--n", "5", "--format", "xml"], 3),
    (["classify", *POLY, "--n", "5"], 3),
    (["estimate", *POLY, "--n", "5", "--regime", "Z"], 3),
    (["saddle", *POLY, "--n", "5", "--tol", "-1"], 3),
    (["compare", *POLY, "--grid", "1:8:0.5"], 3),
    (["terms", "--family", "geometric", "--c", "0.5", "--q", "0.5", "--n", "5"], 3),
    (["frobnicate", *POLY, "--n", "5"], 3),
])
def test_exit_codes(capsys, argv, code):
    got, _, err = run_cli(capsys, *argv)
    assert got == code
    assert err


def test_no_solution_beyond_list(capsys, tmp_path):
    f = tmp_path / "r.txt"
    f.write_text("0.5 0.5 0.5 0.5")
    code, _, err = run_cli(capsys, "saddle", "--family", "list", "--list-file", str(f), "--n", "4")
    assert code == 2 and "unsolvable" in err


@pytest.mark.parametrize("text", ["[0.5, 0.5, 0.5, 0.5, 0.5]", "0.5,0.5,0.5,0.5,0.5", "0.5\n0.5\n0.5 0.5 0.5"])
def test_list_file_formats(capsys, tmp_path, text):
    f = tmp_path / "r.txt"
    f.write_text(text)
    code, out, _ = run_cli(capsys, "saddle", "--family", "list", "--list-file", str(f), "--n", "3")
    assert code == 0
    assert json.loads(out)["s"] == pytest.approx(math.log(1.5), abs=1e-10)


def test_bad_list_file(capsys, tmp_path):
    f = tmp_path / "r.txt"
    f.write_text("a b c")
    assert run_cli(capsys, "saddle", "--family", "list", "--list-file", str(f), "--n", "2")[0] == 3
    assert run_cli(capsys, "saddle", "--family", "list", "--list-file", str(tmp_path / "missing"),
                   "--n", "2")[0] == 3


def test_alpha_file(capsys, tmp_path):
    f = tmp_path / "a.json"
    f.write_text(json.dumps({"family": "geometric", "c": 0.5, "q": 0.5}))
    code, out, _ = run_cli(capsys, "pmf", "--family", "records", "--alpha-file", str(f), "--n", "4")
    assert code == 0
    assert len(json.loads(out)["log_p"]) == 5


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"sequence": {"family": "polynomial", "c": 1.0, "beta": 2.0},
                               "command": "saddle", "n": 10, "seed": 5, "output": "csv"}))
    c = build_config(["saddle", "--config", str(cfg), "--n", "20"])
    assert c.n == 20 and c.seed == 5 and c.output == "csv"
    assert c.sequence["beta"] == 2.0
    c = build_config(["saddle", "--config", str(cfg), *GNEDIN])
    assert c.sequence == {"family": "gnedin-sinh", "lambda": 1.0}
    assert c.n == 10


def test_config_defaults():
    c = build_config(["mc", *GNEDIN, "--n", "6"])
    assert c.samples == 100_000 and c.seed == 0 and c.output == "json" and c.output_path is None


def test_config_unknown_fields(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"sequence": {"family": "polynomial", "c": 1.0, "beta": 2.0},
                               "command": "saddle", "n": 10, "colour": "red"}))
    with pytest.raises(ConfigError):
        build_config(["saddle", "--config", str(cfg)])
    assert run_cli(capsys, "saddle", "--config", str(cfg))[0] == 3
    cfg.write_text("[1, 2]")
    assert run_cli(capsys, "saddle", "--config", str(cfg))[0] == 3
    cfg.write_text("{not json")
    assert run_cli(capsys, "saddle", "--config", str(cfg))[0] == 3


@pytest.mark.parametrize("text,grid", [("10,20,40", [10, 20, 40]), ("10:320:2", [10, 20, 40, 80, 160, 320]),
                                       ("1:10:3", [1, 3, 9]), ([4, 5], [4, 5])])
def test_parse_grid(text, grid):
    assert parse_grid(text) == grid


@pytest.mark.parametrize("text", ["a,b", "1:2", "0:10:2"])
def test_parse_grid_rejects(text):
    with pytest.raises(ConfigError):
        parse_grid(text)


def test_classify_json(capsys):
    code, out, _ = run_cli(capsys, "classify", "--family", "stretched-exp", "--c", "1", "--beta", "1",
                           "--grid", "20,40,80,160")
    assert code == 0
    d = json.loads(out)
    assert d["label"] == "C" and abs(d["c_data"]["p"][0] - math.exp(-0.5)) <= 1e-2


def test_classify_undetermined(capsys, tmp_path):
    f = tmp_path / "r.json"
    f.write_text(json.dumps([0.5] * 30))
    code, out, err = run_cli(capsys, "classify", "--family", "list", "--list-file", str(f), "--grid", "16,20,25")
    assert code == 4 and "undetermined" in err
    assert json.loads(out)["label"] == "undetermined"


def test_compare_gnedin(capsys):
    code, out, _ = run_cli(capsys, "compare", *GNEDIN, "--grid", "10:320:2", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["n", "log_exact", "log_generic", "log_explicit", "gap_generic", "gap_explicit"]
    gaps = [abs(float(r["gap_generic"])) for r in rows]
    assert all(b < a for a, b in zip(gaps[:-1], gaps[1:]))
    gaps = [abs(float(r["gap_explicit"])) for r in rows]
    assert all(b < a for a, b in zip(gaps[:-1], gaps[1:]))
    assert gaps[-1] <= 0.02


def test_compare_stretched(capsys):
    code, out, _ = run_cli(capsys, "compare", "--family", "stretched-exp", "--c", "1", "--beta", "2",
                           "--grid", "6,8,10,12")
    assert code == 0
    d = json.loads(out)
    assert d["regime"] == "A"
    gaps = [abs(r["gap_generic"]) for r in d["rows"]]
    assert all(b < a for a, b in zip(gaps[:-1], gaps[1:]))
    assert all(abs(r["ratio_gap_generic"]) < 1 for r in d["rows"][1:])


def test_compare_binomial_smoke(capsys, tmp_path):
    f = tmp_path / "r.json"
    f.write_text(json.dumps([0.5] * 10))
    code, out, _ = run_cli(capsys, "compare", "--family", "list", "--list-file", str(f), "--grid", "6,7,8",
                           "--regime", "B")
    assert code == 0
    d = json.loads(out)
    assert d["rows"][0]["log_exact"] == pytest.approx(math.log(210 / 1024), abs=1e-12)
    # no explicit form for a finite list; strict JSON writes null
    assert d["rows"][0]["log_explicit"] is None


def test_compare_undetermined(capsys, tmp_path):
    f = tmp_path / "r.json"
    f.write_text(json.dumps([0.5] * 30))
    assert run_cli(capsys, "compare", "--family", "list", "--list-file", str(f), "--grid", "16,20,25")[0] == 4


def test_compare_oracle_failure(capsys, monkeypatch):
    from tailforge import cli
    from tailforge.errors import TruncationError

    def fail(*a, **k):
        raise TruncationError("no table")

    monkeypatch.setattr(cli, "exact_pmf", fail)
    code, _, err = run_cli(capsys, "compare", *POLY, "--grid", "5,10,20", "--regime", "B")
    assert code == 5 and "oracle" in err


def test_mc_deterministic(capsys):
    argv = ["mc", *GNEDIN, "--n", "6", "--samples", "20000", "--seed", "9"]
    a = run_cli(capsys, *argv)
    b = run_cli(capsys, *argv)
    assert a == b and a[0] == 0
    d = json.loads(a[1])
    assert d["seed"] == 9 and d["samples"] == 20000


def test_estimate_and_terms(capsys):
    code, out, _ = run_cli(capsys, "estimate", *GNEDIN, "--grid", "10,20", "--regime", "B")
    assert code == 0
    assert [d["n"] for d in json.loads(out)] == [10, 20]
    code, out, _ = run_cli(capsys, "terms", "--family", "stretched-exp", "--c", "1", "--beta", "2", "--n", "8",
                           "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert {r["term"] for r in rows} >= {"leading", "bernoulli_1", "constant_correction"}


def test_pmf_to_file(capsys, tmp_path):
    path = tmp_path / "pmf.csv"
    code, out, _ = run_cli(capsys, "pmf", *GNEDIN, "--n", "5", "--format", "csv", "--out", str(path))
    assert code == 0 and out == ""
    rows = list(csv.DictReader(path.open()))
    assert [int(r["n"]) for r in rows] == list(range(6))


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "tailforge.cli", "saddle", *POLY, "--n", "10"],
                         capture_output=True, text=True, timeout=60)
    assert res.returncode == 0
    assert json.loads(res.stdout)["n"] == 10
