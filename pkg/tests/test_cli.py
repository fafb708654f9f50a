import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from pdcluster import cli, delta_preset
from pdcluster.instance import write_cost_csv

from cases import figure_instance

RHO_MEAN = delta_preset("kmeans")[1]


def _gen(tmp_path, name="pts.csv", **kw):
    path = tmp_path / name
    args = ["gen", "--out", str(path)]
    for key, value in kw.items():
        args += ["--" + key.replace("_", "-"), str(value)]
    assert cli.main(args) == 0
    return path


def test_gen_is_deterministic(tmp_path):
    a = _gen(tmp_path, "a.csv", seed=3, n=40)
    b = _gen(tmp_path, "b.csv", seed=3, n=40)
    assert a.read_bytes() == b.read_bytes()
    c = _gen(tmp_path, "c.csv", seed=4, n=40)
    assert a.read_bytes() != c.read_bytes()


def test_gen_single_point_cloud(tmp_path):
    path = _gen(tmp_path, seed=1, n=12, mixture_k=1, spread=0.0)
    rows = np.loadtxt(path, delimiter=",")
    assert rows.shape == (12, 2) and np.all(rows == rows[0])


def test_gen_shape(tmp_path):
    path = _gen(tmp_path, seed=7, n=100, dims=3)
    rows = np.loadtxt(path, delimiter=",")
    assert rows.shape == (100, 3)


def test_gen_to_stdout(capsys):
    assert cli.main(["gen", "--seed", "2", "--n", "5"]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 5


def test_solve_k_equals_n_is_degenerate(tmp_path):
    pts = _gen(tmp_path, seed=5, n=8)
    out = tmp_path / "out"
    assert cli.main(["solve", str(pts), "--k", "8", "--out-dir", str(out)]) == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["cost"] == 0.0 and cert["ratio"] is None
    assert any("DegenerateCertificate" in f for f in cert["flags"])


def test_solve_figure_cost_csv_trace(tmp_path):
    inst = figure_instance(1e-2)
    path = tmp_path / "figure.csv"
    write_cost_csv(path, inst.cost, inst.facility_cost)
    trace = tmp_path / "trace.jsonl"
    rc = cli.main(["solve", str(path), "--objective", "kmeans-general", "--k", "2",
                   "--eps-z", "0.01", "--trace", str(trace), "--out-dir", str(tmp_path)])
    assert rc == 0
    levels = {r["level"]: r for r in map(json.loads, trace.read_text().splitlines())
              if "lambda" in r}
    # price 2 is the figure's input level, one step later its output level
    assert levels[200]["lambda"] == pytest.approx(2.0)
    assert levels[200]["tight_ids"] == [0, 1, 2, 3]
    assert levels[201]["tight_ids"] == [0, 1, 2, 4]


def test_solve_and_certify_gen7(tmp_path):
    pts = _gen(tmp_path, seed=7, n=100)
    out = tmp_path / "out"
    assert cli.main(["solve", str(pts), "--k", "5", "--eps-z", "auto",
                     "--out-dir", str(out)]) == 0
    cert = json.loads((out / "certificate.json").read_text())
    sol = json.loads((out / "solution.json").read_text())
    assert cert["feasible"] is True
    assert 1.0 <= cert["ratio"] <= RHO_MEAN
    assert len(sol["opened"]) == 5
    rep = cli.cmd_certify(pts, out / "solution.json", "kmeans", 5, out / "dual.json")
    assert rep["cost_matches"]
    assert rep["certificate"]["feasible"]


def test_solve_bisection_mode(tmp_path):
    pts = _gen(tmp_path, seed=8, n=30)
    res = cli.cmd_solve(pts, "kmedian", 3, mode="bisection", out_dir=tmp_path)
    assert len(res["solution"]["opened"]) <= 3


def test_solve_normalized_maps_back(tmp_path):
    pts = _gen(tmp_path, seed=9, n=12)
    res = cli.cmd_solve(pts, "kmeans", 2, eps_z="auto", normalize=True, out_dir=tmp_path)
    rep = cli.cmd_certify(pts, tmp_path / "solution.json", "kmeans", 2)
    assert rep["cost_matches"] and res["certificate"]["cost"] == pytest.approx(rep["cost"])


def test_bench_empty_dir(tmp_path):
    out = tmp_path / "bench.csv"
    (tmp_path / "inst").mkdir()
    assert cli.main(["bench", str(tmp_path / "inst"), "--out", str(out)]) == 0
    assert out.read_text().strip() == ",".join(cli.BENCH_FIELDS)


def test_bench_one_instance(tmp_path):
    d = tmp_path / "inst"
    d.mkdir()
    _gen(d, "a.csv", seed=1, n=20)
    rows = cli.cmd_bench(d, [2], ["pd-sequence", "pd-bisection"])
    assert len(rows) == 2
    assert all(r["status"] == "ok" and r["certified_ratio"] >= 1 for r in rows)


def test_bench_ten_instances(tmp_path):
    d = tmp_path / "inst"
    d.mkdir()
    for s in range(10):
        _gen(d, f"g{s}.csv", seed=s, n=15)
    out = tmp_path / "bench.csv"
    cli.cmd_bench(d, [3], ["pd-sequence", "kmeanspp-lloyd"], out=out)
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 20
    pd = [r for r in rows if r["method"] == "pd-sequence"]
    assert all(r["status"] == "ok" for r in rows)
    assert all(1 <= float(r["certified_ratio"]) <= RHO_MEAN for r in pd)
    base = [r for r in rows if r["method"] == "kmeanspp-lloyd"]
    assert all(float(r["lower_bound"]) > 0 for r in base)


def test_exit_codes(tmp_path, monkeypatch, capsys):
    assert cli.main(["solve", str(tmp_path / "missing.csv"), "--k", "2"]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,oops\n")
    assert cli.main(["solve", str(bad), "--k", "1"]) == 1
    pts = _gen(tmp_path, seed=1, n=6)

    def boom(*a, **kw):
        raise cli.HorizonExhausted("no set of size 2", (3, 1))

    monkeypatch.setattr(cli, "solve_exact_k", boom)
    assert cli.main(["solve", str(pts), "--k", "2", "--out-dir", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_console_script(tmp_path):
    out = tmp_path / "p.csv"
    r = subprocess.run([sys.executable, "-m", "pdcluster", "gen", "--n", "4", "--out", str(out)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and len(out.read_text().splitlines()) == 4
