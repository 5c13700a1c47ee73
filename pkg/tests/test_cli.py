import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from softspring.cli import main
from softspring.elasticity import preset_skin, save_card
from softspring.experiment import read_results_csv

FAST = ["--cells", "2", "--iterations", "3000"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_tension_writes_outputs(tmp_path):
    out = tmp_path / "run"
    assert main(["tension", "--preset", "skin", "--nu", "0.45", *FAST, "--out", str(out)]) == 0
    records = read_results_csv(out / "results.csv")
    eps = [r.eps_long for r in records]
    assert all(b >= a for a, b in zip(eps, eps[1:])) and eps[-1] >= 1.0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["reached_stop_strain"] and "max_stress_error" in summary
    config = json.loads((out / "config.json").read_text())
    assert config["solver"]["iterations"] == 3000
    assert config["cells"] == [2, 2]
    assert config["material"]["nu"] == 0.45


def test_tension_is_byte_deterministic(tmp_path):
    blobs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["tension", "--preset", "adipose", "--nu", "0.1", *FAST, "--out", str(out)]) in (0, 2)
        blobs.append((out / "results.csv").read_bytes())
    assert blobs[0] == blobs[1]


def test_tension_adipose_summary_has_error_fields(tmp_path):
    out = tmp_path / "fat"
    main(["tension", "--preset", "adipose", *FAST, "--out", str(out)])
    summary = json.loads((out / "summary.json").read_text())
    assert "max_stress_error" in summary and "median_stress_error" in summary


def test_card_precedence(tmp_path):
    card = tmp_path / "m.json"
    save_card(preset_skin(0.2), card)
    out = tmp_path / "c"
    assert main(["tension", "--card", str(card), "--nu", "0.35", "--cells", "1",
                 "--iterations", "2000", "--out", str(out)]) == 0
    config = json.loads((out / "config.json").read_text())
    assert config["material"]["nu"] == 0.35
    out2 = tmp_path / "d"
    assert main(["tension", "--card", str(card), "--cells", "1", "--iterations", "2000",
                 "--out", str(out2)]) == 0
    assert json.loads((out2 / "config.json").read_text())["material"]["nu"] == 0.2


def test_missing_card(tmp_path):
    out = tmp_path / "none"
    assert main(["tension", "--card", str(tmp_path / "missing.json"), "--out", str(out)]) == 3
    assert not (out / "results.csv").exists()


def test_bad_card(tmp_path, capsys):
    card = tmp_path / "bad.json"
    card.write_text('{"nu": 0.3, "pieces": [{"lo": -1, "hi": 1, "form": "linear"}]}')
    assert main(["tension", "--card", str(card), "--out", str(tmp_path / "o")]) == 1
    assert "coeffs" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert main(["sweep", "--nu", "", "--out", str(tmp_path)]) == 1
    assert main(["oracle", "--stress", "0.1,,0.2"]) == 1
    assert main(["oracle", "--stress", "abc"]) == 1
    assert main(["tension", "--nu", "1.5", "--out", str(tmp_path)]) == 1
    assert main(["tension", "--cells", "0", "--out", str(tmp_path)]) == 1
    assert main(["frobnicate"]) == 1
    assert main([]) == 1


def test_divergence_exit_code(tmp_path):
    out = tmp_path / "div"
    assert main(["tension", "--preset", "skin", "--cells", "2", "--iterations", "500",
                 "--dt", "50", "--out", str(out)]) == 2
    assert (out / "results.csv").exists()
    assert json.loads((out / "summary.json").read_text())["failure"]


def test_sweep_layout(tmp_path, capsys):
    out = tmp_path / "sw"
    code = main(["sweep", "--preset", "skin", "--nu", "0.1,0.3", "--nu", "0.45", "--nu", "0.3",
                 *FAST, "--out", str(out)])
    assert code == 0
    assert "duplicate" in capsys.readouterr().err
    assert sorted(p.name for p in out.glob("skin_*.csv")) == \
        ["skin_nu0.1.csv", "skin_nu0.3.csv", "skin_nu0.45.csv"]
    rows = read_csv(out / "chart_data.csv")
    stress_series = {r["series"] for r in rows if r["chart"] == "stress"}
    assert len(stress_series) == 4 and "skin Ef" in stress_series
    assert {r["series"] for r in rows if r["chart"] == "poisson"} == \
        {"skin nu=0.1", "skin nu=0.3", "skin nu=0.45"}
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary) == {"skin_nu0.1", "skin_nu0.3", "skin_nu0.45"}


def test_sweep_parallel_matches_serial(tmp_path):
    args = ["sweep", "--preset", "skin", "--nu", "0.2,0.4", "--cells", "1", "--iterations", "2000"]
    assert main([*args, "--out", str(tmp_path / "s1")]) == 0
    assert main([*args, "--jobs", "2", "--out", str(tmp_path / "s2")]) == 0
    for name in ("skin_nu0.2.csv", "skin_nu0.4.csv", "chart_data.csv"):
        assert (tmp_path / "s1" / name).read_bytes() == (tmp_path / "s2" / name).read_bytes()


def test_sweep_isolates_failures(tmp_path):
    out = tmp_path / "iso"
    code = main(["sweep", "--preset", "skin", "--nu", "0.1,0.3", "--cells", "1",
                 "--iterations", "200", "--dt", "50", "--out", str(out)])
    assert code == 2
    summary = json.loads((out / "summary.json").read_text())
    assert len(summary) == 2 and all(v["failure"] for v in summary.values())


def test_eval_ef(tmp_path):
    assert main(["eval-ef", "--preset", "skin", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "ef_table.csv")
    assert len(rows) == 401
    table = {round(float(r["strain"]), 10): float(r["stress"]) for r in rows}
    assert table[0.0] == 0.0
    a, b, c = table[0.1], table[0.2], table[0.3]
    assert b - a == pytest.approx(c - b, rel=1e-12)
    assert main(["eval-ef", "--preset", "adipose", "--resolution", "11", "--out", str(tmp_path)]) == 0
    assert len(read_csv(tmp_path / "ef_table.csv")) == 11


def test_eval_ef_knots(tmp_path, capsys):
    knots = tmp_path / "k.csv"
    knots.write_text("strain,stress\n0.4,0.4\n0.7,1.3\n1.0,2.8\n")
    assert main(["eval-ef", "--knots", str(knots), "--joins", "cubic,linear", "--resolution", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "strain,stress" and lines[-1] == "1.0,2.8"


def test_oracle_table(tmp_path):
    assert main(["oracle", "--preset", "skin", "--stress", "0,0.3,1.5", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "oracle.csv")
    assert all(float(rows[0][k]) == 0.0 for k in rows[0] if k != "error")
    for r in rows:
        assert r["error"] == ""
        assert abs(float(r["delta_long"])) < 1e-5 and abs(float(r["delta_trans"])) < 1e-5


def test_oracle_bracket_failure_reported_per_row(tmp_path):
    code = main(["oracle", "--preset", "adipose", "--stress", "0.05,10", "--out", str(tmp_path)])
    assert code == 2
    rows = read_csv(tmp_path / "oracle.csv")
    assert rows[0]["error"] == "" and rows[1]["error"] != ""


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "softspring", "eval-ef", "--resolution", "3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    vals = np.array([[float(x) for x in line.split(",")] for line in proc.stdout.splitlines()[1:]])
    assert vals.shape == (3, 2) and vals[1, 1] == 0.0
