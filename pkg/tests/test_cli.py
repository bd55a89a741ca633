import io
import json
import subprocess
import sys

import pytest

from claytonpair.cli import format_p, main


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_fit_example2_text():
    code, text = run("fit", "example2")
    assert code == 0
    assert "pi = 0.2760" in text and "pi = 0.3034" in text
    assert "theta = 3.051" in text
    assert "rho = 0.466" in text and "rho = 0.491" in text


def test_fit_example1_null_json():
    code, text = run("fit", "example1.csv", "--hypothesis", "null", "--json")
    assert code == 0
    rep = json.loads(text)
    null = rep["fits"]["null"]
    assert null["pis"][0] == pytest.approx(0.044, abs=5e-4)
    assert null["theta"] == pytest.approx(9.740, abs=5e-3)
    assert null["rho"][0] == pytest.approx(0.301, abs=5e-4)
    assert "alternative" not in rep["fits"]


def test_test_example1_all():
    code, text = run("test", "example1", "--method", "all", "--json")
    rep = json.loads(text)
    tests = rep["tests"]
    assert tests["LR"]["statistic"] == pytest.approx(136.589, abs=0.2)
    assert tests["Score"]["statistic"] == pytest.approx(178.749, abs=0.5)
    assert tests["Wald"]["statistic"] == pytest.approx(174.248, abs=0.5)
    assert all(t["df"] == 6 and t["p_value"] < 1e-4 and t["reject"] for t in tests.values())


def test_test_example2_lr_text():
    code, text = run("test", "example2", "--method", "lr")
    assert code == 0
    assert "T = 0.034" in text and "df = 1" in text and "p = 0.85" in text
    assert "Score" not in text
    assert "do not reject" in text


def test_report_file_matches_stdout(tmp_path):
    path = tmp_path / "rep.json"
    code, text = run("test", "example2", "--json", "-o", str(path))
    assert json.loads(path.read_text()) == json.loads(text)


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("group,m0,m1,m2\nA,1,2\n")
    code, _ = run("fit", str(bad))
    assert code == 1
    assert "bad.csv:2: row 'A,1,2'" in capsys.readouterr().err


def test_missing_file_exit_code():
    assert run("fit", "no_such_table.csv")[0] == 1


def test_unknown_method_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        run("test", "example1", "--method", "bogus")
    assert exc.value.code == 2


def test_simulate_tie_stream():
    code, text = run("simulate", "tie", "--g", "3", "--m", "30", "--pi", "0.5", "--theta", "2",
                     "--reps", "200", "--seed", "42", "--threads", "1")
    lines = [json.loads(line) for line in text.splitlines()]
    assert code == 0 and [r["record"] for r in lines] == ["scenario", "aggregate"]
    assert lines[0]["spec"]["pis"] == [0.5, 0.5, 0.5]
    assert lines[1]["percent"]["LR"] == pytest.approx(100 * lines[0]["rejection_rate"]["LR"], abs=1e-9)


def test_simulate_power_config(tmp_path):
    cfg = tmp_path / "case_d_g6.json"
    cfg.write_text(json.dumps({"case": "D", "theta": 2, "m": 55, "reps": 100, "seed": 3}))
    code, text = run("simulate", "power", "--config", str(cfg), "--threads", "1")
    assert code == 0
    assert json.loads(text.splitlines()[0])["spec"]["g"] == 6


def test_simulate_invalid_flags_usage():
    with pytest.raises(SystemExit) as exc:
        run("simulate", "tie", "--g", "3", "--m", "30", "--pi", "0.5", "--theta", "2", "--reps", "0")
    assert exc.value.code == 2


def test_simulate_bad_config_is_error(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"g": 3, "m": 30, "pis": [0.1, 0.2], "theta": 1}))
    assert run("simulate", "power", "--config", str(cfg))[0] == 1
    assert "c.json.pis:" in capsys.readouterr().err


def test_simulate_tie_with_unequal_rates_is_error():
    assert run("simulate", "tie", "--g", "2", "--m", "30", "--pi", "0.3,0.5", "--theta", "1", "--reps", "5")[0] == 1


def test_sweep_output_is_reproducible():
    args = ("simulate", "sweep", "--g", "3", "--m", "30", "--scenarios", "10", "--reps", "100", "--seed", "1")
    a = run(*args, "--threads", "1")[1]
    b = run(*args, "--threads", "2")[1]
    assert a == b
    lines = a.splitlines()
    assert len(lines) == 11
    assert json.loads(lines[-1])["scenarios"] == 10


def test_tables_shape():
    code, text = run("tables", "tie3", "--reps", "1000", "--seed", "7", "--threads", "1", "-q")
    rows = text.splitlines()
    assert code == 0 and len(rows) == 13
    header = rows[0].split(",")
    assert header[:3] == ["theta", "pi", "rho"]
    assert {"lr_30", "score_55", "wald_100"} <= set(header)
    assert rows[5].split(",")[:3] == ["2", "0.4", "0.452"]


def test_format_p():
    assert format_p(1e-30) == "< 1e-16"
    assert format_p(0.8546) == "0.8546"
    assert format_p(2e-6) == "2.000e-06"


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "claytonpair.cli", "test", "example2", "--method", "nope"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
