import json

import pytest

from exclusive_qec.cli import CSV_COLUMNS, config_hash, main, read_csv_rows


def run(argv, capsys):
    rc = main(argv)
    out, err = capsys.readouterr()
    return rc, out, err


def test_simulate_writes_csv(tmp_path, capsys):
    path = tmp_path / "sim.csv"
    argv = ["simulate", "--decoder", "mwpm", "--setting", "cc", "--d", "3", "--p", "0.1",
            "--c", "0.5", "--shots", "20000", "--seed", "7", "--out", str(path)]
    rc, _, err = run(argv, capsys)
    assert rc == 0 and "config_hash=" in err
    text = path.read_text()
    assert text.startswith("# exclusive-qec ")
    assert "# config_hash: " in text and "# config: " in text
    rows = read_csv_rows(str(path))
    assert len(rows) == 1
    assert list(rows[0]) == list(CSV_COLUMNS)
    r = rows[0]
    assert int(r["accepts"]) + int(r["aborts"]) == 20000
    assert float(r["g"]) == pytest.approx(int(r["aborts"]) / 20000)
    assert r["c"] == "1/2"


def test_simulate_is_deterministic_across_workers(tmp_path, capsys):
    base = ["simulate", "--d", "3,5", "--p", "0.05,0.1", "--c", "0.4", "--shots", "5000", "--seed", "3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(base + ["--workers", "1", "--out", str(a)], capsys)[0] == 0
    assert run(base + ["--workers", "2", "--out", str(b)], capsys)[0] == 0
    body = lambda p: [ln for ln in p.read_text().splitlines() if not ln.startswith("#")]
    assert body(a) == body(b)
    assert len(body(a)) == 5


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# a comment\nd = 3\np = 0.2\nshots = 1000\nc = 1\n")
    out = tmp_path / "o.csv"
    assert run(["simulate", "--config", str(cfg), "--p", "0.05", "--out", str(out)], capsys)[0] == 0
    r = read_csv_rows(str(out))[0]
    assert float(r["p"]) == 0.05 and int(r["shots"]) == 1000 and r["c"] == "1"


def test_malformed_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("this line has no equals sign\n")
    rc, _, err = run(["simulate", "--config", str(cfg)], capsys)
    assert rc == 2 and json.loads(err.strip().splitlines()[-1])["error"] == "UsageError"
    cfg.write_text("bogus = 1\n")
    assert run(["simulate", "--config", str(cfg)], capsys)[0] == 2


def test_budget_refusal(capsys):
    rc, _, err = run(["simulate", "--d", "3", "--p", "0.1", "--shots", "1000", "--max-decodes", "10"], capsys)
    assert rc != 0
    assert "decodes" in err


def test_library_error_is_json(capsys):
    rc, _, err = run(["simulate", "--setting", "phenom", "--d", "4", "--c", "0.5", "--shots", "10"], capsys)
    assert rc == 1
    assert json.loads(err.strip().splitlines()[-1])["error"] == "InvalidParameter"


def test_oracle(capsys):
    rc, out, _ = run(["oracle", "--d", "3", "--c", "0", "--p", "0.01"], capsys)
    assert rc == 0
    obj = json.loads(out)
    assert obj["table"]["d"] == 3 and obj["config_hash"] and obj["version"]
    assert obj["evaluations"][0]["p"] == 0.01


def test_oracle_ft(capsys):
    rc, out, _ = run(["oracle", "--ft", "--d", "2"], capsys)
    assert rc == 0
    assert json.loads(out)["by_weight"]["2"]["II10"] == 2


def test_overhead(capsys):
    rc, out, _ = run(["overhead", "magic-state"], capsys)
    assert rc == 0
    obj = json.loads(out)
    assert obj["qubit_ratio"] == 0.25
    assert obj["spacetime_ratio"] == pytest.approx(0.4)
    rc, out, _ = run(["overhead", "depth-boost", "--R", "2.718281828459045", "--eps", "0.01", "--q0", "10"], capsys)
    assert json.loads(out)["q"] == pytest.approx(100.0)
    rc, _, err = run(["overhead", "repetitions", "--p", "0.01"], capsys)
    assert rc == 2 and "--d" in err


def test_split_and_fit(tmp_path, capsys):
    out = tmp_path / "split.csv"
    argv = ["split", "--d", "3", "--c", "1", "--predicate", "fail", "--ps", "0.3,0.25,0.2",
            "--anchor", "0.3", "--chains", "8", "--samples", "50", "--out", str(out)]
    assert run(argv, capsys)[0] == 0
    rows = read_csv_rows(str(out))
    assert {"j", "p_j", "R_j", "R_j_se", "ess", "P"} <= set(rows[0])
    sim = tmp_path / "sim.csv"
    argv = ["simulate", "--d", "3,5,7", "--p", "0.05,0.1,0.2", "--c", "0.5", "--shots", "4000", "--out", str(sim)]
    assert run(argv, capsys)[0] == 0
    rc, text, _ = run(["fit", "--input", str(sim), "--model", "decay", "--quantity", "h", "--abscissa", "n"], capsys)
    assert rc == 0
    assert json.loads(text)["model"] == "decay"


def test_config_hash_stable():
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
