import csv
import io
import json
import subprocess
import sys
import time
from pathlib import Path

import pytest

from decseq.cli import CSV_COLUMNS, ConfigError, load_experiment, main

ROOT = Path(__file__).resolve().parents[1]
SMOKE = ROOT / "configs" / "smoke.ini"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_info_sign_threshold(capsys):
    code, out, _ = run(capsys, "info", "--quantizer", "threshold:0")
    assert code == 0
    assert "I(f,g1) = 0.313741" in out and "I(f,g2) = 0.313741" in out
    assert "maximin min(I(f,g1), I(f,g2)) = 0.313741" in out


def test_info_invariant_model(capsys):
    code, out, _ = run(capsys, "info", "--quantizer", "abs:0.5", "--model", "invariant")
    assert code == 0
    assert "I(f~,g~) = 0.049004" in out and "I(g~,f~) = 0.045040" in out


def test_info_degenerate_channel(capsys):
    code, _, err = run(capsys, "info", "--quantizer", "threshold:9")
    assert code == 2 and "infinite information" in err


@pytest.mark.parametrize("spec", ["threshold", "interval:3:1", "abs:x"])
def test_info_malformed_quantizer(capsys, spec):
    code, _, err = run(capsys, "info", "--quantizer", spec)
    assert code == 1 and "malformed" in err


def test_info_wrong_family_for_invariant_model(capsys):
    code, _, _ = run(capsys, "info", "--quantizer", "threshold:0", "--model", "invariant")
    assert code == 1


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["info", "--bogus"])
    assert exc.value.code == 1


def test_optimize_g2(capsys):
    code, out, _ = run(capsys, "optimize", "--target", "g2")
    assert code == 0 and "I(X >= 0.7941)" in out and "objective: 0.318566" in out


def test_optimize_json(capsys):
    code, out, _ = run(capsys, "optimize", "--target", "invariant", "--priors", "1,0", "--json")
    rec = json.loads(out)
    assert code == 0 and rec["quantizer"]["kind"] == "abs"
    assert rec["lambda"] == pytest.approx(1.2824, abs=1e-3)


def test_optimize_bad_priors(capsys):
    code, _, _ = run(capsys, "optimize", "--target", "invariant", "--priors", "0.7,0.7")
    assert code == 1


def _simulate(tmp_path, name, *extra):
    csv_path, json_path = tmp_path / f"{name}.csv", tmp_path / f"{name}.json"
    code = main(["simulate", str(SMOKE), "--quiet", "--csv", str(csv_path), "--json", str(json_path), *extra])
    return code, csv_path, json_path


def _read_csv(path):
    lines = [l for l in path.read_text().splitlines(keepends=True) if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("".join(lines))))


def test_smoke_simulation_is_fast_and_complete(tmp_path):
    t0 = time.perf_counter()
    code, csv_path, json_path = _simulate(tmp_path, "a")
    assert time.perf_counter() - t0 < 1.0
    assert code == 0
    rows = _read_csv(csv_path)
    assert list(rows[0]) == CSV_COLUMNS
    assert len(rows) == 3 * 5
    assert {r["hypothesis"] for r in rows} == {"f", "g1", "g2", "mixture", "bayes_risk"}
    for r in rows:
        cols = CSV_COLUMNS[:-1] if r["hypothesis"] != "bayes_risk" else ["test", "c", "p_error", "stderr_p"]
        assert all(r[k] != "" for k in cols)
        if r["hypothesis"] != "bayes_risk":
            assert "e" in r["p_error"]


def test_reruns_are_byte_identical(tmp_path):
    _, c1, j1 = _simulate(tmp_path, "a")
    _, c2, j2 = _simulate(tmp_path, "b")
    assert c1.read_bytes() == c2.read_bytes()
    assert j1.read_bytes() == j2.read_bytes()


def test_json_mirrors_csv(tmp_path):
    _, c, j = _simulate(tmp_path, "a")
    rows = _read_csv(c)
    doc = json.loads(j.read_text())
    assert doc["columns"] == CSV_COLUMNS
    for r, m in zip(rows, doc["rows"], strict=True):
        for k in CSV_COLUMNS:
            if m[k] is None:
                assert r[k] == ""
            elif isinstance(m[k], (int, float)):
                assert float(r[k]) == m[k]
            else:
                assert r[k] == m[k]


def test_config_echo_reproduces_the_run(tmp_path):
    _, c, _ = _simulate(tmp_path, "a", "--seed", "99")
    echo = "\n".join(l[2:] for l in c.read_text().splitlines() if l.startswith("#"))
    cfg_path = tmp_path / "echo.ini"
    cfg_path.write_text(echo + f"\n\n[output]\ncsv = {tmp_path / 'b.csv'}\n")
    assert main(["simulate", str(cfg_path), "--quiet"]) == 0
    assert (tmp_path / "b.csv").read_bytes() == c.read_bytes()


def test_unwritable_output_is_runtime_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code = main(["simulate", str(SMOKE), "--quiet", "--csv", str(blocker / "out.csv")])
    assert code == 2


@pytest.mark.parametrize("edit", [
    ("seed = 7", "seed = 7\ncolour = red"),
    ("lambda = 0.5", "lambda = 0.5\nwidth = 2"),
    ("u = 0.1", "u = 0.7"),
    ("c = 0.01", "c = 1.5"),
    ("replications = 10", "replications = ten"),
    ("estimator = importance", "estimator = magic"),
    ("[output]", "[extra]\nx = 1\n\n[output]"),
    ("priors = 1/3, 1/3, 1/3", "priors = 0.5, 0.5, 0.5"),
    ("kind = invariant-sprt\nlambda = 0.5", "kind = sprt\nlambda = 0.5"),
])
def test_bad_configs_are_rejected(tmp_path, edit):
    text = SMOKE.read_text()
    assert edit[0] in text
    path = tmp_path / "bad.ini"
    path.write_text(text.replace(edit[0], edit[1], 1))
    with pytest.raises(ConfigError):
        load_experiment(path)
    assert main(["simulate", str(path), "--quiet"]) == 1


def test_missing_config_file(tmp_path):
    assert main(["simulate", str(tmp_path / "none.ini")]) == 1


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "decseq", "info", "--quantizer", "threshold:0.7941"],
                         capture_output=True, text=True, check=True)
    assert "I(g2,f) = 0.318566" in out.stdout
