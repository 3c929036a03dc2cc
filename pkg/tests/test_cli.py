"""Command-line behavior: formats, exit codes, config merging, artifacts."""

from __future__ import annotations

import json
import subprocess
import sys
import time

import pytest

from macroent.cli import main
from macroent.states import make_psi1, state_to_text

_FAST = ["--restarts", "2", "--max-iters", "60", "--seed", "0"]


def _run(capsys, argv):
    rc = main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def _data_rows(csv_text):
    return [line for line in csv_text.splitlines()
            if line and not line.startswith("#") and not line[0].isalpha()]


def test_index_stdout_payload(capsys):
    rc, out, _ = _run(capsys, ["index", "--state", "cat", "--n", "4", *_FAST])
    assert rc == 0
    payload = json.loads(out)
    assert payload["config"]["command"] == "index"
    assert payload["config"]["restarts"] == 2
    assert payload["value_canonical"] == pytest.approx(32.0, rel=1e-9)
    assert payload["value_effective"] >= payload["value_optimized"]
    assert payload["eta_rank"] >= 1
    assert len(payload["observable_coefficients"]) == 4
    assert payload["diagnostics"]["note"] is None  # only psi1 carries a caveat


def test_index_eta_vectors_flag(capsys):
    rc, out, _ = _run(capsys, ["index", "--state", "cat", "--n", "3", *_FAST])
    assert json.loads(out)["eta_vectors"] is None

    rc, out, _ = _run(capsys, ["index", "--state", "cat", "--n", "3", *_FAST,
                               "--eta-vectors"])
    assert rc == 0
    payload = json.loads(out)
    vectors = payload["eta_vectors"]
    assert len(vectors) == payload["eta_rank"]
    assert len(vectors[0]) == 8
    assert all(len(entry) == 2 for entry in vectors[0])  # re/im pairs


def test_index_writes_file_and_figure(tmp_path, capsys):
    out_path = tmp_path / "cat4.json"
    rc, _, _ = _run(capsys, ["index", "--state", "cat", "--n", "4", *_FAST,
                             "--output", str(out_path)])
    assert rc == 0
    assert out_path.exists()
    assert out_path.with_suffix(".png").exists()
    payload = json.loads(out_path.read_text())
    assert payload["config"]["n"] == 4

    quiet = tmp_path / "quiet.json"
    rc, _, _ = _run(capsys, ["index", "--state", "cat", "--n", "4", *_FAST,
                             "--output", str(quiet), "--no-figure"])
    assert rc == 0
    assert not quiet.with_suffix(".png").exists()


def test_sweep_csv_with_summary_and_figure(tmp_path, capsys):
    out_path = tmp_path / "cat.csv"
    rc, _, _ = _run(capsys, ["sweep", "--state", "cat", "--mode", "canonical",
                             "--n", "4:8:2", "--output", str(out_path)])
    assert rc == 0
    text = out_path.read_text()
    lines = text.splitlines()
    assert lines[0] == "# sweep schema v1"
    assert lines[1].startswith("# config: ")
    embedded = json.loads(lines[1][len("# config: "):])
    assert embedded["state"] == "cat"
    assert embedded["sizes"] == [4, 6, 8]
    header = next(l for l in lines if l.startswith("n,"))
    assert header == "n,raw_value,effective_value,slope_running,seed,restarts,wall_time_s"
    assert len(_data_rows(text)) == 3

    summary = json.loads(out_path.with_suffix(".summary.json").read_text())
    assert summary["fit"]["slope"] == pytest.approx(2.0, abs=1e-3)
    assert out_path.with_suffix(".png").exists()

    # every numeric cell survives the text round trip bit for bit
    for row, point in zip(_data_rows(text), summary["points"]):
        cells = row.split(",")
        assert float(cells[1]) == point["raw_value"]
        assert float(cells[2]) == point["effective_value"]


def test_sweep_structured_format(tmp_path, capsys):
    out_path = tmp_path / "psi1.json"
    rc, _, _ = _run(capsys, ["sweep", "--state", "psi1", "--mode", "canonical",
                             "--n", "4,6,8", "--format", "structured",
                             "--output", str(out_path), "--no-figure"])
    assert rc == 0
    summary = json.loads(out_path.read_text())
    assert [p["n"] for p in summary["points"]] == [4, 6, 8]
    assert summary["fit"]["points_used"] == 3
    assert len(summary["secant_slopes"]) == 2
    assert "treat the fitted exponent with care" in summary["note"]


def test_sweep_records_skipped_sizes(tmp_path, capsys):
    out_path = tmp_path / "wide.csv"
    rc, _, _ = _run(capsys, ["sweep", "--state", "cat", "--mode", "canonical",
                             "--n", "4,6,8,24", "--output", str(out_path),
                             "--no-figure"])
    assert rc == 0
    assert "# skipped n=24:" in out_path.read_text()
    summary = json.loads(out_path.with_suffix(".summary.json").read_text())
    assert summary["points"][3]["error"] is not None
    assert summary["fit"]["points_used"] == 3


def test_sweep_repeat_is_identical_modulo_timing(tmp_path, capsys):
    argv = ["sweep", "--state", "psi1", "--n", "4,6,8", *_FAST, "--no-figure"]
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main([*argv, "--output", str(p)]) == 0
    capsys.readouterr()

    def strip_timing(path):
        out = []
        for line in path.read_text().splitlines():
            if line.startswith("#") or line.startswith("n,"):
                out.append(line)
            else:
                out.append(",".join(line.split(",")[:-1]))
        return "\n".join(out)

    assert strip_timing(paths[0]) == strip_timing(paths[1])


def test_mermin_csv(capsys):
    rc, out, _ = _run(capsys, ["mermin", "--state", "cat", "--n", "3,4"])
    assert rc == 0
    rows = _data_rows(out)
    assert out.splitlines()[2] == "n,raw_value,lhv_bound,ratio,even_sites"
    n3 = rows[0].split(",")
    assert float(n3[1]) == pytest.approx(4.0, rel=1e-12)
    assert float(n3[2]) == pytest.approx(2.0, rel=1e-12)
    assert float(n3[3]) == pytest.approx(2.0, rel=1e-12)
    assert n3[4] == "0"
    assert rows[1].split(",")[4] == "1"


def test_chsh_values_and_figure(tmp_path, capsys):
    rc, out, _ = _run(capsys, ["chsh", "--n", "2,4"])
    assert rc == 0
    rows = _data_rows(out)
    assert float(rows[0].split(",")[1]) == pytest.approx(2.8284271247461907, rel=1e-12)
    assert float(rows[1].split(",")[1]) == pytest.approx(2.0, rel=1e-12)

    out_path = tmp_path / "chsh.csv"
    rc, _, _ = _run(capsys, ["chsh", "--n", "2,4", "--output", str(out_path)])
    assert rc == 0
    assert out_path.with_suffix(".png").exists()


def test_conditions_payload(capsys):
    rc, out, _ = _run(capsys, ["conditions", "--state", "ex2", "--n", "6",
                               "--threshold-exponent", "0.7"])
    assert rc == 0
    payload = json.loads(out)
    assert payload["config"]["threshold_exponent"] == 0.7
    assert payload["orthonormal_ok"] and payload["offdiag_ok"]
    assert payload["n_components"] == 6
    assert payload["surviving_weight"] == pytest.approx(1.0, abs=1e-12)


def test_convert_psi1(capsys):
    rc, out, _ = _run(capsys, ["convert", "--state", "psi1", "--n", "8"])
    assert rc == 0
    payload = json.loads(out)
    assert payload["success_probability"] == pytest.approx(0.21875, rel=1e-12)
    assert payload["branch_weight_gap"] == 0.0
    assert payload["post_state"]["n_sites"] == 7


def test_convert_rejects_non_two_branch(capsys):
    rc, _, err = _run(capsys, ["convert", "--state", "ex2", "--n", "6"])
    assert rc == 2
    assert "two-branch" in err


def test_exit_code_unknown_state(capsys):
    rc, _, err = _run(capsys, ["index", "--state", "nope", *_FAST])
    assert rc == 2
    assert "unknown state" in err


def test_exit_code_capacity(capsys):
    rc, _, err = _run(capsys, ["index", "--state", "cat", "--n", "24", *_FAST])
    assert rc == 3
    assert "capacity exceeded" in err
    assert "22" in err


def test_exit_code_unwritable_output(tmp_path, capsys):
    missing = tmp_path / "no-such-dir" / "x.csv"
    rc, _, err = _run(capsys, ["sweep", "--state", "cat", "--mode", "canonical",
                               "--n", "4,6,8", "--output", str(missing)])
    assert rc == 4
    assert "not writable" in err


def test_unwritable_output_fails_before_compute(tmp_path, capsys):
    # default sweep settings would take minutes; the doomed path must be
    # rejected up front, not after the run
    missing = tmp_path / "gone" / "x.csv"
    start = time.monotonic()
    rc, _, err = _run(capsys, ["sweep", "--output", str(missing)])
    assert rc == 4
    assert "not writable" in err
    assert time.monotonic() - start < 5.0


def test_exit_code_no_command(capsys):
    rc, out, _ = _run(capsys, [])
    assert rc == 2
    assert "usage" in out.lower()


def test_config_file_merge_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"state": "cat", "n": 4, "restarts": 2,
                               "max_iters": 60, "seed": 0}))
    rc, out, _ = _run(capsys, ["index", "--config", str(cfg)])
    assert rc == 0
    assert json.loads(out)["config"]["restarts"] == 2

    rc, out, _ = _run(capsys, ["index", "--config", str(cfg), "--restarts", "3"])
    assert rc == 0
    assert json.loads(out)["config"]["restarts"] == 3  # flags beat the file


def test_config_file_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    rc, _, err = _run(capsys, ["index", "--config", str(cfg)])
    assert rc == 2
    assert "bogus" in err


def test_state_file_index(tmp_path, capsys):
    path = tmp_path / "psi1_3.txt"
    path.write_text(state_to_text(make_psi1(3)))
    rc, out, _ = _run(capsys, ["index", "--state-file", str(path), *_FAST])
    assert rc == 0
    payload = json.loads(out)
    assert payload["config"]["state"] == "psi1_3.txt"
    assert payload["value_canonical"] == pytest.approx(16.970562748477136, rel=1e-9)

    rc, _, err = _run(capsys, ["index", "--state-file", str(path), "--n", "3",
                               *_FAST])
    assert rc == 2
    assert "drop --n" in err


def test_verify_command(tmp_path, capsys):
    out_path = tmp_path / "verify.json"
    rc, out, _ = _run(capsys, ["verify", "--output", str(out_path)])
    assert rc == 0
    assert out.count("[PASS]") == 9
    assert "all 9 reference checks passed" in out
    payload = json.loads(out_path.read_text())
    assert payload["passed"] is True
    assert len(payload["checks"]) == 9


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "macroent", "mermin", "--state", "cat", "--n", "3"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "n,raw_value" in proc.stdout
