"""Command-line behaviour: outputs, exit codes, manifests, replay."""

import csv
import io
import json

import pytest

from bcfldp import cli


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_expand(capsys):
    code, out, err = run(["expand", "--x", "1/2", "--n", "4"], capsys)
    assert code == 0
    rows = csv_rows(out)
    assert [r["digit"] for r in rows] == ["3", "2", "2", "2"]
    assert rows[1]["arithmetic_mean"] == "5/2"
    assert json.loads(err)["command"] == "expand"


def test_thaler(capsys):
    code, out, _ = run(["thaler", "--n", "10"], capsys)
    assert code == 0
    last = csv_rows(out)[-1]
    assert "1/12" in last.values()


def test_cylinder(capsys):
    code, out, _ = run(["cylinder", "--word", "2,2,2,6", "--format", "json"], capsys)
    assert code == 0
    text = json.dumps(json.loads(out)["rows"])
    assert "4/17" in text and "5/21" in text


def test_deviation_json(capsys):
    code, out, _ = run(["deviation", "--J", "3,4", "--n", "1", "--B", "4", "--format", "json"],
                       capsys)
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"manifest", "rows"}
    row = doc["rows"][0]
    assert row["lower"] == "1/4" and row["tail_unresolved"] == "0/1"
    assert doc["manifest"]["config"]["B"] == 4


@pytest.mark.parametrize("argv", [
    ["expand", "--x", "3/2", "--n", "2"],
    ["deviation", "--J", "4,3", "--n", "2"],
    ["deviation", "--J", "3,4", "--n", "0"],
    ["expand", "--x", "1/2"],
    ["nosuch"],
    ["spectrum", "--B", "5", "--depth", "3", "--alpha-grid", "-1,2"],
])
def test_config_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert err


def test_budget_error_exit_3(capsys):
    code, _, err = run(["deviation", "--J", "3,4", "--n", "12", "--B", "40",
                        "--max-nodes", "50"], capsys)
    assert code == 3
    assert "budget" in err


def test_output_file_manifest_and_replay(tmp_path, capsys):
    out = tmp_path / "dev.csv"
    code, _, _ = run(["deviation", "--J", "5/2,3", "--n", "2:4", "--B", "10", "-o", str(out)],
                     capsys)
    assert code == 0
    manifest = tmp_path / "dev.csv.manifest.json"
    assert manifest.exists()
    replayed = tmp_path / "again.csv"
    code, _, _ = run(["replay", str(manifest), "-o", str(replayed)], capsys)
    assert code == 0
    assert replayed.read_bytes() == out.read_bytes()


def test_mc_runs_are_deterministic(tmp_path, capsys):
    argv = ["deviation", "--method", "mc", "--J", "3,4", "--n", "3", "--samples", "50000",
            "--seed", "5"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv + ["--threads", "3"], capsys)
    assert a == b


def test_output_dir_override(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BCFLDP_OUTPUT_DIR", str(tmp_path))
    code, out, _ = run(["thaler", "--n", "5"], capsys)
    assert code == 0 and out == ""
    assert (tmp_path / "thaler.csv").exists()
    assert (tmp_path / "thaler.csv.manifest.json").exists()


def test_bn_bound_summary(tmp_path, capsys):
    out = tmp_path / "bn.json"
    code, _, _ = run(["bn-bound", "--J", "3,4", "--n", "3:30", "--format", "json", "-o", str(out)],
                     capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["rows"][0]["measure"] == "1/357"
    assert "summary" in doc["manifest"]
