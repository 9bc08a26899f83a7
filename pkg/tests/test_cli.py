from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import pytest

from f2quillen.cli import EXIT_BUDGET, EXIT_CONFIG, EXIT_FALSE, EXIT_OK, main
from f2quillen.reports import CONVENTION, SCHEMA_VERSION, clear_memos, dumps, render


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_list_groups(capsys):
    code, out, _ = run(capsys, "list-groups", "--json")
    doc = json.loads(out)
    ids = [g["id"] for g in doc["groups"]]
    assert code == EXIT_OK and "e" in ids and "Q8" in ids
    # one group each of order 1 and 2, then 2, 5 and 14 isomorphism classes
    assert sum(1 for g in doc["groups"] if g["order"] <= 16) == 1 + 1 + 2 + 5 + 14
    for order, count in [(8, 5), (16, 14), (4, 2), (2, 1)]:
        code, out, _ = run(capsys, "list-groups", "--order", str(order), "--json")
        assert len(json.loads(out)["groups"]) == count
    code, out, _ = run(capsys, "list-groups")
    assert "D8*C4" in out


def test_cohomology_cyclic_two(capsys, tmp_path):
    code, out, _ = run(capsys, "cohomology", "--group", "C2", "--max-degree", "6", "--json", "--cache-dir", str(tmp_path))
    doc = json.loads(out)
    assert code == EXIT_OK and doc["dims"] == [1] * 7 and doc["schema_version"] == SCHEMA_VERSION
    assert doc["generator_counts"] == {"1": 1}
    code, text, _ = run(capsys, "cohomology", "--group", "C2", "--max-degree", "6", "--cache-dir", str(tmp_path))
    assert text == render(doc)


def test_quillen_quaternion(capsys, tmp_path):
    code, out, _ = run(capsys, "quillen", "--group", "Q8", "--json", "--cache-dir", str(tmp_path))
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["kernel_dims"][:8] == [2, 2, 1, 0, 2, 2, 1, 0]
    assert doc["nilpotence"]["verdict"] and doc["nilpotence"]["k"] == 4 and doc["nilpotence"]["max_degree"] == 14
    assert doc["power"]["verdict"] and doc["power"]["degrees"] == [1, 2]
    assert doc["family"]["includes_trivial"] and doc["convention"] == CONVENTION
    assert "wall_time" not in doc


def test_false_verdict_exit_code(capsys, tmp_path):
    code, out, _ = run(capsys, "quillen", "--group", "Q8", "--nilpotence-k", "1", "--max-degree", "6",
                       "--power-degree", "8", "--json", "--cache-dir", str(tmp_path))
    assert code == EXIT_FALSE
    assert json.loads(out)["kernel_dims"][0] == 2
    code, _, _ = run(capsys, "table", "--group", "D8", "--nilpotence-k", "1", "--max-degree", "8",
                     "--power-degree", "16", "--cache-dir", str(tmp_path))
    assert code == EXIT_OK


@pytest.mark.parametrize(
    "argv",
    [
        ["quillen", "--group", "Q8", "--max-degree", "3"],
        ["quillen", "--group", "NOPE"],
        ["quillen", "--group", "Q8", "--power-e", "3", "--power-degree", "7"],
        ["quillen", "--group", "Q8", "--max-degree", "21"],
        ["higher-limits", "--group", "C2", "--coeff-degree", "0", "--s-max", "9"],
        ["table", "--group", "C2", "--jobs", "0"],
        ["cohomology", "--group", "C2", "--max-degree", "-1"],
        ["frobnicate"],
        ["quillen"],
    ],
)
def test_configuration_errors(capsys, tmp_path, argv):
    with_cache = argv + ["--cache-dir", str(tmp_path)] if argv[0] in ("quillen", "cohomology", "table", "higher-limits") else argv
    try:
        code = main(with_cache)
    except SystemExit as exc:
        code = exc.code
    assert code == EXIT_CONFIG


def test_higher_limits_command(capsys, tmp_path):
    code, out, _ = run(capsys, "higher-limits", "--group", "C2xC2", "--coeff-degree", "0", "--s-max", "4",
                       "--json", "--cache-dir", str(tmp_path))
    doc = json.loads(out)
    assert code == EXIT_OK and doc["dims"] == [1, 0, 0, 0, 0] and doc["dd_zero"]
    code, _, err = run(capsys, "higher-limits", "--group", "D8", "--coeff-degree", "1", "--s-max", "4",
                       "--budget", "1000", "--cache-dir", str(tmp_path))
    assert code == EXIT_BUDGET and "bits" in err


def test_table_csv_and_render_round_trip(capsys, tmp_path):
    args = ["table", "--group", "C2", "--group", "Q8", "--max-degree", "8", "--power-degree", "16", "--cache-dir", str(tmp_path)]
    code, out, _ = run(capsys, *args, "--json")
    doc = json.loads(out)
    assert code == EXIT_OK and [r["group"] for r in doc["groups"]] == ["C2", "Q8"]
    code, text, _ = run(capsys, *args)
    assert text == render(doc)
    saved = tmp_path / "table.json"
    saved.write_text(out)
    code, rendered, _ = run(capsys, "render", str(saved))
    assert code == EXIT_OK and rendered == text
    assert dumps(json.loads(out)) == out
    code, table, _ = run(capsys, *args, "--csv")
    rows = list(csv.DictReader(io.StringIO(table)))
    assert [r["group"] for r in rows] == ["C2", "Q8"]
    q8 = rows[1]
    assert q8["kernel_dims"].split(";")[:4] == ["2", "2", "1", "0"]


def test_environment_cache_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("F2QUILLEN_CACHE_DIR", str(tmp_path))
    clear_memos()
    code, _, _ = run(capsys, "cohomology", "--group", "D8", "--max-degree", "5", "--json")
    assert code == EXIT_OK
    assert any(p.suffix == ".json" for p in tmp_path.iterdir())


def test_cached_run_matches_cold_run(capsys, tmp_path):
    args = ["quillen", "--group", "D8", "--max-degree", "8", "--power-degree", "16", "--json", "--cache-dir", str(tmp_path)]
    clear_memos()
    _, cold, _ = run(capsys, *args)
    clear_memos()
    _, warm, _ = run(capsys, *args)
    assert cold == warm
    files = sorted(tmp_path.iterdir())
    assert files


def test_corrupt_cache_is_recomputed(capsys, caplog, tmp_path):
    args = ["cohomology", "--group", "C4", "--max-degree", "6", "--json", "--cache-dir", str(tmp_path)]
    clear_memos()
    _, first, _ = run(capsys, *args)
    for p in tmp_path.iterdir():
        p.write_text("{not json")
    clear_memos()
    code, second, _ = run(capsys, *args)
    assert code == EXIT_OK and second == first and "unreadable cache file" in caplog.text


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "f2quillen", "--help"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    for flag in ("list-groups", "cohomology", "quillen", "higher-limits", "table"):
        assert flag in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "f2quillen", "quillen", "--help"], capture_output=True, text=True, check=False)
    for flag in ("--group", "--max-degree", "--nilpotence-k", "--power-e", "--s-max", "--json", "--cache-dir"):
        assert flag in proc.stdout
