import csv
import json
import xml.etree.ElementTree as ET

import pytest

from semcover.cli import CSV_COLUMNS, main, parse_int_list

SVG = "{http://www.w3.org/2000/svg}"


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _run(tmp_path, name, *extra):
    out = tmp_path / name
    code = main(["run", "--out", str(out), "--max-steps", "300", *extra])
    assert code == 0
    return out


def test_run_schema_and_artifacts(tmp_path, capsys):
    out = _run(tmp_path, "a", "--scenario", "grid_world", "--robots", "2", "--controller", "semantic-fuzzy",
               "--seed", "1")
    printed = capsys.readouterr().out.splitlines()
    assert printed[0] == ",".join(CSV_COLUMNS)
    rows = _rows(out / "metrics.csv")
    assert len(rows) == 1 and tuple(rows[0]) == CSV_COLUMNS
    r = rows[0]
    assert (r["scenario"], r["controller"], r["robots"], r["seed"]) == ("grid_world", "semantic-fuzzy", "2", "1")
    m = json.loads((out / "manifest.json").read_text())
    assert m["status"] == "complete" and m["seed"] == 1 and m["fallbacks"] == 0
    assert "heuristic table" in m["version"]
    assert (out / "events.log").read_text().startswith('{"controller"')


def test_run_deterministic(tmp_path):
    a = _run(tmp_path, "a", "--controller", "bb", "--seed", "1", "--robots", "1")
    b = _run(tmp_path, "b", "--controller", "bb", "--seed", "1", "--robots", "1")
    assert _rows(a / "metrics.csv") == _rows(b / "metrics.csv")
    assert (a / "events.log").read_bytes() == (b / "events.log").read_bytes()


def test_unreachable_endpoint_falls_back(tmp_path, monkeypatch):
    monkeypatch.setenv("SEMCOVER_API_KEY", "secret-value-xyz")
    out = _run(tmp_path, "r", "--seed", "2", "--robots", "1", "--llm-endpoint", "http://127.0.0.1:9/labels")
    m = json.loads((out / "manifest.json").read_text())
    assert m["fallbacks"] > 0 and m["config"]["backend"] == "remote"
    # the key never reaches any artifact
    for f in out.iterdir():
        assert "secret-value-xyz" not in f.read_text()


def test_manifest_replay_roundtrip(tmp_path):
    a = _run(tmp_path, "a", "--scenario", "e_shape", "--seed", "3", "--robots", "2")
    b = tmp_path / "b"
    assert main(["run", "--manifest", str(a / "manifest.json"), "--out", str(b)]) == 0
    assert _rows(a / "metrics.csv") == _rows(b / "metrics.csv")
    assert (a / "events.log").read_bytes() == (b / "events.log").read_bytes()


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 9, "n_robots": 1, "max_steps": 50}))
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--seed", "4", "--out", str(out)]) == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["config"]["seed"] == 4 and m["config"]["max_steps"] == 50 and m["config"]["n_robots"] == 1
    assert main(["config"]) == 0
    assert json.loads(capsys.readouterr().out.split("\n", 2)[-1] or "{}") is not None


def test_svg_has_one_polyline_per_robot(tmp_path):
    out = _run(tmp_path, "s", "--scenario", "disconnected_paths", "--robots", "3", "--seed", "1")
    root = ET.parse(out / "trajectories.svg").getroot()
    lines = root.findall(f".//{SVG}polyline[@class='trajectory']")
    assert sorted(int(p.get("data-robot")) for p in lines) == [0, 1, 2]
    assert len({p.get("stroke") for p in lines}) == 3
    assert len(root.findall(f".//{SVG}polygon[@class='obstacle']")) == 7
    assert len(root.findall(f".//{SVG}circle[@class='ooi']")) > 10


def test_bad_inputs_exit_2(tmp_path, capsys):
    assert main(["run", "--controller", "greedy", "--out", str(tmp_path / "x")]) == 2
    assert "semcover: error:" in capsys.readouterr().err
    assert main(["run", "--scenario", "maze", "--out", str(tmp_path / "y")]) == 2
    assert main(["run", "--manifest", str(tmp_path / "missing.json"), "--out", str(tmp_path / "z")]) == 2


def test_parse_int_list():
    assert parse_int_list("1..5") == [1, 2, 3, 4, 5]
    assert parse_int_list("1,3..4,9") == [1, 3, 4, 9]


def test_battery_sixty_rows(tmp_path, capsys):
    out = tmp_path / "bat"
    assert main(["battery", "--seeds", "1..5", "--max-steps", "40", "--jobs", "1", "--out", str(out)]) == 0
    rows = _rows(out / "metrics.csv")
    assert len(rows) == 3 * 4 * 5 == 60
    summary = capsys.readouterr().out
    assert "coverage_ratio" in summary
    for scen in ("grid_world", "e_shape", "disconnected_paths"):
        for label in ("semantic-fuzzy x2", "semantic-fuzzy x1", "bcd", "bb"):
            assert any(line.startswith(scen) and label in line for line in summary.splitlines())
        assert (out / f"{scen}.svg").exists()


def test_battery_robot_trend_rows(tmp_path):
    out = tmp_path / "trend"
    assert main(["battery", "--seeds", "1,2", "--robots", "1,2,3", "--scenarios", "grid_world",
                 "--no-baselines", "--max-steps", "40", "--jobs", "1", "--out", str(out)]) == 0
    rows = _rows(out / "metrics.csv")
    assert sorted((r["robots"], r["seed"]) for r in rows) == [(n, s) for n in "123" for s in "12"]
    assert {r["controller"] for r in rows} == {"semantic-fuzzy"}
