import csv
import json
import math
import xml.etree.ElementTree as ET

import pytest

from leastgrad.cli import main

SVG_NS = "{http://www.w3.org/2000/svg}"


def write_config(tmp_path, **overrides):
    cfg = {
        "domain": {"kind": "circle", "center": [0, 0], "radius": 1},
        "datum": {"builtin": "brothers", "phase": 0.0},
        "p": 2,
        "levels": 24,
        "grid": [64, 64],
        "out": str(tmp_path / "out"),
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_solve_artifacts(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["solve", "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema"] == 1
    assert summary["levels_kept"] == 24
    assert summary["nesting_violations"] == []
    assert summary["coarea_tv"] == pytest.approx(8 * math.sqrt(2) / 3, rel=0.01)
    with open(out / "grid.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["x", "y", "u"]
    svg = ET.parse(out / "levels.svg").getroot()
    paths = svg.findall(f".//{SVG_NS}path")
    # one boundary outline plus two chords for each of the 24 levels
    assert len(paths) == 1 + 48
    classes = {p.get("class") for p in paths}
    assert classes == {"boundary", "chord"}


def test_solve_flag_overrides(tmp_path):
    cfg = write_config(tmp_path)
    out2 = tmp_path / "other"
    assert main(["solve", "--config", str(cfg), "--levels", "12",
                 "--grid", "48x48", "--out", str(out2)]) == 0
    summary = json.loads((out2 / "summary.json").read_text())
    assert summary["levels_kept"] == 12


def test_constant_datum_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, datum={"piecewise": [], "default": 1.0})
    assert main(["solve", "--config", str(cfg)]) == 2
    assert "non-constant" in capsys.readouterr().err


def test_grid_too_small_rejected(tmp_path):
    cfg = write_config(tmp_path, grid=[16, 16])
    assert main(["solve", "--config", str(cfg)]) == 2


def test_bad_p_rejected(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["solve", "--config", str(cfg), "--p", "0.3"]) == 2


def test_nonuniqueness_smooth_p_message(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["nonuniqueness", "--config", str(cfg), "--p", "2"]) == 2
    assert "uniqueness regime" in capsys.readouterr().out


def test_nonuniqueness_p1_rotated(tmp_path):
    cfg = write_config(tmp_path,
                       datum={"builtin": "brothers", "phase": math.pi / 2},
                       levels=16, grid=[48, 48])
    assert main(["nonuniqueness", "--config", str(cfg), "--p", "1"]) == 0
    out = tmp_path / "out"
    report = json.loads((out / "nonuniqueness.json").read_text())
    assert report["fraction_nonunique"] == 1.0
    assert all(row["optima"] >= 2 for row in report["levels"])
    assert (out / "alternative_grid.csv").exists()
    svg = ET.parse(out / "witnesses.svg").getroot()
    assert svg.findall(f".//{SVG_NS}path[@class='witness']")


def test_nonuniqueness_pinf_axis(tmp_path):
    cfg = write_config(tmp_path, levels=16, grid=[48, 48])
    assert main(["nonuniqueness", "--config", str(cfg), "--p", "inf"]) == 0
    report = json.loads((tmp_path / "out" / "nonuniqueness.json").read_text())
    assert report["fraction_nonunique"] == 1.0


def test_approx_mollify_table(tmp_path):
    cfg = write_config(
        tmp_path,
        datum={"piecewise": [{"from": 0.0, "to": 1.0, "value": 1.0}]},
        levels=16, grid=[48, 48], eps=[0.125, 0.0625])
    assert main(["approx", "--config", str(cfg)]) == 0
    with open(tmp_path / "out" / "approx.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert float(rows[1]["data_l1_error"]) < float(rows[0]["data_l1_error"])
    assert float(rows[0]["bv_seminorm"]) == pytest.approx(2.0, rel=1e-6)


def test_approx_cantor_stage_table(tmp_path):
    cfg = write_config(tmp_path,
                       datum={"builtin": "cantor", "variant": "thin", "stage": 1},
                       levels=8, grid=[64, 64], stages=[1, 2, 3])
    assert main(["approx", "--config", str(cfg)]) == 0
    with open(tmp_path / "out" / "approx.csv") as fh:
        rows = list(csv.DictReader(fh))
    norms = [float(r["solution_l1"]) for r in rows]
    assert norms[0] > norms[1] > norms[2]


def test_approx_cantor_fat_keeps_trace(tmp_path):
    cfg = write_config(tmp_path,
                       datum={"builtin": "cantor", "variant": "fat", "stage": 1},
                       levels=16, grid=[128, 128], band=0.02, stages=[1, 2, 3])
    assert main(["approx", "--config", str(cfg)]) == 0
    with open(tmp_path / "out" / "approx.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert all(float(r["trace_discrepancy"]) < 0.15 for r in rows)


def test_cantor_command(capsys):
    assert main(["cantor", "--stages", "3"]) == 0
    out = capsys.readouterr().out
    assert "a_n=3/8" in out and "a_n=5/32" in out and "a_n=9/128" in out
    assert "thin_inequality_holds=True" in out


def test_cantor_fat_large_removal_fails(capsys):
    assert main(["cantor", "--stages", "3", "--variant", "fat",
                 "--removal", "1/64"]) == 3
    assert "fails the reversed inequality" in capsys.readouterr().out


def test_cantor_fat_default_removal_passes():
    assert main(["cantor", "--stages", "10", "--variant", "fat"]) == 0


def test_decompose_command(tmp_path):
    cfg = write_config(
        tmp_path,
        datum={"piecewise": [{"from": 0.6, "to": 2.5, "value": 1.0},
                             {"from": 2.5, "to": 4.6, "value": 3.0}]},
        levels=30, grid=[96, 96])
    assert main(["decompose", "--config", str(cfg)]) == 0
    tree = json.loads((tmp_path / "out" / "tree.json").read_text())
    assert len(tree["regions"]) == 3
    assert len(tree["edges"]) == 2
    assert (tmp_path / "out" / "jump.csv").exists()
    assert (tmp_path / "out" / "continuous.csv").exists()


def test_match_oracle_command(capsys):
    assert main(["match-oracle", "--cases", "30", "--seed", "5"]) == 0
    assert "exactly" in capsys.readouterr().out


def test_solve_with_cantor_flags_trace_loss(tmp_path):
    cfg = write_config(tmp_path,
                       datum={"builtin": "cantor", "variant": "thin", "stage": 4},
                       levels=8, grid=[128, 128], band=0.01)
    assert main(["solve", "--config", str(cfg)]) == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    # the thin-stage solution hugs the boundary; an offset curve misses it
    assert summary["trace_discrepancy"] > 0.25
