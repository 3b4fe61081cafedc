import json
import subprocess
import sys

import pytest

from nhaah import io
from nhaah.cli import main, pinned


def run(*args):
    return subprocess.run([sys.executable, "-m", "nhaah", *args], capture_output=True, text=True)


def test_help_and_version():
    r = run("--help")
    assert r.returncode == 0 and "phase-diagram" in r.stdout
    r = run("--version")
    assert r.returncode == 0 and r.stdout.startswith("nhaah ")


@pytest.mark.parametrize("args", [["bogus"], ["spectrum", "--mu", "abc"], ["spectrum", "--L", "1"],
                                  ["spectrum"], ["reproduce", "fig99"]])
def test_usage_errors_exit_2(args):
    r = run(*args)
    assert r.returncode == 2, r.stderr


def test_spectrum_outputs(tmp_path, capsys):
    assert main(["spectrum", "--L", "13", "--mu", "1.5", "--U", "0.8", "--tau-loc", "0.05",
                 "--out", str(tmp_path)]) == 0
    assert "max|Im E|" in capsys.readouterr().out
    h, cols, rows = io.read_csv(tmp_path / "spectrum.csv")
    assert cols == io.SPECTRUM_COLUMNS and len(rows) == 91
    side = json.loads((tmp_path / "spectrum.json").read_text())
    assert side["config_hash"] == h and side["D"] == 91
    for name, columns in (("summary.csv", io.SUMMARY_COLUMNS), ("pt.csv", io.PT_COLUMNS)):
        h2, cols, rows = io.read_csv(tmp_path / name)
        assert h2 == h and cols == columns and len(rows) == 1
    first = (tmp_path / "spectrum.csv").read_text().splitlines()[0]
    assert first.startswith("# nhaah ") and f"config_hash={h}" in first


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("L: 13\nU: 0.8\nmu: 0.3\ntau_loc: 0.05\n")
    out = tmp_path / "o"
    assert main(["spectrum", "--config", str(cfg), "--mu", "1.5", "--out", str(out)]) == 0
    _, _, rows = io.read_csv(out / "pt.csv")
    assert float(rows[0][0]) == 1.5 and float(rows[0][1]) == 0.8


def test_bad_values_inside_a_command_exit_2(tmp_path, capsys):
    # the doublon expansion is undefined without interaction
    assert main(["doublon", "--L", "8", "--mu", "0.5", "--U", "0", "--out", str(tmp_path)]) == 2
    assert "U != 0" in capsys.readouterr().err
    # tau_loc below 1/D cannot separate anything
    assert main(["spectrum", "--L", "13", "--mu", "1.5", "--U", "0.8", "--out", str(tmp_path)]) == 2


def test_runtime_failure_exits_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["spectrum", "--L", "8", "--mu", "0.5", "--U", "0", "--tau-loc", "0.05",
                 "--out", str(blocker / "sub")]) == 1
    assert "spectrum failed" in capsys.readouterr().err


def test_phase_diagram(tmp_path):
    out = tmp_path / "pd"
    args = ["phase-diagram", "--L", "21", "--mu-range", "0.2", "1.4", "3", "--U-range", "0", "1", "2",
            "--out", str(out)]
    assert main(args) == 0
    _, cols, rows = io.read_csv(out / "grid.csv")
    assert len(rows) == 6 and "max_abs_imag" in cols and "ipr_max" in cols
    assert (out / "pt_boundary.csv").exists() and (out / "grid.json").exists()
    assert main(args + ["--diagnostics", "pt,magic"]) == 2


def test_winding_and_doublon(tmp_path):
    out = tmp_path / "w"
    assert main(["winding", "--L", "13", "--mu", "1.5", "--U", "0", "--base-energy", "0",
                 "--single-particle", "--out", str(out)]) == 0
    _, cols, rows = io.read_csv(out / "winding_single.csv")
    assert int(rows[0][cols.index("w")]) == 1
    out = tmp_path / "d"
    assert main(["doublon", "--L", "13", "--mu", "0.5", "--U", "20", "--out", str(out)]) == 0
    _, cols, rows = io.read_csv(out / "doublon.csv")
    assert cols == io.DOUBLON_COLUMNS and len(rows) == 13
    assert json.loads((out / "doublon.json").read_text())["band_size"] == 13


def test_evolve_and_entropy(tmp_path):
    common = ["--L", "13", "--mu", "1.5", "--U", "0.8", "--t-max", "100", "--per-decade", "8"]
    assert main(["evolve", *common, "--out", str(tmp_path / "e")]) == 0
    _, cols, rows = io.read_csv(tmp_path / "e" / "trace.csv")
    assert cols == io.TRACE_COLUMNS and len(rows) == 13 * (3 * 8 + 2)
    assert (tmp_path / "e" / "forecast.csv").exists()
    assert main(["entropy", *common, "--out", str(tmp_path / "s")]) == 0
    _, cols, rows = io.read_csv(tmp_path / "s" / "ee.csv")
    assert cols == io.EE_COLUMNS and len(rows) == 3 * 8 + 2


def test_reproduce_table_desk(tmp_path):
    assert main(["reproduce", "tableII", "--desk", "--out", str(tmp_path)]) == 0
    _, cols, rows = io.read_csv(tmp_path / "tableII.csv")
    assert cols == io.FORECAST_COLUMNS and len(rows) >= 2


def test_pinned_scales():
    assert pinned("fig2c", desk=False)["L"] == 144
    assert pinned("fig4", desk=True)["L"] == 34
    assert "winding" in pinned("fig4", desk=False)["diagnostics"]
