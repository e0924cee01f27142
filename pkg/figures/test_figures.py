"""Secondary-component tests: figure scripts consuming the CLI's CSVs."""

import subprocess
import sys
from pathlib import Path

import pytest

SCRIPTS = Path(__file__).parent


@pytest.fixture(scope="module")
def cli_outputs(tmp_path_factory):
    """Small CSVs produced through the CLI, the primary's external interface."""
    out = tmp_path_factory.mktemp("csvs")
    cli = [sys.executable, "-m", "sqswap"]
    runs = [
        ["gain-scan", "--n", "30", "--points", "5", "--tau-max", "0.8", "--res", "40"],
        ["ms-scan", "--n", "20", "--tau", "0.3", "--nu-points", "10", "--phi-points", "8"],
        ["estimate", "--n", "30", "--sigma", "0.05", "--tau", "0.4", "--shots", "3000",
         "--scatter-shots", "1500"],
    ]
    for args in runs:
        subprocess.run(cli + args + ["--out", str(out)], check=True)
    return out


def run_script(name, args):
    return subprocess.run(
        [sys.executable, str(SCRIPTS / name), *map(str, args)],
        capture_output=True,
        text=True,
    )


def test_gain_scan_figure(cli_outputs, tmp_path):
    out = tmp_path / "gain.png"
    proc = run_script("plot_gain_scan.py", [cli_outputs / "gain_scan.csv", out])
    assert proc.returncode == 0, proc.stderr
    assert out.stat().st_size > 1000


def test_ms_scan_figure(cli_outputs, tmp_path):
    out = tmp_path / "ms.png"
    proc = run_script("plot_ms_scan.py", [cli_outputs / "ms_scan.csv", out])
    assert proc.returncode == 0, proc.stderr
    assert out.stat().st_size > 1000


def test_estimate_figure(cli_outputs, tmp_path):
    out = tmp_path / "scatter.png"
    proc = run_script(
        "plot_estimate.py", [cli_outputs / "estimate_scatter.csv", out, "--n", 30]
    )
    assert proc.returncode == 0, proc.stderr
    assert out.stat().st_size > 1000


def test_rerender_is_deterministic(cli_outputs, tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    for out in (a, b):
        proc = run_script("plot_gain_scan.py", [cli_outputs / "gain_scan.csv", out])
        assert proc.returncode == 0, proc.stderr
    assert a.read_bytes() == b.read_bytes()


def test_missing_column_fails_loudly(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("tau_over_tauref,gain_exact\n0.0,1.0\n", encoding="utf-8")
    out = tmp_path / "x.png"
    proc = run_script("plot_gain_scan.py", [bad, out])
    assert proc.returncode == 1
    assert "gain_analytic" in proc.stderr
    assert not out.exists()
