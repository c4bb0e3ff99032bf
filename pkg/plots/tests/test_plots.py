"""End-to-end checks of the figure tool against a real reference directory.

The reference outputs are produced through the simulator's command-line
interface (the only coupling between the two packages is the file formats).
"""

import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from shnw_plots.cli import main
from shnw_plots.figures import FIGURE_KINDS, FigureRequest, format_value, plot
from shnw_plots.io import MissingInputError


@pytest.fixture(scope="session")
def reference_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("reference") / "ref"
    proc = subprocess.run(
        [sys.executable, "-m", "shnw.cli", "verify", "--level", "quick", "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    return out


def _input_digest(directory: Path) -> dict:
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(directory.iterdir())
            if p.suffix in (".json", ".csv", ".shnw")}


def test_all_four_figures_produced(reference_dir):
    before = _input_digest(reference_dir)
    files, _ = plot(FigureRequest(input_dir=reference_dir))
    assert len(files) == 4
    for path in files:
        assert path.exists() and path.stat().st_size > 0
    assert {p.stem for p in files} == set(FIGURE_KINDS)
    # plotting never mutates its inputs
    assert _input_digest(reference_dir) == before


def test_annotations_match_analyze_output(reference_dir):
    # refresh summary.json through the analyze command, then compare the
    # figure annotations against exactly those stored values
    proc = subprocess.run([sys.executable, "-m", "shnw.cli", "analyze", str(reference_dir)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    _, annotations = plot(FigureRequest(input_dir=reference_dir, kinds=("energy_drift", "tails")))
    summary = json.loads((reference_dir / "summary.json").read_text())
    analysis = summary["analysis"]
    assert annotations["energy_drift"]["slope"] == format_value(analysis["energy_slope"])
    assert annotations["energy_drift"]["hs_reference"] == format_value(analysis["hs_reference"])
    assert annotations["tails"]["c"] == format_value(analysis["tail_c"])
    assert annotations["tails"]["r2"] == format_value(analysis["tail_r2"])


def test_single_kind_single_file(reference_dir):
    files, _ = plot(FigureRequest(input_dir=reference_dir, kinds=("energy_drift",)))
    assert [p.name for p in files] == ["energy_drift.png"]


def test_svg_output(reference_dir):
    files, _ = plot(FigureRequest(input_dir=reference_dir, kinds=("truncation",), fmt="svg"))
    assert files[0].suffix == ".svg"
    assert files[0].stat().st_size > 0


def test_identical_inputs_identical_figures(reference_dir, tmp_path):
    request = FigureRequest(input_dir=reference_dir, kinds=("norms",))
    files1, _ = plot(request)
    first = files1[0].read_bytes()
    files2, _ = plot(request)
    assert files2[0].read_bytes() == first


def test_empty_dir_errors_naming_manifest(tmp_path):
    with pytest.raises(MissingInputError, match="manifest"):
        plot(FigureRequest(input_dir=tmp_path))


def test_cli_reports_missing_input(tmp_path, capsys):
    assert main([str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "manifest" in err


def test_cli_end_to_end(reference_dir, capsys):
    assert main([str(reference_dir), "--kinds", "energy_drift", "tails"]) == 0
    out = capsys.readouterr().out
    assert "energy_drift.png" in out
    assert "c=" in out


def test_request_validation(tmp_path):
    with pytest.raises(ValueError, match="unknown figure kind"):
        FigureRequest(input_dir=tmp_path, kinds=("spectrogram",))
    with pytest.raises(ValueError, match="format"):
        FigureRequest(input_dir=tmp_path, fmt="pdf")
