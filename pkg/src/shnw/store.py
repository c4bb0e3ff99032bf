"""Result-directory layout: manifest, per-trajectory CSVs, summaries, snapshots.

Numbers are written in full-precision scientific notation (17 significant
digits) so reading a CSV back reproduces the exact doubles; re-running a
command with the same configuration and seeds is byte-identical.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from . import diagnostics as diag
from .config import ExperimentManifest, manifest_to_json
from .dynamics import TrajectoryRecord
from .snapshots import write_state

MANIFEST_NAME = "manifest.json"
SUMMARY_NAME = "summary.json"
TAILS_NAME = "tails.csv"
TRUNCATION_NAME = "truncation.csv"


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.16e}"


def _rows_to_csv(rows) -> str:
    lines = [",".join(diag.CSV_COLUMNS)]
    for r in rows:
        cells = [_fmt(getattr(r, c)) for c in diag.NUMERIC_COLUMNS]
        cells.append(r.status)
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def trajectory_csv_path(out_dir: Path, index: int, suffix: str = "") -> Path:
    return Path(out_dir) / f"traj_{index:04d}{suffix}.csv"


def write_manifest(out_dir: Path, manifest: ExperimentManifest) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / MANIFEST_NAME).write_text(manifest_to_json(manifest) + "\n")


def read_manifest(out_dir: Path) -> dict:
    path = Path(out_dir) / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"missing manifest: {path}")
    return json.loads(path.read_text())


def write_trajectory(out_dir: Path, record: TrajectoryRecord) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    path = trajectory_csv_path(out_dir, record.trajectory_index)
    path.write_text(_rows_to_csv(record.rows))
    written.append(path)
    if record.rows_v is not None:
        pv = trajectory_csv_path(out_dir, record.trajectory_index, "_v")
        pv.write_text(_rows_to_csv(record.rows_v))
        written.append(pv)
    if record.rows_psi is not None:
        pp = trajectory_csv_path(out_dir, record.trajectory_index, "_psi")
        pp.write_text(_rows_to_csv(record.rows_psi))
        written.append(pp)
    for snap_index, (t, state) in enumerate(record.snapshots):
        spath = out_dir / f"traj_{record.trajectory_index:04d}_snap_{snap_index:02d}.shnw"
        write_state(spath, state.u, state.ut)
        written.append(spath)
    return written


def read_trajectory_csv(path: Path) -> list[diag.DiagnosticsRecord]:
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    if header != diag.CSV_COLUMNS:
        raise ValueError(f"unexpected CSV columns in {path}: {header}")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        values = {c: float(v) for c, v in zip(diag.NUMERIC_COLUMNS, cells)}
        values["status"] = cells[-1]
        rows.append(diag.DiagnosticsRecord(**values))
    return rows


def list_trajectory_csvs(out_dir: Path) -> list[Path]:
    out = sorted(Path(out_dir).glob("traj_[0-9][0-9][0-9][0-9].csv"))
    return out


def summary_to_dict(summary: diag.EnsembleSummary, analysis: dict | None = None) -> dict:
    doc = {
        "times": [float(t) for t in summary.times],
        "means": {k: [float(x) for x in v] for k, v in summary.means.items()},
        "variances": {k: [float(x) for x in v] for k, v in summary.variances.items()},
        "count": summary.count,
    }
    if analysis is not None:
        doc["analysis"] = analysis
    return doc


def write_summary(out_dir: Path, summary: diag.EnsembleSummary, analysis: dict | None = None) -> Path:
    path = Path(out_dir) / SUMMARY_NAME
    path.write_text(json.dumps(summary_to_dict(summary, analysis), indent=2, sort_keys=True) + "\n")
    return path


def read_summary(out_dir: Path) -> dict:
    path = Path(out_dir) / SUMMARY_NAME
    if not path.exists():
        raise FileNotFoundError(f"missing summary: {path}")
    return json.loads(path.read_text())


def summary_from_dict(doc: dict) -> diag.EnsembleSummary:
    return diag.EnsembleSummary(
        times=np.asarray(doc["times"], dtype=float),
        means={k: np.asarray(v, dtype=float) for k, v in doc["means"].items()},
        variances={k: np.asarray(v, dtype=float) for k, v in doc["variances"].items()},
        count=int(doc["count"]),
    )


def write_tail_samples(out_dir: Path, samples: Sequence[float], label: str) -> Path:
    path = Path(out_dir) / TAILS_NAME
    lines = ["sample,label"] + [f"{_fmt(s)},{label}" for s in samples]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_tail_samples(out_dir: Path) -> tuple[np.ndarray, str]:
    path = Path(out_dir) / TAILS_NAME
    lines = path.read_text().strip().splitlines()
    if lines[0] != "sample,label":
        raise ValueError(f"unexpected tails.csv header in {path}")
    samples, label = [], ""
    for line in lines[1:]:
        cell, label = line.split(",", 1)
        samples.append(float(cell))
    return np.asarray(samples), label


def write_truncation_study(out_dir: Path, levels: Sequence[float], errors: Sequence[float]) -> Path:
    path = Path(out_dir) / TRUNCATION_NAME
    lines = ["truncation_N,sup_error"]
    for N, err in zip(levels, errors):
        lines.append(f"{_fmt(float(N))},{_fmt(float(err))}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_truncation_study(out_dir: Path) -> tuple[np.ndarray, np.ndarray]:
    path = Path(out_dir) / TRUNCATION_NAME
    lines = path.read_text().strip().splitlines()
    if lines[0] != "truncation_N,sup_error":
        raise ValueError(f"unexpected truncation.csv header in {path}")
    levels, errors = [], []
    for line in lines[1:]:
        a, b = line.split(",")
        levels.append(float(a))
        errors.append(float(b))
    return np.asarray(levels), np.asarray(errors)
