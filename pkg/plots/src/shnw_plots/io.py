"""Readers for the public result-directory schemas.

This package deliberately has no dependency on the simulator: everything is
parsed from the documented file formats (manifest.json, traj_NNNN.csv,
summary.json, tails.csv, truncation.csv).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

CSV_COLUMNS = [
    "t", "E_total", "E_kinetic", "E_gradient", "E_potential", "L2", "H1_inhom",
    "Hs_probe", "Lr_space", "X_accum", "Y_probe", "Z_probe", "zero_mode_u", "status",
]


class MissingInputError(FileNotFoundError):
    """An expected input file is absent or malformed; the message names it."""


def read_manifest(input_dir: Path) -> dict:
    path = Path(input_dir) / "manifest.json"
    if not path.exists():
        raise MissingInputError(f"missing manifest: {path}")
    return json.loads(path.read_text())


def trajectory_files(input_dir: Path) -> list[Path]:
    files = sorted(Path(input_dir).glob("traj_[0-9][0-9][0-9][0-9].csv"))
    if not files:
        raise MissingInputError(f"no trajectory CSV files in {input_dir}")
    return files


def read_trajectory(path: Path) -> dict:
    """One CSV as {column: float array} plus the status strings."""
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    if header != CSV_COLUMNS:
        raise MissingInputError(f"unexpected CSV columns in {path}")
    numeric = {c: [] for c in CSV_COLUMNS[:-1]}
    statuses = []
    for line in lines[1:]:
        cells = line.split(",")
        for col, cell in zip(CSV_COLUMNS[:-1], cells):
            numeric[col].append(float(cell))
        statuses.append(cells[-1])
    out = {col: np.asarray(vals) for col, vals in numeric.items()}
    out["status"] = statuses
    return out


def read_summary(input_dir: Path) -> dict:
    path = Path(input_dir) / "summary.json"
    if not path.exists():
        raise MissingInputError(f"missing summary: {path}")
    return json.loads(path.read_text())


def read_tails(input_dir: Path) -> tuple[np.ndarray, str]:
    path = Path(input_dir) / "tails.csv"
    if not path.exists():
        raise MissingInputError(f"missing tail samples: {path}")
    lines = path.read_text().strip().splitlines()
    if lines[0] != "sample,label":
        raise MissingInputError(f"unexpected tails.csv header in {path}")
    samples, label = [], ""
    for line in lines[1:]:
        cell, label = line.split(",", 1)
        samples.append(float(cell))
    return np.asarray(samples), label


def read_truncation(input_dir: Path) -> tuple[np.ndarray, np.ndarray]:
    path = Path(input_dir) / "truncation.csv"
    if not path.exists():
        raise MissingInputError(f"missing truncation study: {path}")
    lines = path.read_text().strip().splitlines()
    if lines[0] != "truncation_N,sup_error":
        raise MissingInputError(f"unexpected truncation.csv header in {path}")
    levels, errors = [], []
    for line in lines[1:]:
        a, b = line.split(",")
        levels.append(float(a))
        errors.append(float(b))
    return np.asarray(levels), np.asarray(errors)
