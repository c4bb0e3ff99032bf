"""The standard figure set for a result directory.

Figures are deterministic: fixed layout, no timestamps, and a fixed SVG hash
salt, so identical inputs give identical files.  Annotated numbers (fitted
slope, tail constant c, R^2) are read from summary.json, i.e. they are the
same values `shnw analyze` reports, displayed at %.6g precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "shnw-plots"

import matplotlib.pyplot as plt
import numpy as np

from . import io

FIGURE_KINDS = ("energy_drift", "tails", "truncation", "norms")
FORMATS = ("png", "svg")

ANNOTATION_PRECISION = "%.6g"


def format_value(x: float) -> str:
    return ANNOTATION_PRECISION % x


@dataclass(frozen=True)
class FigureRequest:
    input_dir: Path
    kinds: tuple = FIGURE_KINDS
    fmt: str = "png"
    dpi: int = 110

    def __post_init__(self) -> None:
        for kind in self.kinds:
            if kind not in FIGURE_KINDS:
                raise ValueError(f"unknown figure kind {kind!r} (choose from {FIGURE_KINDS})")
        if self.fmt not in FORMATS:
            raise ValueError(f"unknown output format {self.fmt!r} (choose from {FORMATS})")
        if self.dpi <= 0:
            raise ValueError("dpi must be positive")


def _save(fig, out_path: Path, request: FigureRequest) -> None:
    metadata = {"Date": None} if request.fmt == "svg" else None
    fig.savefig(out_path, dpi=request.dpi, metadata=metadata)
    plt.close(fig)


def _energy_drift(input_dir: Path, out_path: Path, request: FigureRequest) -> dict:
    summary = io.read_summary(input_dir)
    times = np.asarray(summary["times"])
    mean = np.asarray(summary["means"]["E_total"])
    var = np.asarray(summary["variances"]["E_total"])
    stderr = np.sqrt(np.maximum(var, 0.0) / summary["count"])
    analysis = summary.get("analysis", {})

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(times, mean, color="tab:blue", lw=1.6, label=f"mean energy ({summary['count']} traj)")
    ax.fill_between(times, mean - stderr, mean + stderr, color="tab:blue", alpha=0.25,
                    label="±1 standard error")
    annotations = {}
    if "energy_slope" in analysis:
        slope = analysis["energy_slope"]
        stderr_fit = analysis.get("energy_slope_stderr", 0.0)
        intercept = float(np.mean(mean - slope * times))
        ax.plot(times, intercept + slope * times, "k--", lw=1.2,
                label=f"fit: slope = {format_value(slope)}")
        band = 1.0 * stderr_fit
        ax.fill_between(times, intercept + (slope - band) * times,
                        intercept + (slope + band) * times, color="k", alpha=0.12)
        annotations["slope"] = format_value(slope)
    if "hs_reference" in analysis:
        ref = analysis["hs_reference"]
        ax.plot(times, mean[0] + ref * (times - times[0]), "r:", lw=1.4,
                label=f"analytic rate = {format_value(ref)}")
        annotations["hs_reference"] = format_value(ref)
    ax.set_xlabel("t")
    ax.set_ylabel("mean total energy")
    ax.set_title("Ensemble energy drift")
    ax.legend(loc="upper left", fontsize=8)
    _save(fig, out_path, request)
    return annotations


def _tails(input_dir: Path, out_path: Path, request: FigureRequest) -> dict:
    samples, label = io.read_tails(input_dir)
    summary = io.read_summary(input_dir)
    analysis = summary.get("analysis", {})
    lam = np.linspace(np.quantile(samples, 0.5), np.quantile(samples, 0.95), 17)
    survival = np.array([(samples > l).mean() for l in lam])
    keep = survival > 0
    x = lam[keep] ** 2
    y = np.log(survival[keep])

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(x, y, "o", ms=4, color="tab:blue", label=f"empirical ({samples.size} draws)")
    annotations = {}
    if "tail_c" in analysis:
        c = analysis["tail_c"]
        r2 = analysis.get("tail_r2", float("nan"))
        intercept = float(np.mean(y + c * x))
        ax.plot(x, intercept - c * x, "k--", lw=1.2,
                label=f"fit: c = {format_value(c)}, R² = {format_value(r2)}")
        annotations["c"] = format_value(c)
        annotations["r2"] = format_value(r2)
    ax.set_xlabel("λ²")
    ax.set_ylabel("log P(X > λ)")
    ax.set_title(f"Tail of {label}" if label else "Tail plot")
    ax.legend(loc="lower left", fontsize=8)
    _save(fig, out_path, request)
    return annotations


def _truncation(input_dir: Path, out_path: Path, request: FigureRequest) -> dict:
    levels, errors = io.read_truncation(input_dir)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.loglog(levels, errors, "o-", color="tab:green")
    for i in range(1, len(levels)):
        ratio = errors[i] / errors[i - 1]
        ax.annotate(f"×{format_value(ratio)}", (levels[i], errors[i]),
                    textcoords="offset points", xytext=(6, 4), fontsize=8)
    ax.set_xlabel("truncation level N")
    ax.set_ylabel("sup-in-time H¹×L² error")
    ax.set_title("Galerkin truncation convergence")
    _save(fig, out_path, request)
    return {}


def _norms(input_dir: Path, out_path: Path, request: FigureRequest) -> dict:
    files = io.trajectory_files(input_dir)
    panels = ["L2", "H1_inhom", "Lr_space", "X_accum"]
    fig, axes = plt.subplots(2, 2, figsize=(8.5, 6.0), sharex=True)
    series = [io.read_trajectory(p) for p in files]
    for ax, col in zip(axes.ravel(), panels):
        stack = []
        for data in series:
            ax.plot(data["t"], data[col], color="gray", alpha=0.35, lw=0.7)
            stack.append(data[col])
        min_len = min(len(s) for s in stack)
        mean = np.nanmean(np.stack([s[:min_len] for s in stack]), axis=0)
        ax.plot(series[0]["t"][:min_len], mean, color="tab:red", lw=1.6)
        ax.set_title(col, fontsize=9)
    for ax in axes[-1]:
        ax.set_xlabel("t")
    fig.suptitle("Norm growth across the ensemble")
    _save(fig, out_path, request)
    return {}


_BUILDERS = {
    "energy_drift": _energy_drift,
    "tails": _tails,
    "truncation": _truncation,
    "norms": _norms,
}


def plot(request: FigureRequest) -> tuple[list[Path], dict]:
    """Render the requested figures; returns (files, annotation strings).

    Input files are only read.  Raises MissingInputError naming the first
    absent or malformed input.
    """
    input_dir = Path(request.input_dir)
    io.read_manifest(input_dir)  # the directory must at least hold a manifest
    io.trajectory_files(input_dir)
    files: list[Path] = []
    annotations: dict = {}
    for kind in request.kinds:
        out_path = input_dir / f"{kind}.{request.fmt}"
        annotations[kind] = _BUILDERS[kind](input_dir, out_path, request)
        files.append(out_path)
    return files, annotations
