"""Derived quantities shared by `ensemble`, `analyze`, and the figure tool."""

from __future__ import annotations

import numpy as np

from . import diagnostics as diag
from .dynamics import SimConfig
from .stochastic import hs_norm


def drift_window(times: np.ndarray) -> tuple[float, float]:
    """Fit window for the energy drift: drop t = 0 (zero-variance start)."""
    if len(times) >= 5:
        return float(times[1]), float(times[-1])
    return float(times[0]), float(times[-1])


def ensemble_analysis(summary: diag.EnsembleSummary, cfg: SimConfig,
                      tail_samples: np.ndarray | None = None) -> dict:
    """Slope fit, analytic noise reference, and optional tail fit for a run."""
    out: dict = {}
    try:
        slope, stderr = diag.ito_drift_fit(summary, drift_window(summary.times))
        out["energy_slope"] = slope
        out["energy_slope_stderr"] = stderr
    except ValueError:
        pass
    noise = cfg.noise.build(cfg.grid(), cfg.master_seed)
    out["hs_reference"] = 0.5 * hs_norm(noise, 0.0) ** 2
    if tail_samples is not None and len(tail_samples) >= 100:
        lam = np.linspace(np.quantile(tail_samples, 0.5), np.quantile(tail_samples, 0.95), 17)
        fit = diag.tail_estimate(tail_samples, lam)
        out["tail_c"] = fit.c
        out["tail_r2"] = fit.r_squared
    return out
