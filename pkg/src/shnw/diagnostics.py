"""Energy decomposition, mixed space-time norms, ensemble statistics, and fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields as dataclass_fields
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .linwave import WaveState
from .spectral import (
    FOURIER,
    PHYSICAL,
    Field,
    bessel_derivative_multiplier,
    apply_multiplier,
    fractional_derivative_multiplier,
    hartree_potential_multiplier,
    lebesgue_norm,
    sobolev_norm,
    transform,
)

# Sobolev probe exponent s - delta with s = 0.75, delta = 0.01: the midpoint of
# the randomized-data regularity window 1/2 + delta < s < 1.
HS_PROBE_EXPONENT = 0.74

# Frozen bound for the interpolation check |v|_{10/3} <= C |grad v|^{1/5} ||nabla|^{-1/4} v|^{4/5}
# on d=5 band-limited fields.  Calibrated once on the seeded corpus of
# calibrate_interpolation_constant(seed=20240901, count=100), which measured a
# maximal ratio of 0.9623; rounded up for floating-point slack across platforms.
INTERPOLATION_CONSTANT = 0.97


class EnergyParts(NamedTuple):
    total: float
    kinetic: float
    gradient: float
    potential: float


def energy(state: WaveState, gamma: float, mu: float) -> EnergyParts:
    """Hamiltonian split: kinetic |ut|^2/2, gradient |grad u|^2/2, Hartree/4.

    The potential term is evaluated in Fourier through the Riesz identity:
    (mu/4) sum_xi m(xi) |(u^2)^(xi)|^2 with the periodized-kernel zero mode,
    which makes it a sum of same-sign terms for either sign of mu.
    """
    grid = state.grid
    q = transform(state.ut, FOURIER).values
    p = transform(state.u, FOURIER).values
    kinetic = 0.5 * float(np.sum(np.abs(q) ** 2))
    gradient = 0.5 * float(np.sum(grid.xi_sq * np.abs(p) ** 2))
    if mu == 0.0:
        potential = 0.0
    else:
        u_phys = transform(state.u, PHYSICAL).real_values
        w = Field(grid=grid, values=u_phys**2, representation=PHYSICAL, reality_flag=True)
        what = transform(w, FOURIER).values
        m_vals = hartree_potential_multiplier(grid, gamma, mu).values(grid)
        potential = 0.25 * float(np.sum(m_vals.real * np.abs(what) ** 2))
    return EnergyParts(total=kinetic + gradient + potential,
                       kinetic=kinetic, gradient=gradient, potential=potential)


def strichartz_exponents(d: int) -> tuple[int, Fraction]:
    """Admissible pair (3, 6d/(3d-8)) of the local-theory space; d >= 5 only."""
    if d < 5:
        raise ValueError(f"Strichartz pair (3, 6d/(3d-8)) requires d >= 5, got d={d}")
    return 3, Fraction(6 * d, 3 * d - 8)


def lr_exponent(d: int) -> float | None:
    """Spatial exponent 6d/(3d-8) as a float; None when degenerate (d <= 2)."""
    if 3 * d - 8 <= 0:
        return None
    return 6.0 * d / (3.0 * d - 8.0)


def spacetime_norm(samples: Sequence[tuple[float, Field]], q: float, r: float) -> float:
    """L^q in time (trapezoid over the sample times) of the spatial L^r norm."""
    if q != np.inf and q < 1.0 or (r != np.inf and r < 1.0):
        raise ValueError(f"exponents must be >= 1 or inf, got q={q}, r={r}")
    if len(samples) == 0:
        raise ValueError("no samples")
    times = np.array([t for t, _ in samples], dtype=float)
    if np.any(np.diff(times) < 0):
        raise ValueError("samples must be time-ordered")
    space = np.array([lebesgue_norm(f, r) for _, f in samples])
    if q == np.inf:
        return float(space.max())
    if len(samples) < 2:
        raise ValueError("finite time exponent needs at least 2 samples")
    return float(np.trapezoid(space**q, times) ** (1.0 / q))


def yz_norms(samples: Sequence[tuple[float, Field]], sdelta: float = HS_PROBE_EXPONENT) -> tuple[float, float]:
    """The two bookkeeping norms of the d = 5 energy-bound machinery.

    Y = |f|^10_{L^10_t L^{10/3}_x} + |<D>^{s-d} f|_{L^inf_t L^5_x}
    Z = |f|^6_{L^6_t L^{30/7}_x} + |f|^10_{L^inf_t L^{10/3}_x} + |f|^2_{L^inf_t L^5_x}
    """
    if not samples:
        raise ValueError("no samples")
    d = samples[0][1].grid.d
    if d != 5:
        raise ValueError(f"Y/Z norms are defined for d = 5, got d={d}")
    smoothed = [(t, apply_multiplier(f, bessel_derivative_multiplier(sdelta))) for t, f in samples]
    y = spacetime_norm(samples, 10.0, 10.0 / 3.0) ** 10 + spacetime_norm(smoothed, np.inf, 5.0)
    z = (spacetime_norm(samples, 6.0, 30.0 / 7.0) ** 6
         + spacetime_norm(samples, np.inf, 10.0 / 3.0) ** 10
         + spacetime_norm(samples, np.inf, 5.0) ** 2)
    return float(y), float(z)


def interpolation_check(v: Field) -> tuple[float, float]:
    """Both sides of |v|_{L^{10/3}} <= C |grad v|_{L^2}^{1/5} ||D|^{-1/4} v|_{L^4}^{4/5} (d = 5)."""
    if v.grid.d != 5:
        raise ValueError(f"interpolation check is a d = 5 statement, got d={v.grid.d}")
    lhs = lebesgue_norm(v, 10.0 / 3.0)
    grad = sobolev_norm(v, 1.0, "homogeneous")
    neg_quarter = transform(apply_multiplier(v, fractional_derivative_multiplier(-0.25)), PHYSICAL)
    rhs = grad ** 0.2 * lebesgue_norm(neg_quarter, 4.0) ** 0.8
    return float(lhs), float(rhs)


def calibrate_interpolation_constant(count: int = 100, seed: int = 20240901) -> float:
    """Max lhs/rhs ratio over the frozen seeded corpus behind INTERPOLATION_CONSTANT."""
    from .spectral import make_grid, random_real_field

    grid = make_grid(5, 8, 2.0 * np.pi)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        f = random_real_field(grid, rng, kmax=3, decay=0.4, amplitude=1.0)
        lhs, rhs = interpolation_check(f)
        if rhs > 0:
            worst = max(worst, lhs / rhs)
    return worst


# ---------------------------------------------------------------------------
# Per-sample records and ensemble statistics
# ---------------------------------------------------------------------------

@dataclass
class DiagnosticsRecord:
    t: float
    E_total: float
    E_kinetic: float
    E_gradient: float
    E_potential: float
    L2: float
    H1_inhom: float
    Hs_probe: float
    Lr_space: float
    X_accum: float
    Y_probe: float
    Z_probe: float
    zero_mode_u: float
    status: str = "ok"


CSV_COLUMNS = [f.name for f in dataclass_fields(DiagnosticsRecord)]
NUMERIC_COLUMNS = CSV_COLUMNS[:-1]


@dataclass
class EnsembleSummary:
    """Cross-trajectory mean/variance of every numeric diagnostic."""

    times: np.ndarray
    means: dict
    variances: dict
    count: int

    def stderr(self, column: str) -> np.ndarray:
        return np.sqrt(np.maximum(self.variances[column], 0.0) / self.count)


def records_to_matrix(rows: Sequence[DiagnosticsRecord]) -> np.ndarray:
    return np.array([[getattr(r, c) for c in NUMERIC_COLUMNS] for r in rows], dtype=float)


def build_summary(trajectory_rows: Sequence[Sequence[DiagnosticsRecord]]) -> EnsembleSummary:
    """Reduce per-trajectory diagnostics series to ensemble statistics.

    Trajectories are aligned on their common leading time range (a tripped or
    failed trajectory contributes only the samples it produced).  Reduction is
    in trajectory-index order, so the result is schedule independent.
    """
    if not trajectory_rows:
        raise ValueError("no trajectories to summarize")
    n_common = min(len(rows) for rows in trajectory_rows)
    if n_common == 0:
        raise ValueError("a trajectory produced no samples")
    stack = np.stack([records_to_matrix(rows[:n_common]) for rows in trajectory_rows])
    times = stack[0, :, 0]
    for traj in stack:
        if not np.array_equal(traj[:, 0], times):
            raise ValueError("trajectories sampled at different times")
    count = stack.shape[0]
    means, variances = {}, {}
    for j, col in enumerate(NUMERIC_COLUMNS):
        data = stack[:, :, j]
        means[col] = data.mean(axis=0)
        variances[col] = data.var(axis=0, ddof=1) if count > 1 else np.zeros(data.shape[1])
    return EnsembleSummary(times=times, means=means, variances=variances, count=count)


def ito_drift_fit(summary: EnsembleSummary, t_window: tuple[float, float]) -> tuple[float, float]:
    """Weighted least-squares slope of mean total energy against time.

    Weights are 1/stderr^2; if any selected time has zero (or non-finite)
    spread the fit falls back to uniform weights with the classic OLS
    residual-based slope error.
    """
    t0, t1 = t_window
    sel = (summary.times >= t0) & (summary.times <= t1)
    t = summary.times[sel]
    if t.size < 4:
        raise ValueError(f"degenerate window: {t.size} sample times in [{t0}, {t1}] (need >= 4)")
    if summary.count < 2:
        raise ValueError("need at least 2 trajectories for a drift fit")
    y = summary.means["E_total"][sel]
    se = summary.stderr("E_total")[sel]
    if np.all(np.isfinite(se)) and np.all(se > 0):
        w = 1.0 / se**2
        exact_weights = True
    else:
        w = np.ones_like(t)
        exact_weights = False
    wsum = w.sum()
    tbar = float(np.sum(w * t) / wsum)
    ybar = float(np.sum(w * y) / wsum)
    s_tt = float(np.sum(w * (t - tbar) ** 2))
    slope = float(np.sum(w * (t - tbar) * (y - ybar)) / s_tt)
    if exact_weights:
        stderr = math.sqrt(1.0 / s_tt)
    else:
        resid = y - ybar - slope * (t - tbar)
        dof = max(t.size - 2, 1)
        stderr = math.sqrt(float(np.sum(resid**2)) / dof / s_tt)
    return slope, stderr


def ito_drift_functional(summary_times: np.ndarray, stderrs: np.ndarray,
                         t_window: tuple[float, float]):
    """The linear functional applied by ito_drift_fit, as weights per sample.

    Useful for propagating the fit to individual trajectories: the ensemble
    WLS slope is exactly the mean of this functional applied per trajectory.
    """
    t0, t1 = t_window
    sel = (summary_times >= t0) & (summary_times <= t1)
    t = summary_times[sel]
    se = stderrs[sel]
    w = 1.0 / se**2 if np.all(np.isfinite(se)) and np.all(se > 0) else np.ones_like(t)
    tbar = np.sum(w * t) / w.sum()
    coeffs = w * (t - tbar) / np.sum(w * (t - tbar) ** 2)
    return sel, coeffs


# ---------------------------------------------------------------------------
# Gaussian-tail fits
# ---------------------------------------------------------------------------

@dataclass
class TailFit:
    """Empirical log-survival curve with its exp(-c lambda^2) fit."""

    lambdas: np.ndarray
    log_survival: np.ndarray
    c: float
    r_squared: float
    fit_mask: np.ndarray = field(repr=False, default=None)


def tail_estimate(samples: Sequence[float], lambdas: Sequence[float]) -> TailFit:
    """Fit log P(X > lambda) = a - c lambda^2 over the central quantile range.

    Only thresholds between the 0.5 and 0.95 sample quantiles (with nonzero
    empirical survival) enter the least-squares fit; larger lambdas report
    survival 0 and are excluded.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 100:
        raise ValueError(f"need at least 100 samples, got {x.size}")
    if np.max(x) == np.min(x):
        raise ValueError("degenerate distribution: all samples equal")
    lam = np.asarray(lambdas, dtype=float)
    survival = np.array([(x > l).mean() for l in lam])
    with np.errstate(divide="ignore"):
        log_surv = np.log(survival)

    qlo, qhi = np.quantile(x, [0.5, 0.95])
    fit_mask = (lam >= qlo) & (lam <= qhi) & (survival > 0)
    if fit_mask.sum() < 3:
        raise ValueError("fewer than 3 usable thresholds in the central quantile range")
    xs = lam[fit_mask] ** 2
    ys = log_surv[fit_mask]
    design = np.vstack([np.ones_like(xs), -xs]).T
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    yhat = design @ coef
    ss_res = float(np.sum((ys - yhat) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return TailFit(lambdas=lam, log_survival=log_surv, c=float(coef[1]),
                   r_squared=r2, fit_mask=fit_mask)
