"""Reference output generation: a small ensemble plus tail and truncation data.

`shnw verify --out DIR` writes this directory; it contains every file the
figure tool consumes (manifest, trajectory CSVs, summary with fitted values,
tails.csv, truncation.csv).
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from . import store
from .analysis import ensemble_analysis
from .config import build_manifest
from .dynamics import NoiseSpec, SimConfig, run_trajectory
from .linwave import WaveState
from .spectral import FOURIER, make_grid, random_real_field, transform
from .stochastic import RandomizationSpec, RngStream, wiener_randomize


def reference_config(level: str) -> SimConfig:
    trajectories = 32 if level == "quick" else 96
    return SimConfig(d=3, M=16, L=2 * np.pi, gamma=1.0, mu=0.0, dt=2e-3, t_final=0.5,
                     sample_every=10, noise=NoiseSpec(profile="flat", amplitude=1.0, cutoff=2.0),
                     trajectories=trajectories, master_seed=20240901)


def randomized_norm_samples(n_draws: int, seed: int = 314159,
                            n_times: int = 17) -> np.ndarray:
    """Draws of the space-time norm of the randomized free evolution (d = 5).

    Each draw randomizes a fixed band-limited pair, propagates it freely over
    [0, 1], and records the L^3_t L^{30/7}_x norm; the empirical tail of these
    values is the Monte Carlo counterpart of the sub-Gaussian tail bound.
    """
    grid = make_grid(5, 8, 2 * np.pi)
    data_rng = np.random.default_rng(seed)
    u0 = random_real_field(grid, data_rng, kmax=2, decay=0.3, amplitude=1.0)
    u1 = random_real_field(grid, data_rng, kmax=2, decay=0.3, amplitude=1.0)
    spec = RandomizationSpec(law="gaussian", seed=seed)

    times = np.linspace(0.0, 1.0, n_times)
    omega = grid.xi_norm
    q, r = 3.0, 30.0 / 7.0
    samples = np.empty(n_draws)
    for k in range(n_draws):
        rng = RngStream(seed, k, "randomization").generator()
        r0, r1 = wiener_randomize(u0, u1, spec, rng)
        p0 = transform(r0, FOURIER).values
        p1 = transform(r1, FOURIER).values
        space = np.empty(n_times)
        for i, t in enumerate(times):
            coeff = np.cos(t * omega) * p0 + (t * np.sinc(omega * (t / np.pi))) * p1
            phys = (np.fft.ifftn(coeff) / grid.fourier_scale).real
            space[i] = (np.sum(np.abs(phys) ** r) * grid.cell_volume) ** (1.0 / r)
        samples[k] = np.trapezoid(space**q, times) ** (1.0 / q)
    return samples


def truncation_study(levels=(4.0, 8.0, 16.0), seed: int = 271828) -> tuple[list, list]:
    """Sup-in-time H1 x L2 distance between truncated and untruncated runs."""
    d, M = 2, 32
    grid = make_grid(d, M, 2 * np.pi)
    rng = np.random.default_rng(seed)
    state = WaveState(u=random_real_field(grid, rng, kmax=M // 2 - 1, decay=0.25, amplitude=0.8),
                      ut=random_real_field(grid, rng, kmax=M // 2 - 1, decay=0.25, amplitude=0.8),
                      t=0.0)
    base = dict(d=d, M=M, L=2 * np.pi, gamma=1.0, mu=1.0, dt=2e-3, t_final=0.25,
                sample_every=5, master_seed=3)
    snaps_full = _state_series(SimConfig(**base), state)
    errors = []
    for N in levels:
        snaps_trunc = _state_series(SimConfig(truncation_N=N, **base), state)
        worst = 0.0
        for (p_a, q_a), (p_b, q_b) in zip(snaps_full, snaps_trunc):
            dp, dq = p_a - p_b, q_a - q_b
            h1 = float(np.sum(grid.xi_sq * np.abs(dp) ** 2))
            l2 = float(np.sum(np.abs(dq) ** 2))
            worst = max(worst, math.sqrt(h1 + l2))
        errors.append(worst)
    return list(levels), errors


def _state_series(cfg: SimConfig, state: WaveState) -> list:
    from .dynamics import Simulator, _lp_leq_values

    grid = cfg.grid()
    sim = Simulator(grid, cfg.gamma, cfg.mu, cfg.dt, cfg.picard_iterations,
                    cfg.truncation_N, cfg.dealias, None)
    p = transform(state.u, FOURIER).values.copy()
    q = transform(state.ut, FOURIER).values.copy()
    if cfg.truncation_N is not None:
        lp = _lp_leq_values(grid, cfg.truncation_N)
        p, q = p * lp, q * lp
    out = [(p.copy(), q.copy())]
    for n in range(1, cfg.n_steps + 1):
        p, q = sim.step_full(p, q, None)
        if n % cfg.sample_every == 0 or n == cfg.n_steps:
            out.append((p.copy(), q.copy()))
    return out


def make_reference_outputs(out_dir: str | Path, level: str = "quick") -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = reference_config(level)
    manifest = build_manifest(cfg, str(out_dir))
    store.write_manifest(out_dir, manifest)
    records = [run_trajectory(cfg, k) for k in range(cfg.trajectories)]
    for rec in records:
        store.write_trajectory(out_dir, rec)
    summary = diag.build_summary([r.rows for r in records])
    n_draws = 128 if level == "quick" else 512
    tails = randomized_norm_samples(n_draws)
    store.write_tail_samples(out_dir, tails, label="L3t_L30/7x_free_evolution")
    levels, errors = truncation_study()
    store.write_truncation_study(out_dir, levels, errors)
    analysis = ensemble_analysis(summary, cfg, tail_samples=tails)
    store.write_summary(out_dir, summary, analysis)
    return out_dir
