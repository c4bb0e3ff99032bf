"""Hartree nonlinearity, exponential Duhamel time stepping, and trajectories.

One step of size h applies the exact free propagator and corrects with the
Duhamel integral of the nonlinearity by trapezoidal quadrature;

    u+  = S(h) u      - (h/2) Q(h) N(u(t))
    ut+ = [S(h) u]_t  - (h/2) [cos(h|D|) N(u(t)) + N(u_end)]

where the endpoint argument u_end starts from the linearly propagated state
and is refreshed once from the corrected position (further corrector sweeps
are idempotent because N depends on the position only and the position
correction itself involves just the left endpoint, Q(0) = 0).  The noise
increment, sampled from its exact conditional law, is appended after the
deterministic substep; the residual formulation advances (v, Psi) with the
identical endpoint convention, so both formulations produce the same u on the
same noise path up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import diagnostics as diag
from .linwave import WaveState
from .spectral import (
    FOURIER,
    PHYSICAL,
    Field,
    SpectralGrid,
    bessel_derivative_multiplier,
    hartree_potential_multiplier,
    lp_mother_profile,
    make_grid,
    transform,
    _validate_dyadic,
)
from .stochastic import (
    NoiseModel,
    RandomizationSpec,
    RngStream,
    bracket_power_noise,
    flat_band_noise,
    increment_factors,
    wiener_randomize,
    zero_noise,
)

FORMULATIONS = ("full_u", "residual_v")
NOISE_PROFILES = ("none", "flat", "bracket_power")
INITIAL_DATA_KINDS = ("zero", "file", "randomized")


class IntegrationFailure(RuntimeError):
    """Non-finite field values encountered; carries the time reached."""

    def __init__(self, time_reached: float, record: "TrajectoryRecord | None" = None):
        super().__init__(f"integration failed at t = {time_reached:.6g} (non-finite field values)")
        self.time_reached = time_reached
        self.record = record


@dataclass(frozen=True)
class NoiseSpec:
    profile: str = "none"
    amplitude: float = 0.0
    exponent: float = 0.0
    cutoff: float = 0.0

    def __post_init__(self) -> None:
        if self.profile not in NOISE_PROFILES:
            raise ValueError(f"noise.profile must be one of {NOISE_PROFILES}, got {self.profile!r}")

    def build(self, grid: SpectralGrid, master_seed: int = 0) -> NoiseModel:
        if self.profile == "none" or self.amplitude == 0.0:
            return zero_noise(grid)
        if self.profile == "flat":
            return flat_band_noise(grid, self.amplitude, self.cutoff, master_seed)
        return bracket_power_noise(grid, self.amplitude, self.exponent, self.cutoff, master_seed)


@dataclass(frozen=True)
class InitialDataSpec:
    kind: str = "zero"
    u0_path: Optional[str] = None
    u1_path: Optional[str] = None
    window: str = "raised_cosine"
    law: str = "gaussian"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in INITIAL_DATA_KINDS:
            raise ValueError(f"initial_data.kind must be one of {INITIAL_DATA_KINDS}, got {self.kind!r}")
        if self.kind in ("file", "randomized") and not (self.u0_path and self.u1_path):
            raise ValueError(f"initial_data.kind={self.kind!r} needs u0_path and u1_path")


@dataclass(frozen=True)
class SimConfig:
    """Validated simulation parameters (see config.parse_config for the JSON form)."""

    d: int
    M: int
    L: float
    gamma: float
    mu: float
    dt: float
    t_final: float
    sample_every: int = 1
    truncation_N: Optional[float] = None
    picard_iterations: int = 2
    dealias: bool = False
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    initial_data: InitialDataSpec = field(default_factory=InitialDataSpec)
    formulation: str = "full_u"
    blowup_threshold: float = 1.0e4
    trajectories: int = 1
    master_seed: int = 0
    snapshot_times: tuple = ()

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < self.d:
            raise ValueError(f"potential exponent out of range: gamma={self.gamma} with d={self.d}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_final < self.dt:
            raise ValueError(f"t_final must be at least dt, got t_final={self.t_final}, dt={self.dt}")
        if self.sample_every < 1:
            raise ValueError(f"sample_every must be >= 1, got {self.sample_every}")
        if self.picard_iterations < 1:
            raise ValueError(f"picard_iterations must be >= 1, got {self.picard_iterations}")
        if self.truncation_N is not None:
            _validate_dyadic(self.truncation_N)
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}, got {self.formulation!r}")
        if not self.blowup_threshold > 0:
            raise ValueError(f"blowup_threshold must be positive, got {self.blowup_threshold}")
        if self.trajectories < 1:
            raise ValueError(f"trajectories must be >= 1, got {self.trajectories}")
        steps = self.t_final / self.dt
        if abs(steps - round(steps)) > 1e-6:
            raise ValueError(f"t_final must be an integer number of steps, got t_final/dt={steps}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def grid(self) -> SpectralGrid:
        return make_grid(self.d, self.M, self.L)


# ---------------------------------------------------------------------------
# Hartree nonlinearity
# ---------------------------------------------------------------------------

def _dealias_mask(grid: SpectralGrid) -> np.ndarray:
    k_int = np.fft.fftfreq(grid.M, d=1.0 / grid.M)
    keep = np.abs(k_int) <= grid.M / 3.0
    mask = np.ones(grid.shape, dtype=bool)
    for a in range(grid.d):
        shape_a = [1] * grid.d
        shape_a[a] = grid.M
        mask &= keep.reshape(shape_a)
    return mask


def _lp_leq_values(grid: SpectralGrid, N: float) -> np.ndarray:
    return lp_mother_profile(grid.xi_norm / float(N))


def hartree_nonlinearity(u: Field, gamma: float, mu: float,
                         truncation: Optional[float] = None,
                         dealias: bool = False) -> Field:
    """N(u) = mu (|x|^{-gamma} * u^2) u, with optional cutoff and dealiasing."""
    if not u.reality_flag:
        raise ValueError("hartree_nonlinearity requires a real field")
    grid = u.grid
    if mu == 0.0:
        return Field(grid=grid, values=np.zeros(grid.shape), representation=PHYSICAL, reality_flag=True)
    sim = Simulator(grid, gamma, mu, dt=1.0, picard_iterations=1,
                    truncation_N=truncation, dealias=dealias, noise=None)
    p = transform(u, FOURIER).values
    nhat = sim.nonlinearity_hat(p)
    out = Field(grid=grid, values=nhat, representation=FOURIER, reality_flag=True)
    return transform(out, PHYSICAL)


# ---------------------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------------------

class Simulator:
    """Precomputed per-grid, per-step multiplier tables and the step kernels."""

    def __init__(self, grid: SpectralGrid, gamma: float, mu: float, dt: float,
                 picard_iterations: int, truncation_N: Optional[float],
                 dealias: bool, noise: Optional[NoiseModel]) -> None:
        self.grid = grid
        self.mu = mu
        self.dt = dt
        self.picard = max(int(picard_iterations), 1)
        omega = grid.xi_norm
        self.cos_h = np.cos(dt * omega)
        self.q_h = dt * np.sinc(omega * (dt / np.pi))          # sin(h w)/w with the h limit at 0
        self.wsin_h = -omega * np.sin(dt * omega)
        self.riesz_vals = (hartree_potential_multiplier(grid, gamma, mu).values(grid).real
                           if mu != 0.0 else None)
        self.lp_vals = _lp_leq_values(grid, truncation_N) if truncation_N is not None else None
        self.dealias_mask = _dealias_mask(grid) if dealias else None
        self.noise = noise if (noise is not None and not noise.is_zero()) else None
        if self.noise is not None:
            fa, fb1, fb2 = increment_factors(grid, dt)
            sigma = self.noise.sigma if self.lp_vals is None else self.noise.sigma * self.lp_vals
            self.noise_fa = sigma * fa
            self.noise_fb1 = sigma * fb1
            self.noise_fb2 = sigma * fb2
        self._scale = grid.fourier_scale

    def nonlinearity_hat(self, p_hat: np.ndarray) -> np.ndarray:
        """Fourier coefficients of mu (V * u^2) u from position coefficients."""
        if self.riesz_vals is None:
            return np.zeros(self.grid.shape, dtype=np.complex128)
        if self.dealias_mask is not None:
            p_hat = p_hat * self.dealias_mask
        u = (np.fft.ifftn(p_hat) / self._scale).real
        what = np.fft.fftn(u * u) * self._scale
        if self.dealias_mask is not None:
            what = what * self.dealias_mask
        vw = (np.fft.ifftn(self.riesz_vals * what) / self._scale).real
        nhat = np.fft.fftn(vw * u) * self._scale
        if self.lp_vals is not None:
            nhat = nhat * self.lp_vals
        return nhat

    def _deterministic_step(self, p: np.ndarray, q: np.ndarray):
        h = self.dt
        n0 = self.nonlinearity_hat(p)
        p_lin = self.cos_h * p + self.q_h * q
        q_lin = self.wsin_h * p + self.cos_h * q
        if self.riesz_vals is None:
            return p_lin, q_lin
        p_new = p_lin - 0.5 * h * self.q_h * n0
        endpoint = p_lin if self.picard == 1 else p_new
        n_end = self.nonlinearity_hat(endpoint)
        q_new = q_lin - 0.5 * h * (self.cos_h * n0 + n_end)
        return p_new, q_new

    def _noise_increment(self, rng: np.random.Generator):
        z1 = self.noise.sample_unit_noise(rng)
        z2 = self.noise.sample_unit_noise(rng)
        return self.noise_fa * z1, self.noise_fb1 * z1 + self.noise_fb2 * z2

    def step_full(self, p, q, rng):
        p_new, q_new = self._deterministic_step(p, q)
        if self.noise is not None:
            du, dv = self._noise_increment(rng)
            p_new = p_new + du
            q_new = q_new + dv
        return p_new, q_new


def step(state: WaveState, psi_state: Optional[WaveState], cfg: SimConfig,
         rng: np.random.Generator) -> tuple[WaveState, Optional[WaveState]]:
    """One integrator step of the configured system (public, allocation-heavy)."""
    grid = state.grid
    noise = cfg.noise.build(grid, cfg.master_seed)
    sim = Simulator(grid, cfg.gamma, cfg.mu, cfg.dt, cfg.picard_iterations,
                    cfg.truncation_N, cfg.dealias, noise)
    if cfg.formulation == "residual_v":
        if psi_state is None:
            raise ValueError("residual_v stepping needs the stochastic-convolution state")
        pv = transform(state.u, FOURIER).values
        qv = transform(state.ut, FOURIER).values
        pp = transform(psi_state.u, FOURIER).values
        qp = transform(psi_state.ut, FOURIER).values
        pv, qv, pp, qp = _residual_step_exact(sim, pv, qv, pp, qp, rng)
        t_new = state.t + cfg.dt
        return (_wrap_state(grid, pv, qv, t_new), _wrap_state(grid, pp, qp, t_new))
    p = transform(state.u, FOURIER).values
    q = transform(state.ut, FOURIER).values
    p, q = sim.step_full(p, q, rng)
    if not np.all(np.isfinite(p)) or not np.all(np.isfinite(q)):
        raise IntegrationFailure(state.t + cfg.dt)
    return _wrap_state(grid, p, q, state.t + cfg.dt), psi_state


def _residual_step_exact(sim: Simulator, pv, qv, pp, qp, rng):
    """Advance (v, Psi) jointly; identical quadrature endpoints as step_full.

    The quadrature endpoint sees Psi moved linearly, before the fresh
    increment, so full_u and residual_v produce the same u on the same noise
    path up to rounding.
    """
    h = sim.dt
    pp_lin = sim.cos_h * pp + sim.q_h * qp
    qp_lin = sim.wsin_h * pp + sim.cos_h * qp
    n0 = sim.nonlinearity_hat(pv + pp)
    pv_lin = sim.cos_h * pv + sim.q_h * qv
    qv_lin = sim.wsin_h * pv + sim.cos_h * qv
    if sim.riesz_vals is None:
        pv_new, qv_new = pv_lin, qv_lin
    else:
        pv_new = pv_lin - 0.5 * h * sim.q_h * n0
        endpoint = (pv_lin if sim.picard == 1 else pv_new) + pp_lin
        n_end = sim.nonlinearity_hat(endpoint)
        qv_new = qv_lin - 0.5 * h * (sim.cos_h * n0 + n_end)
    if sim.noise is not None:
        du, dv = sim._noise_increment(rng)
        pp_lin = pp_lin + du
        qp_lin = qp_lin + dv
    return pv_new, qv_new, pp_lin, qp_lin


def _wrap_state(grid: SpectralGrid, p: np.ndarray, q: np.ndarray, t: float) -> WaveState:
    return WaveState(
        u=Field(grid=grid, values=p, representation=FOURIER, reality_flag=True),
        ut=Field(grid=grid, values=q, representation=FOURIER, reality_flag=True),
        t=t,
    )


def residual_split(u: WaveState, psi: WaveState) -> WaveState:
    """v = u - Psi, componentwise; grids and times must match."""
    if u.grid != psi.grid:
        raise ValueError("states live on different grids")
    if u.t != psi.t:
        raise ValueError(f"states are at different times: {u.t} vs {psi.t}")
    pu = transform(u.u, FOURIER).values
    qu = transform(u.ut, FOURIER).values
    pp = transform(psi.u, FOURIER).values
    qp = transform(psi.ut, FOURIER).values
    return _wrap_state(u.grid, pu - pp, qu - qp, u.t)


# ---------------------------------------------------------------------------
# Blow-up monitor
# ---------------------------------------------------------------------------

@dataclass
class BlowupMonitor:
    """Running Strichartz-type accumulator with a finite trip threshold.

    Accumulates the time integral of |v(t)|^3_{L^r} by left-endpoint
    quadrature between samples; the monitor value is its cube root and the
    monitor trips the first time that value exceeds the threshold.
    """

    threshold: float
    integral: float = 0.0
    tripped_at: Optional[float] = None
    _last_t: Optional[float] = None
    _last_norm: float = 0.0

    @property
    def x_norm(self) -> float:
        return self.integral ** (1.0 / 3.0)

    @property
    def tripped(self) -> bool:
        return self.tripped_at is not None

    def update(self, t: float, lr_norm: float) -> None:
        if self._last_t is not None:
            if t < self._last_t:
                raise ValueError("monitor updates must move forward in time")
            self.integral += (self._last_norm ** 3) * (t - self._last_t)
        self._last_t = t
        self._last_norm = lr_norm
        if not self.tripped and self.x_norm > self.threshold:
            self.tripped_at = t


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

@dataclass
class TrajectoryRecord:
    trajectory_index: int
    status: str
    rows: list
    rows_v: Optional[list] = None
    rows_psi: Optional[list] = None
    tripped_at: Optional[float] = None
    snapshots: list = field(default_factory=list)


class _SeriesDiagnostics:
    """Per-sample record builder with running space-time accumulators."""

    def __init__(self, grid: SpectralGrid, gamma: float, mu: float):
        self.grid = grid
        self.gamma = gamma
        self.mu = mu
        self.lr = diag.lr_exponent(grid.d)
        self.track_yz = grid.d == 5
        if self.track_yz:
            self._bracket = bessel_derivative_multiplier(diag.HS_PROBE_EXPONENT).values(grid).real
        self._last_t = None
        self._int_y = 0.0        # trapezoid of |f|^10_{10/3}
        self._int_z = 0.0        # trapezoid of |f|^6_{30/7}
        self._last_y_val = 0.0
        self._last_z_val = 0.0
        self._max_smooth_l5 = 0.0
        self._max_l10_3 = 0.0
        self._max_l5 = 0.0

    def row(self, t: float, state: WaveState, x_accum: float, status: str) -> diag.DiagnosticsRecord:
        grid = self.grid
        p = transform(state.u, FOURIER).values
        q = transform(state.ut, FOURIER).values
        u_phys = (np.fft.ifftn(p) / grid.fourier_scale).real
        vol = grid.cell_volume

        e = diag.energy(state, self.gamma, self.mu)
        l2 = math.sqrt(float(np.sum(np.abs(p) ** 2)))
        h1 = math.sqrt(float(np.sum((1.0 + grid.xi_sq) * np.abs(p) ** 2)))
        hs = math.sqrt(float(np.sum((1.0 + grid.xi_sq) ** diag.HS_PROBE_EXPONENT * np.abs(p) ** 2)))
        if self.lr is None:
            lr_val = float("nan")
        else:
            lr_val = float(np.sum(np.abs(u_phys) ** self.lr) * vol) ** (1.0 / self.lr)
        zero_mode = float(np.mean(u_phys))

        y_probe = z_probe = float("nan")
        if self.track_yz:
            l10_3 = float(np.sum(np.abs(u_phys) ** (10.0 / 3.0)) * vol) ** 0.3
            l30_7 = float(np.sum(np.abs(u_phys) ** (30.0 / 7.0)) * vol) ** (7.0 / 30.0)
            l5 = float(np.sum(np.abs(u_phys) ** 5) * vol) ** 0.2
            smooth = (np.fft.ifftn(self._bracket * p) / grid.fourier_scale).real
            smooth_l5 = float(np.sum(np.abs(smooth) ** 5) * vol) ** 0.2
            y_val = l10_3 ** 10
            z_val = l30_7 ** 6
            if self._last_t is not None:
                dt = t - self._last_t
                self._int_y += 0.5 * (self._last_y_val + y_val) * dt
                self._int_z += 0.5 * (self._last_z_val + z_val) * dt
            self._last_y_val, self._last_z_val = y_val, z_val
            self._max_smooth_l5 = max(self._max_smooth_l5, smooth_l5)
            self._max_l10_3 = max(self._max_l10_3, l10_3)
            self._max_l5 = max(self._max_l5, l5)
            y_probe = self._int_y + self._max_smooth_l5
            z_probe = self._int_z + self._max_l10_3 ** 10 + self._max_l5 ** 2
        self._last_t = t

        return diag.DiagnosticsRecord(
            t=t, E_total=e.total, E_kinetic=e.kinetic, E_gradient=e.gradient,
            E_potential=e.potential, L2=l2, H1_inhom=h1, Hs_probe=hs,
            Lr_space=lr_val, X_accum=x_accum, Y_probe=y_probe, Z_probe=z_probe,
            zero_mode_u=zero_mode, status=status)


def load_initial_state(cfg: SimConfig, grid: SpectralGrid, trajectory_index: int) -> WaveState:
    """Initial (u0, u1) per the config; file paths resolve relative to cwd."""
    from .snapshots import read_field, read_state
    from .spectral import zero_field

    spec = cfg.initial_data
    if spec.kind == "zero":
        return WaveState(u=zero_field(grid), ut=zero_field(grid), t=0.0)
    if spec.u0_path == spec.u1_path:
        u0, u1 = read_state(spec.u0_path)  # combined wave-state file
    else:
        u0 = read_field(spec.u0_path)
        u1 = read_field(spec.u1_path)
    if u0.grid != grid or u1.grid != grid:
        raise ValueError("initial data grid does not match the configured grid")
    if spec.kind == "randomized":
        rspec = RandomizationSpec(window=spec.window, law=spec.law, seed=spec.seed)
        rng = RngStream(spec.seed, trajectory_index, "randomization").generator()
        u0, u1 = wiener_randomize(u0, u1, rspec, rng)
    return WaveState(u=u0, ut=u1, t=0.0)


def run_trajectory(cfg: SimConfig, trajectory_index: int,
                   initial_state: Optional[WaveState] = None) -> TrajectoryRecord:
    """Integrate one trajectory from 0 to t_final, emitting sampled diagnostics.

    ``initial_state`` overrides the configured initial data (used by tests and
    embedding code); the X-norm monitor watches u in the full formulation and
    the residual v otherwise, and stops integration with status "blowup" when
    it trips.
    """
    grid = cfg.grid()
    noise = cfg.noise.build(grid, cfg.master_seed)
    sim = Simulator(grid, cfg.gamma, cfg.mu, cfg.dt, cfg.picard_iterations,
                    cfg.truncation_N, cfg.dealias, noise)
    rng = RngStream(cfg.master_seed, trajectory_index, "noise").generator()

    state0 = initial_state if initial_state is not None else load_initial_state(cfg, grid, trajectory_index)
    if cfg.truncation_N is not None:
        # truncated system: data, nonlinearity, and noise all live under P_<=N
        lp = _lp_leq_values(grid, cfg.truncation_N)
        p0 = transform(state0.u, FOURIER).values * lp
        q0 = transform(state0.ut, FOURIER).values * lp
        state0 = _wrap_state(grid, p0, q0, 0.0)

    residual = cfg.formulation == "residual_v"
    if residual:
        pv = np.zeros(grid.shape, dtype=np.complex128)
        qv = np.zeros(grid.shape, dtype=np.complex128)
        pp = transform(state0.u, FOURIER).values.copy()
        qp = transform(state0.ut, FOURIER).values.copy()
    else:
        p = transform(state0.u, FOURIER).values.copy()
        q = transform(state0.ut, FOURIER).values.copy()

    monitor = BlowupMonitor(threshold=cfg.blowup_threshold)
    series_u = _SeriesDiagnostics(grid, cfg.gamma, cfg.mu)
    series_v = _SeriesDiagnostics(grid, cfg.gamma, cfg.mu) if residual else None
    series_psi = _SeriesDiagnostics(grid, cfg.gamma, cfg.mu) if residual else None

    rows: list = []
    rows_v: list = [] if residual else None
    rows_psi: list = [] if residual else None
    snapshots: list = []
    snap_steps = {int(round(ts / cfg.dt)) for ts in cfg.snapshot_times}
    lr = diag.lr_exponent(grid.d)

    def sample(step_index: int, status: str) -> bool:
        t = step_index * cfg.dt
        if residual:
            pu, qu = pv + pp, qv + qp
        else:
            pu, qu = p, q
        if not (np.all(np.isfinite(pu)) and np.all(np.isfinite(qu))):
            raise IntegrationFailure(t, TrajectoryRecord(
                trajectory_index=trajectory_index, status="failed", rows=rows,
                rows_v=rows_v, rows_psi=rows_psi, tripped_at=monitor.tripped_at,
                snapshots=snapshots))
        state_u = _wrap_state(grid, pu, qu, t)
        if lr is not None:
            mon_state = _wrap_state(grid, pv, qv, t) if residual else state_u
            mon_field = transform(mon_state.u, PHYSICAL)
            mon_norm = float(np.sum(np.abs(mon_field.real_values) ** lr) * grid.cell_volume) ** (1.0 / lr)
            monitor.update(t, mon_norm)
        rows.append(series_u.row(t, state_u, monitor.x_norm, status))
        if residual:
            rows_v.append(series_v.row(t, _wrap_state(grid, pv, qv, t), monitor.x_norm, status))
            rows_psi.append(series_psi.row(t, _wrap_state(grid, pp, qp, t), monitor.x_norm, status))
        if step_index in snap_steps:
            snapshots.append((t, WaveState(u=transform(state_u.u, PHYSICAL),
                                           ut=transform(state_u.ut, PHYSICAL), t=t)))
        return monitor.tripped

    sample(0, "ok")
    status = "completed"
    tripped = False
    for n in range(1, cfg.n_steps + 1):
        if residual:
            pv, qv, pp, qp = _residual_step_exact(sim, pv, qv, pp, qp, rng)
        else:
            p, q = sim.step_full(p, q, rng)
        if n % cfg.sample_every == 0 or n == cfg.n_steps or n in snap_steps:
            is_last = (n == cfg.n_steps)
            tripped = sample(n, "ok" if not is_last else "completed")
            if tripped:
                status = "blowup"
                break
    if tripped:
        rows[-1].status = "blowup"
        if residual:
            rows_v[-1].status = "blowup"
            rows_psi[-1].status = "blowup"
    else:
        rows[-1].status = "completed"
        if residual:
            rows_v[-1].status = "completed"
            rows_psi[-1].status = "completed"

    return TrajectoryRecord(trajectory_index=trajectory_index, status=status,
                            rows=rows, rows_v=rows_v, rows_psi=rows_psi,
                            tripped_at=monitor.tripped_at, snapshots=snapshots)
