"""Built-in invariant suites behind `shnw verify`.

Each check returns (ok, detail).  The quick level runs the exact algebraic
identities in seconds; the full level adds short dynamics and Monte Carlo
checks.  These mirror the pytest suite at reduced scale so a fresh install
can be validated without the test dependencies.
"""

from __future__ import annotations

import math

import numpy as np

from . import diagnostics as diag
from .dynamics import BlowupMonitor, NoiseSpec, SimConfig, run_trajectory
from .linwave import WaveState, apply_Stilde, linear_energy, propagate
from .snapshots import read_state, write_state
from .spectral import (
    FOURIER,
    PHYSICAL,
    Field,
    apply_multiplier,
    bessel_derivative_multiplier,
    fractional_derivative_multiplier,
    field_from_physical,
    hartree_potential_multiplier,
    lebesgue_norm,
    lp_project,
    make_grid,
    random_real_field,
    riesz_convolve,
    transform,
)
from .stochastic import (
    RngStream,
    covariance_abc,
    flat_band_noise,
    hs_norm,
    step_covariance,
    wiener_randomize,
    window_partition_residual,
    RandomizationSpec,
)


def _random_state(grid, rng, amplitude=1.0) -> WaveState:
    return WaveState(u=random_real_field(grid, rng, amplitude=amplitude),
                     ut=random_real_field(grid, rng, amplitude=amplitude), t=0.0)


def check_transform_roundtrip() -> tuple[bool, str]:
    worst = 0.0
    rng = np.random.default_rng(11)
    for d, M in [(1, 64), (2, 16), (3, 8)]:
        grid = make_grid(d, M, 2 * np.pi)
        for _ in range(20):
            f = field_from_physical(grid, rng.standard_normal(grid.shape))
            g = transform(transform(f, FOURIER), PHYSICAL)
            worst = max(worst, float(np.max(np.abs(g.values - f.values))))
            parseval = abs(lebesgue_norm(f, 2.0) - math.sqrt(float(np.sum(np.abs(transform(f, FOURIER).values) ** 2))))
            worst = max(worst, parseval)
    return worst < 1e-12, f"max round-trip/Parseval defect {worst:.2e}"


def check_littlewood_paley() -> tuple[bool, str]:
    rng = np.random.default_rng(12)
    grid = make_grid(2, 32, 2 * np.pi)
    f = field_from_physical(grid, rng.standard_normal(grid.shape))
    fhat = transform(f, FOURIER).values
    low = lp_project(f, "leq", 4).values
    high = lp_project(f, "gt", 4).values
    resolution = float(np.max(np.abs(low + high - fhat)))
    telescoped = sum(lp_project(f, "dyadic", 2.0**j).values for j in range(0, 4))
    target = lp_project(f, "leq", 8).values - lp_project(f, "leq", 0.5).values
    telescope = float(np.max(np.abs(telescoped - target)))
    worst = max(resolution, telescope)
    return worst < 1e-12, f"resolution/telescoping defect {worst:.2e}"


def check_multiplier_composition() -> tuple[bool, str]:
    rng = np.random.default_rng(13)
    grid = make_grid(2, 16, 2 * np.pi)
    f = field_from_physical(grid, rng.standard_normal(grid.shape))
    m1 = fractional_derivative_multiplier(0.5)
    m2 = bessel_derivative_multiplier(-1.0)
    once = apply_multiplier(apply_multiplier(f, m1), m2).values
    combined = transform(f, FOURIER).values * m1.values(grid) * m2.values(grid)
    worst = float(np.max(np.abs(once - combined)))
    return worst < 1e-12, f"composition defect {worst:.2e}"


def _direct_idft(grid, fourier_lattice):
    axes_mats = []
    k_int = np.fft.fftfreq(grid.M, d=1.0 / grid.M)
    j = np.arange(grid.M)
    W = np.exp(2j * np.pi * np.outer(j, k_int) / grid.M) / grid.M
    out = fourier_lattice
    for axis in range(grid.d):
        out = np.tensordot(W, out, axes=([1], [axis]))
        out = np.moveaxis(out, 0, axis)
    return out


def check_riesz_identity() -> tuple[bool, str]:
    rng = np.random.default_rng(14)
    worst = 0.0
    for d, M, gamma in [(1, 32, 0.5), (2, 8, 1.0), (3, 8, 1.0)]:
        grid = make_grid(d, M, 2 * np.pi)
        f = random_real_field(grid, rng, kmax=M // 2, decay=0.1)
        via_fft = riesz_convolve(f, gamma, 1.0).real_values
        m_vals = hartree_potential_multiplier(grid, gamma, 1.0).values(grid)
        kernel = (_direct_idft(grid, m_vals) / grid.cell_volume).real
        direct = np.zeros(grid.shape)
        fv = f.real_values
        for shift in np.ndindex(grid.shape):
            direct += kernel[shift] * np.roll(fv, shift, axis=tuple(range(d))) * grid.cell_volume
        worst = max(worst, float(np.max(np.abs(via_fft - direct))))
    return worst < 1e-10, f"multiplier vs direct-sum defect {worst:.2e}"


def check_propagator() -> tuple[bool, str]:
    rng = np.random.default_rng(15)
    grid = make_grid(2, 16, 2 * np.pi)
    worst = 0.0
    for _ in range(100):
        s = _random_state(grid, rng)
        t1, t2 = rng.uniform(0.1, 2.0, size=2)
        ab = propagate(propagate(s, t1), t2)
        once = propagate(s, t1 + t2)
        worst = max(worst, float(np.max(np.abs(transform(ab.u, FOURIER).values - transform(once.u, FOURIER).values))))
        back = propagate(propagate(s, t1), -t1)
        worst = max(worst, float(np.max(np.abs(transform(back.u, FOURIER).values - transform(s.u, FOURIER).values))))
        e0, e1 = linear_energy(s), linear_energy(propagate(s, t1))
        worst = max(worst, abs(e1 - e0) / max(e0, 1.0))
        tilde = apply_Stilde(s, t1)
        vel = transform(propagate(s, t1).ut, FOURIER).values
        bracket = np.sqrt(1.0 + grid.xi_sq)
        worst = max(worst, float(np.max(np.abs(bracket * tilde.values - vel))))
    return worst < 1e-12, f"group law/reversal/energy/Stilde defect {worst:.2e}"


def check_step_covariance() -> tuple[bool, str]:
    worst = 0.0
    for theta in [1e-6, 1e-4, 1e-2, 0.029, 0.031, 1.0, 30.0]:
        for h in (0.1, 1.0):
            om = theta / h
            cov = step_covariance(om, h)
            if cov.c**2 > cov.a * cov.b * (1 + 1e-12):
                return False, f"Cauchy-Schwarz violated at theta={theta}"
            # Markov composition: two half steps equal one step per mode
            a2, b2, c2 = covariance_abc(np.asarray([om]), h / 2)
            th = om * h / 2
            R = np.array([[math.cos(th), (h / 2) * np.sinc(th / np.pi)],
                          [-om * math.sin(th), math.cos(th)]])
            C = np.array([[a2[0], c2[0]], [c2[0], b2[0]]])
            comp = R @ C @ R.T + C
            direct = np.array([[cov.a, cov.c], [cov.c, cov.b]])
            worst = max(worst, float(np.max(np.abs(comp - direct))) / max(cov.b, 1e-30))
    return worst < 1e-12, f"composition defect {worst:.2e}"


def check_randomization_identities() -> tuple[bool, str]:
    from .stochastic import cube_box_halfwidth, window_multiplier_from_coefficients

    rng = np.random.default_rng(16)
    worst = 0.0
    for d, M, L in [(1, 32, 2 * np.pi), (2, 16, 4 * np.pi)]:
        grid = make_grid(d, M, L)
        worst = max(worst, window_partition_residual(grid))
        f = random_real_field(grid, rng, kmax=M // 4)
        nmax = cube_box_halfwidth(grid)
        ones = np.ones((2 * nmax + 1,) * d, dtype=complex)
        G = window_multiplier_from_coefficients(grid, ones)
        fhat = transform(f, FOURIER).values
        recon = transform(Field(grid=grid, values=G * fhat, representation=FOURIER, reality_flag=True), PHYSICAL)
        worst = max(worst, float(np.max(np.abs(recon.values - f.values))))
        spec = RandomizationSpec(seed=5)
        r0, r1 = wiener_randomize(f, f, spec, RngStream(5, 0, "randomization").generator())
        worst = max(worst, float(np.max(np.abs(r0.values.imag))))
    return worst < 1e-12, f"partition/all-ones/reality defect {worst:.2e}"


def check_snapshot_roundtrip(tmp_dir) -> tuple[bool, str]:
    import tempfile
    from pathlib import Path

    rng = np.random.default_rng(17)
    grid = make_grid(2, 8, 2 * np.pi)
    s = _random_state(grid, rng)
    with tempfile.TemporaryDirectory(dir=tmp_dir) as td:
        path = Path(td) / "state.shnw"
        write_state(path, transform(s.u, PHYSICAL), transform(s.ut, PHYSICAL))
        u, ut = read_state(path)
    worst = float(np.max(np.abs(u.values - transform(s.u, PHYSICAL).values)))
    worst = max(worst, float(np.max(np.abs(ut.values - transform(s.ut, PHYSICAL).values))))
    return worst == 0.0, f"snapshot defect {worst:.2e}"


def check_blowup_monitor() -> tuple[bool, str]:
    # unit norms: the left-endpoint integral after the update at step i is
    # i*dt, so the (6.5 dt)^{1/3} threshold first trips at step 7
    dt = 0.5
    mon = BlowupMonitor(threshold=(6.5 * dt) ** (1.0 / 3.0))
    for i in range(10):
        mon.update(i * dt, 1.0)
        if mon.tripped:
            break
    ok = mon.tripped and mon.tripped_at == 7 * dt
    return ok, f"tripped_at={mon.tripped_at}"


def check_energy_conservation() -> tuple[bool, str]:
    rng = np.random.default_rng(18)
    grid = make_grid(1, 32, 2 * np.pi)
    state = WaveState(u=random_real_field(grid, rng, kmax=6, amplitude=0.4),
                      ut=random_real_field(grid, rng, kmax=6, amplitude=0.4), t=0.0)
    cfg = SimConfig(d=1, M=32, L=2 * np.pi, gamma=0.5, mu=1.0, dt=1e-3, t_final=0.25,
                    sample_every=50)
    record = run_trajectory(cfg, 0, initial_state=state)
    e = np.array([r.E_total for r in record.rows])
    drift = float(np.max(np.abs(e - e[0])) / abs(e[0]))
    return drift < 1e-6, f"relative drift {drift:.2e}"


def check_linear_drift() -> tuple[bool, str]:
    cfg = SimConfig(d=2, M=8, L=2 * np.pi, gamma=1.0, mu=0.0, dt=2e-3, t_final=0.5,
                    sample_every=25, noise=NoiseSpec(profile="flat", amplitude=0.7, cutoff=2.0),
                    trajectories=64, master_seed=77)
    records = [run_trajectory(cfg, k) for k in range(cfg.trajectories)]
    summary = diag.build_summary([r.rows for r in records])
    from .analysis import drift_window, ensemble_analysis

    out = ensemble_analysis(summary, cfg)
    slope = out["energy_slope"]
    target = out["hs_reference"]
    sel, coeffs = diag.ito_drift_functional(summary.times, summary.stderr("E_total"),
                                            drift_window(summary.times))
    per_traj = np.array([float(np.sum(coeffs * np.array([row.E_total for row in r.rows])[sel]))
                         for r in records])
    se = per_traj.std(ddof=1) / math.sqrt(len(per_traj))
    ok = abs(slope - target) <= 3 * se
    return ok, f"slope {slope:.4f} vs target {target:.4f} (3se = {3 * se:.4f})"


def check_formulation_agreement() -> tuple[bool, str]:
    rng = np.random.default_rng(19)
    grid = make_grid(2, 16, 2 * np.pi)
    state = WaveState(u=random_real_field(grid, rng, kmax=4, amplitude=0.3),
                      ut=random_real_field(grid, rng, kmax=4, amplitude=0.3), t=0.0)
    base = dict(d=2, M=16, L=2 * np.pi, gamma=1.0, mu=1.0, dt=1e-3, t_final=0.1,
                sample_every=100, noise=NoiseSpec(profile="flat", amplitude=0.5, cutoff=2.0),
                master_seed=5)
    rec_full = run_trajectory(SimConfig(formulation="full_u", **base), 0, initial_state=state)
    rec_res = run_trajectory(SimConfig(formulation="residual_v", **base), 0, initial_state=state)
    eu = np.array([r.E_total for r in rec_full.rows])
    ev = np.array([r.E_total for r in rec_res.rows])
    worst = float(np.max(np.abs(eu - ev)) / max(np.max(np.abs(eu)), 1e-30))
    return worst < 5e-8, f"reconstructed-u energy mismatch {worst:.2e}"


def check_verify_hs_norm() -> tuple[bool, str]:
    grid = make_grid(3, 16, 2 * np.pi)
    noise = flat_band_noise(grid, 1.0, 2.0)
    n_modes = int(np.sum(grid.xi_norm <= 2.0))
    val = hs_norm(noise, 0.0)
    ok = abs(val - math.sqrt(n_modes)) < 1e-12
    return ok, f"hs_norm {val:.6f} vs sqrt({n_modes})"


QUICK_CHECKS = [
    ("transform round trip + Parseval", check_transform_roundtrip),
    ("Littlewood-Paley resolution/telescoping", check_littlewood_paley),
    ("multiplier composition", check_multiplier_composition),
    ("Riesz multiplier vs direct double sum", check_riesz_identity),
    ("free propagator identities", check_propagator),
    ("step covariance + Markov composition", check_step_covariance),
    ("randomization partition/all-ones/reality", check_randomization_identities),
    ("Hilbert-Schmidt norm lattice sum", check_verify_hs_norm),
    ("blow-up monitor thresholding", check_blowup_monitor),
]

FULL_CHECKS = QUICK_CHECKS + [
    ("deterministic energy conservation", check_energy_conservation),
    ("linear Ito energy drift (Monte Carlo)", check_linear_drift),
    ("full_u vs residual_v agreement", check_formulation_agreement),
]


def run_verify(level: str = "quick", tmp_dir: str | None = None) -> tuple[bool, list]:
    if level not in ("quick", "full"):
        raise ValueError(f"verify level must be 'quick' or 'full', got {level!r}")
    checks = list(QUICK_CHECKS if level == "quick" else FULL_CHECKS)
    checks.append(("snapshot round trip", lambda: check_snapshot_roundtrip(tmp_dir)))
    results = []
    all_ok = True
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, ok, detail))
        all_ok &= ok
    return all_ok, results
