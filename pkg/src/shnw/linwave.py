"""Exact free-wave propagation, mode by mode.

The half-wave group on the lattice acts diagonally in Fourier:

    u(t)  = cos(t|xi|) u0 + sin(t|xi|)/|xi| u1
    ut(t) = -|xi| sin(t|xi|) u0 + cos(t|xi|) u1

The constant mode is the |xi| -> 0 limit, a free particle (u0 + t u1, u1):
on the torus it has no restoring force.  All formulas below use the
sinc form t*sinc(t|xi|), which evaluates the limit exactly at |xi| = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import FOURIER, Field, SpectralGrid, transform


@dataclass(frozen=True)
class WaveState:
    """Pair (u, du/dt) of real fields on one grid at one time."""

    u: Field
    ut: Field
    t: float = 0.0

    def __post_init__(self) -> None:
        if self.u.grid != self.ut.grid:
            raise ValueError("position and velocity live on different grids")
        if not (self.u.reality_flag and self.ut.reality_flag):
            raise ValueError("wave states are real: both components need reality_flag")

    @property
    def grid(self) -> SpectralGrid:
        return self.u.grid


def _sin_over_omega(omega: np.ndarray, t: float) -> np.ndarray:
    # t*sinc(t*omega/pi) = sin(t*omega)/omega with the exact t limit at 0
    return t * np.sinc(omega * (t / np.pi))


def apply_Q(f: Field, t: float) -> Field:
    """Sine propagator sin(t|nabla|)/|nabla|; constant mode is multiplied by t."""
    fhat = transform(f, FOURIER)
    vals = fhat.values * _sin_over_omega(f.grid.xi_norm, t)
    return Field(grid=f.grid, values=vals, representation=FOURIER, reality_flag=f.reality_flag)


def propagate(state: WaveState, t: float) -> WaveState:
    """Advance the free linear flow by time t (exact per mode)."""
    grid = state.grid
    omega = grid.xi_norm
    cos_t = np.cos(t * omega)
    q_t = _sin_over_omega(omega, t)
    p = transform(state.u, FOURIER).values
    q = transform(state.ut, FOURIER).values
    u_new = cos_t * p + q_t * q
    ut_new = -omega * np.sin(t * omega) * p + cos_t * q
    return WaveState(
        u=Field(grid=grid, values=u_new, representation=FOURIER, reality_flag=True),
        ut=Field(grid=grid, values=ut_new, representation=FOURIER, reality_flag=True),
        t=state.t + t,
    )


def apply_Stilde(state: WaveState, t: float) -> Field:
    """Auxiliary propagator: -(|xi|/<xi>) sin(t|xi|) u0 + cos(t|xi|)/<xi> u1.

    Satisfies d/dt S(t)(u0,u1) = <nabla> Stilde(t)(u0,u1).
    """
    grid = state.grid
    omega = grid.xi_norm
    bracket = np.sqrt(1.0 + grid.xi_sq)
    p = transform(state.u, FOURIER).values
    q = transform(state.ut, FOURIER).values
    vals = -(omega / bracket) * np.sin(t * omega) * p + (np.cos(t * omega) / bracket) * q
    return Field(grid=grid, values=vals, representation=FOURIER, reality_flag=True)


def linear_energy(state: WaveState) -> float:
    """Conserved quantity of the free flow: (|grad u|^2 + |ut|^2)/2."""
    grid = state.grid
    p = transform(state.u, FOURIER).values
    q = transform(state.ut, FOURIER).values
    grad_sq = float(np.sum(grid.xi_sq * np.abs(p) ** 2))
    kin_sq = float(np.sum(np.abs(q) ** 2))
    return 0.5 * (grad_sq + kin_sq)
