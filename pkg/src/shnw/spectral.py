"""Periodic spectral grids, unitary Fourier transforms, multipliers, and norms.

Everything downstream (propagators, noise, dynamics, diagnostics) lives on a
uniform grid over the box [0, L)^d with the frequency lattice xi_k = 2*pi*k/L,
k in {-M/2, ..., M/2-1} per axis.  The transform convention is unitary with
respect to the cell-volume quadrature, i.e. the Fourier coefficients are taken
against the orthonormal exponentials L^{-d/2} exp(i xi.x), so Parseval is an
equality and every norm below includes the cell volume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

PHYSICAL = "physical"
FOURIER = "fourier"

_REPRESENTATIONS = (PHYSICAL, FOURIER)


class ConfigurationError(ValueError):
    """Raised when a grid or operator parameter is out of its valid range."""


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform periodic grid on [0, L)^d with its frequency lattice.

    Immutable after construction; derived lattice arrays are precomputed once
    and shared (read-only views), so grids are safe to pass between threads.
    """

    d: int
    M: int
    L: float

    # derived, excluded from equality/hash
    shape: tuple = field(init=False, repr=False, compare=False)
    spacing: float = field(init=False, repr=False, compare=False)
    cell_volume: float = field(init=False, repr=False, compare=False)
    mode_count: int = field(init=False, repr=False, compare=False)
    fourier_scale: float = field(init=False, repr=False, compare=False)
    xi_axes: tuple = field(init=False, repr=False, compare=False)
    xi_mesh: tuple = field(init=False, repr=False, compare=False)
    xi_norm: np.ndarray = field(init=False, repr=False, compare=False)
    xi_sq: np.ndarray = field(init=False, repr=False, compare=False)
    self_conjugate_mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.d, int) or not 1 <= self.d <= 5:
            raise ConfigurationError(f"dimension out of range: d={self.d} (need 1 <= d <= 5)")
        if not isinstance(self.M, int) or self.M < 4 or not _is_power_of_two(self.M):
            raise ConfigurationError(f"points_per_axis out of range: M={self.M} (need power of two >= 4)")
        if not (self.L > 0):
            raise ConfigurationError(f"domain_length out of range: L={self.L} (need L > 0)")

        d, M, L = self.d, self.M, float(self.L)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "shape", (M,) * d)
        object.__setattr__(self, "spacing", L / M)
        object.__setattr__(self, "cell_volume", (L / M) ** d)
        object.__setattr__(self, "mode_count", M**d)
        # forward DFT coefficients scale so that sum |fhat|^2 = L2 norm squared
        object.__setattr__(self, "fourier_scale", L ** (d / 2) / M**d)

        k_int = np.fft.fftfreq(M, d=1.0 / M)  # integer wavenumbers in fft order
        xi_axis = (2.0 * np.pi / L) * k_int
        axes = tuple(xi_axis.copy() for _ in range(d))
        mesh = np.meshgrid(*axes, indexing="ij") if d > 1 else [axes[0]]
        xi_sq = np.zeros(self.shape)
        for comp in mesh:
            xi_sq = xi_sq + comp**2
        xi_norm = np.sqrt(xi_sq)

        # modes fixed by k -> -k (mod M): every component in {0, -M/2}
        axis_fixed = (k_int == 0) | (k_int == -M // 2)
        fixed = np.ones(self.shape, dtype=bool)
        for a in range(d):
            shape_a = [1] * d
            shape_a[a] = M
            fixed &= axis_fixed.reshape(shape_a)

        for arr in (*mesh, xi_norm, xi_sq, fixed):
            arr.setflags(write=False)
        object.__setattr__(self, "xi_axes", axes)
        object.__setattr__(self, "xi_mesh", tuple(mesh))
        object.__setattr__(self, "xi_norm", xi_norm)
        object.__setattr__(self, "xi_sq", xi_sq)
        object.__setattr__(self, "self_conjugate_mask", fixed)

    @property
    def zero_index(self) -> tuple:
        return (0,) * self.d

    def coordinate_axes(self) -> tuple:
        x = np.arange(self.M) * self.spacing
        return tuple(x.copy() for _ in range(self.d))


def make_grid(d: int, M: int, L: float) -> SpectralGrid:
    """Build a periodic spectral grid; rejects out-of-range parameters."""
    return SpectralGrid(d=d, M=M, L=L)


@dataclass(frozen=True)
class Field:
    """A scalar lattice function in physical or Fourier representation."""

    grid: SpectralGrid
    values: np.ndarray
    representation: str
    reality_flag: bool = True

    def __post_init__(self) -> None:
        if self.representation not in _REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} does not match grid shape {self.grid.shape}")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def real_values(self) -> np.ndarray:
        """Physical real samples (requires physical representation)."""
        if self.representation != PHYSICAL:
            raise ValueError("real_values requires physical representation")
        return self.values.real


def field_from_physical(grid: SpectralGrid, values: np.ndarray, reality: bool = True) -> Field:
    return Field(grid=grid, values=np.asarray(values), representation=PHYSICAL, reality_flag=reality)


def field_from_fourier(grid: SpectralGrid, values: np.ndarray, reality: bool = False) -> Field:
    return Field(grid=grid, values=np.asarray(values), representation=FOURIER, reality_flag=reality)


def zero_field(grid: SpectralGrid, representation: str = PHYSICAL) -> Field:
    return Field(grid=grid, values=np.zeros(grid.shape), representation=representation, reality_flag=True)


def forward_coefficients(grid: SpectralGrid, physical_values: np.ndarray) -> np.ndarray:
    """Unitary-normalized DFT coefficients of physical samples."""
    return np.fft.fftn(physical_values) * grid.fourier_scale


def inverse_coefficients(grid: SpectralGrid, fourier_values: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(fourier_values) * (1.0 / grid.fourier_scale)


def transform(f: Field, target: str) -> Field:
    """Move a field to the target representation (no-op if already there)."""
    if target not in _REPRESENTATIONS:
        raise ValueError(f"unknown representation {target!r}")
    if f.representation == target:
        return f
    if target == FOURIER:
        vals = forward_coefficients(f.grid, f.values)
    else:
        vals = inverse_coefficients(f.grid, f.values)
    return Field(grid=f.grid, values=vals, representation=target, reality_flag=f.reality_flag)


def hermitian_symmetrize(grid: SpectralGrid, fourier_values: np.ndarray) -> np.ndarray:
    """Project a Fourier lattice array onto the spectrum of a real field."""
    rev = fourier_values
    for a in range(grid.d):
        rev = np.roll(np.flip(rev, axis=a), 1, axis=a)
    return 0.5 * (fourier_values + np.conj(rev))


def random_real_field(
    grid: SpectralGrid,
    rng: np.random.Generator,
    kmax: float | None = None,
    decay: float = 0.0,
    amplitude: float = 1.0,
) -> Field:
    """Seeded band-limited real field for tests and built-in verification runs.

    Coefficients are complex Gaussian with an exp(-decay*|k|) envelope,
    restricted to integer wavenumbers |k|_inf <= kmax (default: half Nyquist),
    then Hermitian-symmetrized so the physical samples are real.
    """
    if kmax is None:
        kmax = grid.M // 4
    k_int = np.fft.fftfreq(grid.M, d=1.0 / grid.M)
    mesh = np.meshgrid(*([k_int] * grid.d), indexing="ij") if grid.d > 1 else [k_int]
    kinf = np.zeros(grid.shape)
    ksq = np.zeros(grid.shape)
    for comp in mesh:
        kinf = np.maximum(kinf, np.abs(comp))
        ksq = ksq + comp**2
    mask = kinf <= kmax
    raw = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    spectrum = raw * np.exp(-decay * np.sqrt(ksq)) * mask
    spectrum = hermitian_symmetrize(grid, spectrum)
    f = field_from_fourier(grid, spectrum, reality=True)
    f = transform(f, PHYSICAL)
    scale = lebesgue_norm(f, 2.0)
    if scale > 0:
        f = field_from_physical(grid, f.values.real * (amplitude / scale))
    return f


# ---------------------------------------------------------------------------
# Fourier multipliers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FourierMultiplier:
    """Diagonal Fourier-space operator with an explicit zero-mode convention.

    ``symbol`` maps the tuple of frequency component arrays to the multiplier
    values; ``zero_mode_value`` overrides the (possibly singular) value at
    xi = 0.  ``hermitian`` marks symbols with m(-xi) = conj(m(xi)), which
    preserve reality of real inputs.
    """

    symbol: Callable[[tuple], np.ndarray]
    zero_mode_value: complex = 1.0
    hermitian: bool = True

    def values(self, grid: SpectralGrid) -> np.ndarray:
        arr = np.asarray(self.symbol(grid.xi_mesh), dtype=np.complex128)
        arr = np.broadcast_to(arr, grid.shape).copy()
        arr[grid.zero_index] = self.zero_mode_value
        if not np.all(np.isfinite(arr)):
            raise ValueError("multiplier symbol is not finite on the frequency lattice")
        return arr


def radial_multiplier(fn: Callable[[np.ndarray], np.ndarray], zero_mode_value: complex) -> FourierMultiplier:
    """Multiplier m(xi) = fn(|xi|); fn is evaluated away from xi = 0."""

    def symbol(xi_mesh: tuple) -> np.ndarray:
        r = np.zeros(np.broadcast(*xi_mesh).shape) if len(xi_mesh) > 1 else np.zeros(xi_mesh[0].shape)
        for comp in xi_mesh:
            r = r + comp**2
        r = np.sqrt(r)
        safe = np.where(r == 0.0, 1.0, r)
        return np.where(r == 0.0, 0.0, fn(safe))

    return FourierMultiplier(symbol=symbol, zero_mode_value=zero_mode_value, hermitian=True)


def identity_multiplier() -> FourierMultiplier:
    return FourierMultiplier(symbol=lambda xi: np.ones(np.broadcast(*xi).shape if len(xi) > 1 else xi[0].shape),
                             zero_mode_value=1.0)


def fractional_derivative_multiplier(s: float) -> FourierMultiplier:
    """|xi|^s with the zero mode sent to 0 (homogeneous convention)."""
    return radial_multiplier(lambda r: r**s, zero_mode_value=0.0)


def bessel_derivative_multiplier(s: float) -> FourierMultiplier:
    """<xi>^s = (1 + |xi|^2)^{s/2}."""
    return radial_multiplier(lambda r: (1.0 + r**2) ** (s / 2.0), zero_mode_value=1.0)


def apply_multiplier(f: Field, m: FourierMultiplier) -> Field:
    """Multiply Fourier coefficients by the symbol; output stays in Fourier."""
    fhat = transform(f, FOURIER)
    vals = fhat.values * m.values(f.grid)
    return Field(grid=f.grid, values=vals, representation=FOURIER,
                 reality_flag=f.reality_flag and m.hermitian)


# ---------------------------------------------------------------------------
# Littlewood-Paley projections
# ---------------------------------------------------------------------------

def lp_mother_profile(r: np.ndarray) -> np.ndarray:
    """Radial cutoff: 1 on [0,1], raised-cosine decay on [1,2], 0 beyond."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    out[r <= 1.0] = 1.0
    band = (r > 1.0) & (r < 2.0)
    out[band] = np.cos(0.5 * np.pi * (r[band] - 1.0)) ** 2
    return out


def _validate_dyadic(N: float) -> float:
    N = float(N)
    if N <= 0 or not math.isfinite(N):
        raise ValueError(f"dyadic level must be positive, got {N}")
    j = math.log2(N)
    if abs(j - round(j)) > 1e-9:
        raise ValueError(f"dyadic level must be a power of two, got {N}")
    return N


def lp_multiplier(kind: str, N: float) -> FourierMultiplier:
    N = _validate_dyadic(N)
    if kind == "leq":
        return radial_multiplier(lambda r: lp_mother_profile(r / N), zero_mode_value=1.0)
    if kind == "dyadic":
        return radial_multiplier(lambda r: lp_mother_profile(r / N) - lp_mother_profile(2.0 * r / N),
                                 zero_mode_value=0.0)
    if kind == "gt":
        return radial_multiplier(lambda r: 1.0 - lp_mother_profile(r / N), zero_mode_value=0.0)
    raise ValueError(f"unknown Littlewood-Paley kind {kind!r}")


def lp_project(f: Field, kind: str, N: float) -> Field:
    return apply_multiplier(f, lp_multiplier(kind, N))


# ---------------------------------------------------------------------------
# Riesz potential convolution (Hartree potential)
# ---------------------------------------------------------------------------

def riesz_constant(d: int, gamma: float) -> float:
    """Fourier-transform constant of |x|^{-gamma} on R^d: c |xi|^{-(d-gamma)}."""
    if not 0.0 < gamma < d:
        raise ValueError(f"potential exponent out of range: gamma={gamma}, d={d}")
    return math.pi ** (d / 2.0) * 2.0 ** (d - gamma) * math.gamma((d - gamma) / 2.0) / math.gamma(gamma / 2.0)


_KERNEL_DC_CACHE: dict = {}


def periodized_kernel_dc(grid: SpectralGrid, gamma: float) -> float:
    """Zero-mode value for the Riesz multiplier (per unit coupling).

    Quadrature integral over the box of the truncated periodized kernel
    |z|^{-gamma} evaluated at minimal-image lattice offsets, with the
    self-interaction z = 0 excluded.  Computed once per (grid, gamma).
    """
    key = (grid.d, grid.M, grid.L, float(gamma))
    if key in _KERNEL_DC_CACHE:
        return _KERNEL_DC_CACHE[key]
    offsets = np.arange(grid.M) * grid.spacing
    min_image = np.minimum(offsets, grid.L - offsets)
    mesh = np.meshgrid(*([min_image] * grid.d), indexing="ij") if grid.d > 1 else [min_image]
    r_sq = np.zeros(grid.shape)
    for comp in mesh:
        r_sq = r_sq + comp**2
    r = np.sqrt(r_sq)
    r[grid.zero_index] = 1.0  # excluded below
    vals = r ** (-gamma)
    vals[grid.zero_index] = 0.0
    dc = float(np.sum(vals) * grid.cell_volume)
    _KERNEL_DC_CACHE[key] = dc
    return dc


def hartree_potential_multiplier(grid: SpectralGrid, gamma: float, mu: float) -> FourierMultiplier:
    """Symbol of convolution with mu |x|^{-gamma}: mu c_{d,gamma} |xi|^{gamma-d}.

    The zero mode follows the periodized-kernel convention so the multiplier
    route and the direct lattice double sum define the same discrete operator.
    """
    if not 0.0 < gamma < grid.d:
        raise ValueError(f"potential exponent out of range: gamma={gamma}, d={grid.d}")
    c = riesz_constant(grid.d, gamma)
    dc = periodized_kernel_dc(grid, gamma)
    return radial_multiplier(lambda r: mu * c * r ** (gamma - grid.d), zero_mode_value=mu * dc)


def riesz_convolve(f: Field, gamma: float, mu: float = 1.0) -> Field:
    """Hartree potential of a real field: (mu |x|^{-gamma} * f) on the box."""
    if not f.reality_flag:
        raise ValueError("riesz_convolve requires a real field")
    m = hartree_potential_multiplier(f.grid, gamma, mu)
    out = apply_multiplier(f, m)
    return transform(out, PHYSICAL)


# ---------------------------------------------------------------------------
# Norm quadrature
# ---------------------------------------------------------------------------

def lebesgue_norm(f: Field, r: float) -> float:
    """Discrete L^r norm with cell-volume quadrature; r = inf gives the max."""
    if r != np.inf and r < 1.0:
        raise ValueError(f"Lebesgue exponent must satisfy r >= 1, got {r}")
    g = transform(f, PHYSICAL)
    mags = np.abs(g.real_values) if g.reality_flag else np.abs(g.values)
    if r == np.inf:
        return float(mags.max())
    return float(np.sum(mags**r) * f.grid.cell_volume) ** (1.0 / r)


def sobolev_norm(f: Field, s: float, flavor: str = "inhomogeneous") -> float:
    """l^2 norm of |xi|^s or <xi>^s weighted coefficients.

    The homogeneous flavor excludes the zero mode, matching the torus
    convention for |nabla|^s.
    """
    fhat = transform(f, FOURIER)
    if flavor == "homogeneous":
        w = f.grid.xi_norm.copy()
        w[f.grid.zero_index] = 1.0
        weights = w**s
        weights[f.grid.zero_index] = 0.0
    elif flavor == "inhomogeneous":
        weights = (1.0 + f.grid.xi_sq) ** (s / 2.0)
    else:
        raise ValueError(f"unknown Sobolev flavor {flavor!r}")
    return float(np.sqrt(np.sum(weights**2 * np.abs(fhat.values) ** 2)))
