"""Grid, transform, multiplier, projection, and norm contracts."""

import math

import numpy as np
import pytest

from shnw.spectral import (
    FOURIER,
    PHYSICAL,
    ConfigurationError,
    Field,
    apply_multiplier,
    bessel_derivative_multiplier,
    field_from_physical,
    fractional_derivative_multiplier,
    hartree_potential_multiplier,
    hermitian_symmetrize,
    identity_multiplier,
    lebesgue_norm,
    lp_multiplier,
    lp_project,
    make_grid,
    periodized_kernel_dc,
    random_real_field,
    riesz_constant,
    riesz_convolve,
    sobolev_norm,
    transform,
    zero_field,
)
from shnw import snapshots

from oracles import cyclic_convolution, direct_idft, riesz_constant_quadrature


class TestGrid:
    def test_integer_lattice_at_2pi(self):
        grid = make_grid(1, 8, 2 * np.pi)
        assert sorted(grid.xi_axes[0].astype(int)) == [-4, -3, -2, -1, 0, 1, 2, 3]

    def test_mode_count_d5(self):
        assert make_grid(5, 8, 2 * np.pi).mode_count == 8**5

    @pytest.mark.parametrize("d,M,L,fragment", [
        (6, 8, 1.0, "dimension"),
        (0, 8, 1.0, "dimension"),
        (3, 6, 1.0, "points_per_axis"),
        (3, 2, 1.0, "points_per_axis"),
        (3, 8, 0.0, "domain_length"),
        (3, 8, -1.0, "domain_length"),
    ])
    def test_rejects_bad_parameters(self, d, M, L, fragment):
        with pytest.raises(ConfigurationError, match=fragment):
            make_grid(d, M, L)

    def test_cell_volume(self):
        grid = make_grid(3, 16, 4.0)
        assert grid.cell_volume == pytest.approx((4.0 / 16) ** 3, rel=0, abs=0)


class TestTransform:
    def test_constant_field_zero_mode(self):
        grid = make_grid(1, 8, 2 * np.pi)
        f = field_from_physical(grid, np.full(grid.shape, 3.0))
        fhat = transform(f, FOURIER)
        assert fhat.values[0] == pytest.approx(3.0 * math.sqrt(2 * np.pi), rel=1e-14)
        assert np.max(np.abs(fhat.values[1:])) < 1e-14

    @pytest.mark.parametrize("d,M", [(1, 64), (2, 16), (3, 8)])
    def test_roundtrip_and_parseval(self, d, M, rng):
        grid = make_grid(d, M, 3.7)
        for _ in range(100):
            f = field_from_physical(grid, rng.standard_normal(grid.shape))
            back = transform(transform(f, FOURIER), PHYSICAL)
            scale = np.max(np.abs(f.values))
            assert np.max(np.abs(back.values - f.values)) <= 1e-12 * scale
            l2 = lebesgue_norm(f, 2.0)
            coeff_l2 = math.sqrt(float(np.sum(np.abs(transform(f, FOURIER).values) ** 2)))
            assert abs(l2 - coeff_l2) <= 1e-12 * l2

    def test_noop_when_in_target(self, grid2d, rng):
        f = field_from_physical(grid2d, rng.standard_normal(grid2d.shape))
        assert transform(f, PHYSICAL) is f


class TestMultipliers:
    def test_identity(self, grid2d, rng):
        f = field_from_physical(grid2d, rng.standard_normal(grid2d.shape))
        out = apply_multiplier(f, identity_multiplier())
        assert np.allclose(out.values, transform(f, FOURIER).values, rtol=0, atol=0)

    def test_bracket_zero_power_is_identity(self, grid2d, rng):
        f = field_from_physical(grid2d, rng.standard_normal(grid2d.shape))
        out = apply_multiplier(f, bessel_derivative_multiplier(0.0))
        assert np.max(np.abs(out.values - transform(f, FOURIER).values)) < 1e-14

    def test_single_mode_eigenfunction(self):
        grid = make_grid(1, 16, 2 * np.pi)
        x = np.arange(16) * grid.spacing
        f = Field(grid=grid, values=np.exp(3j * x), representation=PHYSICAL, reality_flag=False)
        out = apply_multiplier(f, fractional_derivative_multiplier(0.8))
        fhat = transform(f, FOURIER).values
        assert out.values[3] == pytest.approx(3.0**0.8 * fhat[3], rel=1e-13)

    def test_composition_commutes(self, grid2d, rng):
        f = field_from_physical(grid2d, rng.standard_normal(grid2d.shape))
        m1 = fractional_derivative_multiplier(0.5)
        m2 = bessel_derivative_multiplier(-1.3)
        seq = apply_multiplier(apply_multiplier(f, m1), m2).values
        prod = transform(f, FOURIER).values * m1.values(grid2d) * m2.values(grid2d)
        assert np.max(np.abs(seq - prod)) <= 1e-12 * np.max(np.abs(prod))

    def test_reality_preserved_by_real_even_symbol(self, grid2d, rng):
        f = field_from_physical(grid2d, rng.standard_normal(grid2d.shape))
        out = transform(apply_multiplier(f, bessel_derivative_multiplier(0.7)), PHYSICAL)
        assert out.reality_flag
        norm = lebesgue_norm(out, 2.0)
        assert np.max(np.abs(out.values.imag)) <= 1e-12 * norm


class TestLittlewoodPaley:
    def test_resolution_of_identity(self, grid2d, rng):
        f = field_from_physical(grid2d, rng.standard_normal(grid2d.shape))
        fhat = transform(f, FOURIER).values
        total = lp_project(f, "leq", 4).values + lp_project(f, "gt", 4).values
        assert np.max(np.abs(total - fhat)) <= 1e-15 * max(np.max(np.abs(fhat)), 1.0)

    def test_band_limited_fixed_point(self, rng):
        grid = make_grid(2, 32, 2 * np.pi)
        f = random_real_field(grid, rng, kmax=2)
        fhat = transform(f, FOURIER).values
        low = lp_project(f, "leq", 4).values  # spectrum inside |xi| <= 2sqrt2 < 4
        assert np.max(np.abs(low - fhat)) <= 1e-12 * np.max(np.abs(fhat))

    def test_telescoping(self, rng):
        grid = make_grid(2, 32, 2 * np.pi)
        f = field_from_physical(grid, rng.standard_normal(grid.shape))
        summed = sum(lp_project(f, "dyadic", 2.0**j).values for j in range(0, 4))
        target = lp_project(f, "leq", 8.0).values - lp_project(f, "leq", 0.5).values
        assert np.max(np.abs(summed - target)) <= 1e-12 * max(np.max(np.abs(target)), 1.0)

    def test_distant_blocks_annihilate(self, rng):
        grid = make_grid(1, 64, 2 * np.pi)
        f = field_from_physical(grid, rng.standard_normal(grid.shape))
        twice = lp_project(transform(lp_project(f, "dyadic", 16.0), PHYSICAL), "dyadic", 4.0)
        assert np.max(np.abs(twice.values)) < 1e-13

    def test_dyadic_validation(self):
        with pytest.raises(ValueError, match="power of two"):
            lp_multiplier("leq", 3.0)
        with pytest.raises(ValueError, match="positive"):
            lp_multiplier("leq", 0.0)


class TestRiesz:
    def test_zero_field(self):
        grid = make_grid(2, 8, 2 * np.pi)
        out = riesz_convolve(zero_field(grid), 1.0, 1.0)
        assert np.max(np.abs(out.values)) == 0.0

    def test_constant_formula_energy_critical(self):
        # closed form equals 2 pi^3 in the d=5, gamma=4 case
        assert riesz_constant(5, 4.0) == pytest.approx(2 * math.pi**3, rel=1e-14)

    def test_constant_against_radial_quadrature(self):
        oracle = riesz_constant_quadrature()
        assert riesz_constant(5, 4.0) == pytest.approx(oracle, rel=1e-9)

    def test_gamma_out_of_range(self):
        grid = make_grid(2, 8, 2 * np.pi)
        f = zero_field(grid)
        for gamma in (0.0, 2.0, 2.5, -1.0):
            with pytest.raises(ValueError, match="potential exponent out of range"):
                riesz_convolve(f, gamma, 1.0)

    def test_multiplier_equals_direct_double_sum(self, rng):
        grid = make_grid(2, 8, 2 * np.pi)
        f = random_real_field(grid, rng, kmax=4, decay=0.1)
        via = riesz_convolve(f, 1.0, 1.0).real_values
        m_vals = hartree_potential_multiplier(grid, 1.0, 1.0).values(grid)
        kernel = (direct_idft(grid.shape, grid.M, m_vals) / grid.cell_volume).real
        direct = cyclic_convolution(kernel, f.real_values, grid.cell_volume)
        assert np.max(np.abs(via - direct)) <= 1e-10

    def test_constant_input_sees_zero_mode(self):
        grid = make_grid(2, 8, 2 * np.pi)
        c = field_from_physical(grid, np.full(grid.shape, 2.0))
        out = riesz_convolve(c, 1.0, 1.0)
        assert np.allclose(out.real_values, 2.0 * periodized_kernel_dc(grid, 1.0), rtol=1e-13)

    def test_output_real(self, rng):
        grid = make_grid(3, 8, 2 * np.pi)
        f = random_real_field(grid, rng)
        out = riesz_convolve(f, 1.5, -1.0)
        assert np.max(np.abs(out.values.imag)) <= 1e-12 * lebesgue_norm(out, 2.0)


class TestNorms:
    def test_constant_lebesgue(self):
        grid = make_grid(2, 8, 2.0)
        f = field_from_physical(grid, np.full(grid.shape, -1.5))
        volume = 2.0**2
        for r in (1.0, 2.0, 4.0):
            assert lebesgue_norm(f, r) == pytest.approx(1.5 * volume ** (1 / r), rel=1e-14)
        assert lebesgue_norm(f, np.inf) == pytest.approx(1.5)

    def test_single_cell_spike(self):
        grid = make_grid(2, 8, 2 * np.pi)
        vals = np.zeros(grid.shape)
        vals[3, 4] = 1.0
        f = field_from_physical(grid, vals)
        for r in (1.0, 3.0):
            assert lebesgue_norm(f, r) == pytest.approx(grid.cell_volume ** (1 / r), rel=1e-14)

    def test_r_below_one_rejected(self, grid2d):
        with pytest.raises(ValueError, match="r >= 1"):
            lebesgue_norm(zero_field(grid2d), 0.5)

    def test_sobolev_single_mode(self):
        grid = make_grid(1, 16, 2 * np.pi)
        x = np.arange(16) * grid.spacing
        vals = np.exp(2j * x) / math.sqrt(2 * np.pi)  # unit L2 norm
        f = Field(grid=grid, values=vals, representation=PHYSICAL, reality_flag=False)
        assert sobolev_norm(f, 0.75, "homogeneous") == pytest.approx(2.0**0.75, rel=1e-13)

    def test_sobolev_s0_is_l2(self, grid2d, rng):
        f = field_from_physical(grid2d, rng.standard_normal(grid2d.shape))
        assert sobolev_norm(f, 0.0, "inhomogeneous") == pytest.approx(lebesgue_norm(f, 2.0), rel=1e-13)

    def test_constant_has_zero_homogeneous_norm(self, grid2d):
        f = field_from_physical(grid2d, np.full(grid2d.shape, 4.2))
        assert sobolev_norm(f, 1.0, "homogeneous") == 0.0


class TestHermitianAndSnapshots:
    def test_hermitian_symmetrize_gives_real_fields(self, grid2d, rng):
        raw = rng.standard_normal(grid2d.shape) + 1j * rng.standard_normal(grid2d.shape)
        sym = hermitian_symmetrize(grid2d, raw)
        f = Field(grid=grid2d, values=sym, representation=FOURIER, reality_flag=True)
        phys = transform(f, PHYSICAL)
        assert np.max(np.abs(phys.values.imag)) < 1e-13

    def test_field_snapshot_roundtrip(self, tmp_path, grid2d, rng):
        f = field_from_physical(grid2d, rng.standard_normal(grid2d.shape))
        path = tmp_path / "f.shnw"
        snapshots.write_field(path, f)
        g = snapshots.read_field(path)
        assert g.grid == grid2d
        assert np.array_equal(g.values, f.values)

    def test_complex_snapshot_roundtrip(self, tmp_path, grid2d, rng):
        vals = rng.standard_normal(grid2d.shape) + 1j * rng.standard_normal(grid2d.shape)
        f = Field(grid=grid2d, values=vals, representation=PHYSICAL, reality_flag=False)
        path = tmp_path / "c.shnw"
        snapshots.write_field(path, f)
        g = snapshots.read_field(path)
        assert not g.reality_flag
        assert np.array_equal(g.values, f.values)

    def test_state_roundtrip(self, tmp_path, grid2d, rng):
        u = field_from_physical(grid2d, rng.standard_normal(grid2d.shape))
        ut = field_from_physical(grid2d, rng.standard_normal(grid2d.shape))
        path = tmp_path / "s.shnw"
        snapshots.write_state(path, u, ut)
        u2, ut2 = snapshots.read_state(path)
        assert np.array_equal(u2.values, u.values)
        assert np.array_equal(ut2.values, ut.values)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.shnw"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(snapshots.SnapshotFormatError, match="magic"):
            snapshots.read_field(path)
