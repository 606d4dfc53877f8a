import numpy as np
import pytest

from strat2d.errors import GridMismatchError, NonzeroMeanError
from strat2d.bands import (
    BesovSpec,
    DyadicBank,
    band_decomposition,
    band_profile_rows,
    besov_norm,
    boundary_band_fraction,
    build_bank,
    chi,
    intersection_norm,
    lowpass_hom,
    lowpass_nonhom,
    paraproduct,
    project_band,
    psi0,
    smooth_step,
)
from strat2d.grid import (
    GridSpec,
    SpectralField,
    dealias,
    forward_transform,
    hminus1_norm,
    lp_norm,
    multiply,
)


@pytest.fixture
def grid():
    return GridSpec(128)


@pytest.fixture
def bank(grid):
    return build_bank(grid)


def band_limited_random(grid, bank, seed=0):
    """Mean-zero field supported strictly inside the resolved bands."""
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    f = forward_transform(grid, rng.standard_normal((grid.n, grid.n)))
    lo = 5.0 / 8.0 * 2.0 ** (bank.j_min + 1)
    hi = 5.0 / 8.0 * 2.0**bank.j_max
    mask = (grid.xi_abs > lo) & (grid.xi_abs <= hi)
    return SpectralField(grid, f.coeffs * mask)


def test_smooth_step_endpoints():
    assert smooth_step(np.array([-1.0, 0.0]))[0] == 0.0
    assert smooth_step(np.array([1.0, 2.0]))[1] == 1.0
    mid = smooth_step(np.array([0.5]))[0]
    assert abs(mid - 0.5) < 1e-14  # symmetric construction


def test_chi_plateau_and_support():
    r = np.array([0.0, 1.0, 5.0 / 4.0, 7.0 / 4.0, 2.0])
    v = chi(r)
    assert v[0] == 1.0 and v[1] == 1.0 and v[2] == 1.0
    assert v[3] == 0.0 and v[4] == 0.0


def test_psi0_support():
    r = np.array([0.5, 5.0 / 8.0, 1.0, 7.0 / 4.0, 2.0])
    v = psi0(r)
    assert v[0] == 0.0 and v[1] == 0.0
    assert v[2] == 1.0  # both cutoffs saturated at |xi| = 1
    assert v[3] == 0.0 and v[4] == 0.0


def test_band_range_reference_grid(bank):
    assert bank.j_min == 0
    assert bank.j_max == 4


def test_partition_of_unity(bank):
    assert bank.partition_residual() < 1e-12


def test_bank_needs_enough_bands():
    with pytest.raises(ValueError):
        DyadicBank(GridSpec(8))


def test_psi_hat_range_checked(bank):
    with pytest.raises(ValueError):
        bank.psi_hat(bank.j_max + 1)


def test_project_band_grid_check(bank):
    other = forward_transform(GridSpec(64), np.zeros((64, 64)))
    with pytest.raises(GridMismatchError):
        project_band(other, 0, bank)


def test_single_mode_band_membership(grid, bank):
    x1, _ = grid.meshgrid()
    f = forward_transform(grid, np.cos(4 * x1))  # |xi| = 4 sits in band 2 only
    for j in bank.bands:
        norm = lp_norm(project_band(f, j, bank), 2)
        if j == 2:
            assert abs(norm - lp_norm(f, 2)) < 1e-12
        else:
            assert norm < 1e-14


def test_lowpass_mean_policy(grid, bank):
    x1, _ = grid.meshgrid()
    f = forward_transform(grid, 2.0 + np.cos(x1))
    hom = lowpass_hom(f, 3, bank)
    nonhom = lowpass_nonhom(f, 3, bank)
    assert hom.mean == 0.0
    assert abs(nonhom.mean - 2.0) < 1e-14
    # the |xi| = 1 content passes both untouched
    assert abs(hom.coeffs[1, 0] - 0.5) < 1e-14


def test_band_decomposition_reconstructs(grid, bank):
    f = band_limited_random(grid, bank, seed=1)
    blocks, s0 = band_decomposition(f, bank)
    total = np.zeros_like(f.coeffs)
    for j, fj in blocks:
        total += fj.coeffs
    assert np.abs(total - f.coeffs).max() < 1e-12 * np.abs(f.coeffs).max()


def test_besov_norm_single_mode(grid, bank):
    x1, _ = grid.meshgrid()
    f = forward_transform(grid, np.cos(x1))  # lives entirely in band 0
    for s in (0.0, 1.0, 2.0):
        v = besov_norm(f, BesovSpec(s=s, q=1.0), bank)
        assert abs(v - np.sqrt(2) * np.pi) < 1e-12  # 2^{s*0} = 1


def test_besov_q_infinity(grid, bank):
    f = band_limited_random(grid, bank, seed=2)
    v1 = besov_norm(f, BesovSpec(s=1.0, q=np.inf), bank)
    vals = [2.0**j * lp_norm(project_band(f, j, bank), 2) for j in bank.bands]
    assert abs(v1 - max(vals)) < 1e-12


def test_homogeneous_norm_mean_guard(grid, bank):
    f = forward_transform(grid, np.ones((grid.n, grid.n)))
    with pytest.raises(NonzeroMeanError):
        besov_norm(f, BesovSpec(s=0.0, q=1.0), bank)
    # positive smoothness ignores the mean (weight 0 on the zero mode)
    besov_norm(f, BesovSpec(s=1.0, q=1.0), bank)


def test_nonhomogeneous_norm_keeps_mean(grid, bank):
    f = forward_transform(grid, np.full((grid.n, grid.n), 3.0))
    v = besov_norm(f, BesovSpec(s=2.0, q=1.0, homogeneous=False), bank)
    assert abs(v - 3.0 * 2 * np.pi) < 1e-10  # S_0 block alone: L2 of a constant


def test_intersection_norm_is_sum(grid, bank):
    f = band_limited_random(grid, bank, seed=3)
    v = intersection_norm(f, 1.0, 1.0, bank)
    expected = besov_norm(f, BesovSpec(s=1.0, q=1.0), bank) + hminus1_norm(f)
    assert abs(v - expected) < 1e-12


def test_besov_spec_validation():
    with pytest.raises(ValueError):
        BesovSpec(s=1.0, p=0.5)
    with pytest.raises(ValueError):
        BesovSpec(s=1.0, q=0.0)


def test_paraproduct_reconstruction(grid, bank):
    f = band_limited_random(grid, bank, seed=4)
    g = band_limited_random(grid, bank, seed=5)
    t_fg, t_gf, remainder = paraproduct(f, g, bank)
    total = t_fg + t_gf + remainder
    direct = multiply(f, g)
    # the factors are mean-zero and band-limited, so the three Bony pieces
    # recombine to the full dealiased product
    err = np.abs(total.coeffs - direct.coeffs).max()
    assert err < 1e-10 * max(np.abs(direct.coeffs).max(), 1e-300)


def test_paraproduct_zero_factor(grid, bank):
    f = band_limited_random(grid, bank, seed=6)
    zero = SpectralField(grid, np.zeros_like(f.coeffs))
    t_fg, t_gf, remainder = paraproduct(f, zero, bank)
    assert t_fg.coefficient_norm() == 0.0
    assert t_gf.coefficient_norm() == 0.0
    assert remainder.coefficient_norm() == 0.0


def test_boundary_band_fraction(grid, bank):
    x1, _ = grid.meshgrid()
    interior = forward_transform(grid, np.cos(4 * x1))  # band 2, interior
    assert boundary_band_fraction(interior, bank) < 1e-20
    edge = forward_transform(grid, np.cos(x1))  # band 0 = lowest band
    assert boundary_band_fraction(edge, bank) > 0.99


def test_band_profile_rows(bank):
    rows = band_profile_rows(bank, n_radial=50)
    labels = {r[1] for r in rows}
    assert "sum" in labels
    assert str(bank.j_min) in labels and str(bank.j_max) in labels
    # partition sum close to 1 somewhere in the interior
    interior = [v for r, lab, v in rows if lab == "sum" and 2.0 < r < 8.0]
    assert max(interior) > 0.999


def test_partition_across_resolutions():
    for n in (64, 128, 256):
        assert build_bank(GridSpec(n)).partition_residual() < 1e-12
