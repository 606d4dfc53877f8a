"""Dyadic multiplier bank, Besov norms, and the Bony paraproduct.

The radial cutoff chi is built from the standard smooth step
eta(t) = zeta(t) / (zeta(t) + zeta(1-t)) with zeta(t) = exp(-1/t) for t > 0,
so that chi == 1 for |xi| <= 5/4 and chi == 0 for |xi| >= 7/4.  The band
profile psi0(xi) = chi(|xi|) - chi(2|xi|) is then supported on the annulus
5/8 <= |xi| <= 7/4 and the shifted family telescopes to a partition of unity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, NonzeroMeanError
from .grid import (
    GridSpec,
    SpectralField,
    hminus1_norm,
    lp_norm,
    multiply,
    require_same_grid,
)


def smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        za = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        zb = np.where(1 - t > 0, np.exp(-1.0 / np.maximum(1 - t, 1e-300)), 0.0)
    return za / (za + zb)


def chi(r: np.ndarray) -> np.ndarray:
    """Radial low-pass profile: 1 on |xi| <= 5/4, 0 on |xi| >= 7/4."""
    return smooth_step((7.0 / 4.0 - np.asarray(r, dtype=float)) * 2.0)


def psi0(r: np.ndarray) -> np.ndarray:
    """Band-0 profile, supported on 5/8 <= |xi| <= 7/4."""
    r = np.asarray(r, dtype=float)
    return chi(r) - chi(2.0 * r)


@dataclass(frozen=True)
class BesovSpec:
    """Norm descriptor for B^s_{p,q} (nonhomogeneous) or the dotted version."""

    s: float
    p: float = 2.0
    q: float = 1.0
    homogeneous: bool = True

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("p and q must be >= 1")


class DyadicBank:
    """Cached dyadic multipliers psi_j on a grid, j in [j_min, j_max]."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        # top band must fit under the dealias cutoff
        j_max = math.floor(math.log2(grid.dealias_cutoff / (7.0 / 4.0)))
        # lowest band: coverage must reach the smallest nonzero frequency,
        # i.e. chi(2^{-(j_min-1)} / L0) = 0, so bands below j_min vanish on the grid
        j_min = math.floor(math.log2(8.0 / (7.0 * grid.box_scale)))
        if j_max - j_min + 1 < 3:
            raise ValueError(
                f"grid too small to host >= 3 dyadic bands (range [{j_min}, {j_max}])"
            )
        self.j_min = j_min
        self.j_max = j_max
        self._psi = {
            j: psi0(grid.xi_abs / 2.0**j) for j in range(j_min, j_max + 1)
        }

    # -- multipliers -----------------------------------------------------
    def psi_hat(self, j: int) -> np.ndarray:
        if j < self.j_min or j > self.j_max:
            raise ValueError(f"band {j} outside resolved range [{self.j_min}, {self.j_max}]")
        return self._psi[j]

    def lowpass_multiplier(self, k: int) -> np.ndarray:
        """chi(2^-k |xi|); value at xi=0 is 1 and is adjusted by callers."""
        return chi(self.grid.xi_abs / 2.0**k)

    @property
    def bands(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def interior_bands(self) -> range:
        return range(self.j_min + 1, self.j_max)

    def partition_residual(self) -> float:
        """max |sum_j psi_j - 1| over grid frequencies in the interior annulus."""
        total = np.zeros_like(self.grid.xi_abs)
        for j in self.bands:
            total += self._psi[j]
        lo = 5.0 / 8.0 * 2.0 ** (self.j_min + 1)
        hi = 5.0 / 8.0 * 2.0**self.j_max
        sel = (self.grid.xi_abs >= lo) & (self.grid.xi_abs <= hi)
        if not sel.any():
            return 0.0
        return float(np.abs(total[sel] - 1.0).max())


def build_bank(grid: GridSpec) -> DyadicBank:
    return DyadicBank(grid)


# ---------------------------------------------------------------------------
# projections


def project_band(f: SpectralField, j: int, bank: DyadicBank) -> SpectralField:
    if f.grid != bank.grid:
        raise GridMismatchError("field and bank live on different grids")
    return SpectralField(f.grid, bank.psi_hat(j) * f.coeffs)


def lowpass_hom(f: SpectralField, k: int, bank: DyadicBank) -> SpectralField:
    """S-dot_k: homogeneous low pass, zero mode annihilated."""
    c = bank.lowpass_multiplier(k) * f.coeffs
    c[0, 0] = 0.0
    return SpectralField(f.grid, c)


def lowpass_nonhom(f: SpectralField, k: int, bank: DyadicBank) -> SpectralField:
    """S_k: as S-dot_k but the zero mode is retained."""
    c = bank.lowpass_multiplier(k) * f.coeffs
    c[0, 0] = f.coeffs[0, 0]
    return SpectralField(f.grid, c)


def band_decomposition(f: SpectralField, bank: DyadicBank):
    """List of (j, Delta_j f) plus the nonhomogeneous S_0 block."""
    blocks = [(j, project_band(f, j, bank)) for j in bank.bands]
    return blocks, lowpass_nonhom(f, 0, bank)


def boundary_band_fraction(f: SpectralField, bank: DyadicBank) -> float:
    """Fraction of band L2 mass carried by the two boundary bands."""
    norms = {j: lp_norm(project_band(f, j, bank), 2) for j in bank.bands}
    total = sum(v**2 for v in norms.values())
    if total == 0.0:
        return 0.0
    edge = norms[bank.j_min] ** 2 + norms[bank.j_max] ** 2
    return float(edge / total)


# ---------------------------------------------------------------------------
# norms


def _lq(values: np.ndarray, q: float) -> float:
    values = np.asarray(values, dtype=float)
    if np.isinf(q):
        return float(values.max()) if values.size else 0.0
    return float(np.sum(values**q) ** (1.0 / q))


def besov_norm(f: SpectralField, spec: BesovSpec, bank: DyadicBank) -> float:
    if spec.homogeneous:
        if spec.s <= 0 and abs(f.coeffs[0, 0]) > 1e-12 * max(f.coefficient_norm(), 1e-300):
            raise NonzeroMeanError("homogeneous Besov norm with s <= 0 needs mean-zero data")
        vals = [
            2.0 ** (spec.s * j) * lp_norm(project_band(f, j, bank), spec.p)
            for j in bank.bands
        ]
        return _lq(np.array(vals), spec.q)
    vals = [lp_norm(lowpass_nonhom(f, 0, bank), spec.p)]
    for j in range(1, bank.j_max + 1):
        vals.append(2.0 ** (spec.s * j) * lp_norm(project_band(f, j, bank), spec.p))
    return _lq(np.array(vals), spec.q)


def intersection_norm(omega: SpectralField, s: float, q: float, bank: DyadicBank) -> float:
    """|omega| in (dotted B^s_{2,q}) intersect H^-1, as the sum of both norms."""
    return besov_norm(omega, BesovSpec(s=s, q=q, homogeneous=True), bank) + hminus1_norm(omega)


# ---------------------------------------------------------------------------
# Bony paraproduct


def paraproduct(f: SpectralField, g: SpectralField, bank: DyadicBank):
    """(T_f g, T_g f, R(f, g)) with dealiased physical-space products.

    Means are excluded by the homogeneous low pass; the reconstruction
    T_f g + T_g f + R = fg holds on mean-zero band-limited data up to the
    unresolved remainder.
    """
    require_same_grid(f, g)
    zero = SpectralField(f.grid, np.zeros_like(f.coeffs))
    t_fg, t_gf, remainder = zero, zero, zero
    bands_f = {j: project_band(f, j, bank) for j in bank.bands}
    bands_g = {j: project_band(g, j, bank) for j in bank.bands}
    for j in bank.bands:
        t_fg = t_fg + multiply(lowpass_hom(f, j - 2, bank), bands_g[j])
        t_gf = t_gf + multiply(lowpass_hom(g, j - 2, bank), bands_f[j])
        for jp in bank.bands:
            if abs(j - jp) <= 1:
                remainder = remainder + multiply(bands_f[j], bands_g[jp])
    return t_fg, t_gf, remainder


# ---------------------------------------------------------------------------
# CSV dump for the `bands` CLI subcommand


def band_profile_rows(bank: DyadicBank, n_radial: int = 400):
    """Rows (|xi|, label, value): each psi_j profile plus the partition sum."""
    r_max = bank.grid.xi_max
    radii = np.linspace(0.0, r_max, n_radial)
    rows = []
    total = np.zeros_like(radii)
    for j in bank.bands:
        prof = psi0(radii / 2.0**j)
        total += prof
        rows.extend((float(r), str(j), float(v)) for r, v in zip(radii, prof))
    rows.extend((float(r), "sum", float(v)) for r, v in zip(radii, total))
    return rows
