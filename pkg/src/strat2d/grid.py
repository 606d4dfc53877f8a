"""Periodic-grid spectral fields and exact Fourier-multiplier operators.

The domain is the square torus [0, 2*pi*L0)^2 sampled on an n x n grid.
Coefficients are stored in numpy fft layout, indexed by the integer wave
vector k with |k_i| <= n/2; the physical frequency is xi = k / L0.
Normalization is chosen so a pure mode cos(k.x) has coefficient 1/2 at +-k.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .errors import (
    GridMismatchError,
    HermitianSymmetryError,
    NegativePowerOnNonzeroMeanError,
    NonzeroMeanError,
)

MEAN_TOL = 1e-12
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Square periodic grid: n points per axis on [0, 2*pi*box_scale)^2."""

    n: int
    box_scale: float = 1.0
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"n_per_axis must be even and >= 8, got {self.n}")
        if self.box_scale <= 0:
            raise ValueError("box_scale must be positive")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavenumbers along one axis in fft order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n)

    @cached_property
    def k1(self) -> np.ndarray:
        return self.k[:, None] * np.ones((1, self.n))

    @cached_property
    def k2(self) -> np.ndarray:
        return np.ones((self.n, 1)) * self.k[None, :]

    @cached_property
    def xi1(self) -> np.ndarray:
        return self.k1 / self.box_scale

    @cached_property
    def xi2(self) -> np.ndarray:
        return self.k2 / self.box_scale

    @cached_property
    def xi_sq(self) -> np.ndarray:
        return self.xi1**2 + self.xi2**2

    @cached_property
    def xi_abs(self) -> np.ndarray:
        return np.sqrt(self.xi_sq)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cut = self.dealias_fraction * self.n / 2
        return (np.abs(self.k1) <= cut) & (np.abs(self.k2) <= cut)

    @property
    def dealias_cutoff(self) -> float:
        """Largest retained |xi| along an axis (inscribed-square radius)."""
        return self.dealias_fraction * (self.n / 2) / self.box_scale

    @property
    def xi_max(self) -> float:
        return (self.n / 2) / self.box_scale

    @property
    def dx(self) -> float:
        return 2 * np.pi * self.box_scale / self.n

    @property
    def area(self) -> float:
        return (2 * np.pi * self.box_scale) ** 2

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    def meshgrid(self):
        return np.meshgrid(self.x, self.x, indexing="ij")


def _conjugate_reflection(coeffs: np.ndarray) -> np.ndarray:
    """conj(c(-k)) in fft index layout."""
    return np.conj(np.roll(coeffs[::-1, ::-1], 1, axis=(0, 1)))


@dataclass(frozen=True)
class SpectralField:
    """Complex Fourier coefficients of a real scalar field on a GridSpec."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (self.grid.n, self.grid.n):
            raise ValueError("coefficient array does not match grid")

    # -- small arithmetic helpers used throughout ------------------------
    def __add__(self, other: "SpectralField") -> "SpectralField":
        require_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        require_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs)

    @property
    def mean(self) -> float:
        return float(self.coeffs[0, 0].real)

    def with_mean(self, value: float) -> "SpectralField":
        c = self.coeffs.copy()
        c[0, 0] = value
        return replace(self, coeffs=c)

    def drop_mean(self) -> "SpectralField":
        return self.with_mean(0.0)

    def coefficient_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def hermitian_defect(self) -> float:
        scale = np.abs(self.coeffs).max()
        if scale == 0.0:
            return 0.0
        return float(np.abs(self.coeffs - _conjugate_reflection(self.coeffs)).max() / scale)


@dataclass(frozen=True)
class VectorField:
    """Pair of spectral components on a common grid."""

    u1: SpectralField
    u2: SpectralField

    def __post_init__(self):
        if self.u1.grid != self.u2.grid:
            raise GridMismatchError("vector components on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.u1.grid

    def divergence(self) -> SpectralField:
        return derivative(self.u1, 1) + derivative(self.u2, 2)


def require_same_grid(*fields) -> None:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError("fields live on different grids")


def require_mean_zero(f: SpectralField, what: str = "operator") -> None:
    if abs(f.coeffs[0, 0]) > MEAN_TOL * max(f.coefficient_norm(), abs(f.coeffs[0, 0])):
        raise NonzeroMeanError(f"{what} requires a mean-zero field")


# ---------------------------------------------------------------------------
# transforms


def forward_transform(grid: GridSpec, samples: np.ndarray) -> SpectralField:
    """Real grid samples -> spectral coefficients (pure mode amplitude 1/2)."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (grid.n, grid.n):
        raise ValueError(f"expected samples of shape {(grid.n, grid.n)}, got {samples.shape}")
    return SpectralField(grid, np.fft.fft2(samples) / grid.n**2)


def inverse_transform(f: SpectralField) -> np.ndarray:
    """Spectral coefficients -> real grid samples; checks Hermitian symmetry."""
    defect = f.hermitian_defect()
    if defect > 1e-8:
        raise HermitianSymmetryError(f"coefficients not Hermitian (defect {defect:.2e})")
    return np.real(np.fft.ifft2(f.coeffs) * f.grid.n**2)


# ---------------------------------------------------------------------------
# multiplier operators


def derivative(f: SpectralField, axis: int) -> SpectralField:
    if axis not in (1, 2):
        raise ValueError("axis must be 1 or 2")
    xi = f.grid.xi1 if axis == 1 else f.grid.xi2
    return SpectralField(f.grid, 1j * xi * f.coeffs)


def gradient(f: SpectralField) -> VectorField:
    return VectorField(derivative(f, 1), derivative(f, 2))


def lambda_power(f: SpectralField, s: float) -> SpectralField:
    """Lambda^s = (-Laplacian)^(s/2); zero mode is annihilated."""
    if s < 0 and abs(f.coeffs[0, 0]) > MEAN_TOL * max(f.coefficient_norm(), 1e-300):
        raise NegativePowerOnNonzeroMeanError(
            "Lambda^s with s < 0 requires a mean-zero field"
        )
    mult = np.zeros_like(f.grid.xi_abs)
    nz = f.grid.xi_abs > 0
    mult[nz] = f.grid.xi_abs[nz] ** s
    return SpectralField(f.grid, mult * f.coeffs)


def inverse_laplacian(f: SpectralField) -> SpectralField:
    require_mean_zero(f, "(-Laplacian)^-1")
    mult = np.zeros_like(f.grid.xi_sq)
    nz = f.grid.xi_sq > 0
    mult[nz] = 1.0 / f.grid.xi_sq[nz]
    return SpectralField(f.grid, mult * f.coeffs)


def riesz(f: SpectralField, axis: int = 1) -> SpectralField:
    """Riesz transform R_axis, symbol i*xi_axis/|xi|."""
    require_mean_zero(f, "Riesz transform")
    xi = f.grid.xi1 if axis == 1 else f.grid.xi2
    mult = np.zeros_like(f.grid.xi_abs)
    nz = f.grid.xi_abs > 0
    mult[nz] = xi[nz] / f.grid.xi_abs[nz]
    return SpectralField(f.grid, 1j * mult * f.coeffs)


def riesz1(f: SpectralField) -> SpectralField:
    return riesz(f, 1)


def biot_savart(omega: SpectralField) -> VectorField:
    """u = perp-gradient of (-Laplacian)^-1 omega; divergence-free."""
    require_mean_zero(omega, "Biot-Savart")
    g = omega.grid
    inv = np.zeros_like(g.xi_sq)
    nz = g.xi_sq > 0
    inv[nz] = 1.0 / g.xi_sq[nz]
    u1 = SpectralField(g, -1j * g.xi2 * inv * omega.coeffs)
    u2 = SpectralField(g, 1j * g.xi1 * inv * omega.coeffs)
    return VectorField(u1, u2)


def dealias(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * f.grid.dealias_mask)


# ---------------------------------------------------------------------------
# products, norms, pairings


def multiply(f: SpectralField, g: SpectralField, dealias_product: bool = True) -> SpectralField:
    """Pointwise product formed in physical space, optionally dealiased."""
    require_same_grid(f, g)
    prod = forward_transform(f.grid, inverse_transform(f) * inverse_transform(g))
    return dealias(prod) if dealias_product else prod


def advect(u: VectorField, g: SpectralField) -> SpectralField:
    """dealias(u . grad g) via physical-space products."""
    require_same_grid(u.u1, g)
    n2 = u.grid.n**2
    u1 = np.real(np.fft.ifft2(u.u1.coeffs) * n2)
    u2 = np.real(np.fft.ifft2(u.u2.coeffs) * n2)
    g1 = np.real(np.fft.ifft2(derivative(g, 1).coeffs) * n2)
    g2 = np.real(np.fft.ifft2(derivative(g, 2).coeffs) * n2)
    prod = np.fft.fft2(u1 * g1 + u2 * g2) / n2
    return dealias(SpectralField(u.grid, prod))


def lp_norm(f: SpectralField, p: float) -> float:
    """L^p norm; p=2 via Plancherel, p=inf grid max, else grid quadrature."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 2:
        return 2 * np.pi * f.grid.box_scale * f.coefficient_norm()
    samples = inverse_transform(f)
    if np.isinf(p):
        return float(np.abs(samples).max())
    cell = (2 * np.pi * f.grid.box_scale / f.grid.n) ** 2
    return float((np.sum(np.abs(samples) ** p) * cell) ** (1.0 / p))


def inner_l2(f: SpectralField, g: SpectralField) -> float:
    require_same_grid(f, g)
    return float(f.grid.area * np.real(np.sum(f.coeffs * np.conj(g.coeffs))))


def inner_hminus1(f: SpectralField, g: SpectralField) -> float:
    require_mean_zero(f, "H^-1 pairing")
    require_mean_zero(g, "H^-1 pairing")
    return inner_l2(lambda_power(f, -1.0), lambda_power(g, -1.0))


def hminus1_norm(f: SpectralField) -> float:
    require_mean_zero(f, "H^-1 norm")
    return lp_norm(lambda_power(f, -1.0), 2)


# ---------------------------------------------------------------------------
# snapshot container (bit-exact round trip)


def save_field(f: SpectralField, path, kind: str = "coeffs") -> None:
    """Write a self-describing field snapshot (.npz)."""
    if kind not in ("coeffs", "samples"):
        raise ValueError("kind must be 'coeffs' or 'samples'")
    payload = {
        "format": np.array("strat2d-field-v1"),
        "kind": np.array(kind),
        "n": np.array(f.grid.n),
        "box_scale": np.array(f.grid.box_scale),
        "dealias_fraction": np.array(f.grid.dealias_fraction),
    }
    if kind == "coeffs":
        payload["coeffs"] = f.coeffs  # fft layout, k1 slow / k2 fast
    else:
        payload["samples"] = inverse_transform(f)  # row-major, x2 fastest
    np.savez(path, **payload)


def load_field(path) -> SpectralField:
    with np.load(path) as data:
        if str(data["format"]) != "strat2d-field-v1":
            raise ValueError("not a strat2d field snapshot")
        grid = GridSpec(
            n=int(data["n"]),
            box_scale=float(data["box_scale"]),
            dealias_fraction=float(data["dealias_fraction"]),
        )
        if str(data["kind"]) == "coeffs":
            return SpectralField(grid, data["coeffs"])
        return forward_transform(grid, data["samples"])
