"""Frozen-transport linear iteration converging to the nonlinear solution.

Each iterate solves the LINEAR system

    d omega_{n+1}/dt + u_n.grad omega_{n+1} = kappa d1 rho_{n+1}
    d rho_{n+1}/dt   + u_n.grad rho_{n+1}   = kappa u_{2,n+1}

with mollified initial data (S_{n+2} omega_0, S_{n+2} rho_0), where u_n is
the previous iterate's velocity frozen in time (stored snapshots, cubic
interpolation).  The coupling runs through the unknown's own velocity, so
the quadratic energy cancellation survives iteration by iteration.

The seed iterate (n = 0) is the linear solve transported by
u = biot_savart(S_2 omega_0) held constant in time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .bands import BesovSpec, DyadicBank, besov_norm, intersection_norm
from .grid import GridSpec, SpectralField, VectorField, biot_savart
from .solver import StepperConfig, Trajectory, run


@dataclass
class IterationTrace:
    n: int
    t: np.ndarray
    a: np.ndarray  # A_n(t) in the (s, q) norms
    a_bar: np.ndarray | None  # difference norm vs iterate n-1 (None for n = 0)
    kappa: float
    s: float
    q: float
    a0: float  # norm of the unmollified data

    @property
    def sup_a(self) -> float:
        return float(self.a.max())

    @property
    def sup_a_bar(self) -> float:
        return float(self.a_bar.max()) if self.a_bar is not None else np.nan


class FrozenVelocity:
    """Time-sampled divergence-free velocity with cubic interpolation."""

    def __init__(self, times, velocities: list[VectorField]):
        times = np.asarray(times, dtype=float)
        if len(times) != len(velocities):
            raise ValueError("times and snapshots must align")
        self.times = times
        self.grid = velocities[0].grid
        if len(times) >= 2:
            u1 = np.stack([v.u1.coeffs for v in velocities])
            u2 = np.stack([v.u2.coeffs for v in velocities])
            self._s1 = CubicSpline(times, u1, axis=0)
            self._s2 = CubicSpline(times, u2, axis=0)
        else:
            self._s1 = self._s2 = None
            self._only = velocities[0]

    @classmethod
    def constant(cls, u: VectorField) -> "FrozenVelocity":
        return cls(np.array([0.0]), [u])

    def __call__(self, t: float) -> VectorField:
        if self._s1 is None:
            return self._only
        if t < self.times[0] - 1e-9 or t > self.times[-1] + 1e-9:
            raise ValueError(f"frozen velocity queried at t={t} outside [{self.times[0]}, {self.times[-1]}]")
        t = min(max(t, self.times[0]), self.times[-1])
        return VectorField(
            SpectralField(self.grid, self._s1(t)),
            SpectralField(self.grid, self._s2(t)),
        )

    @classmethod
    def from_trajectory(cls, traj: Trajectory) -> "FrozenVelocity":
        times = [s.t for s in traj.snapshots]
        vels = [biot_savart(s.omega) for s in traj.snapshots]
        return cls(np.array(times), vels)


# ---------------------------------------------------------------------------


def mollify_initial(omega0: SpectralField, rho0: SpectralField, n: int,
                    bank: DyadicBank):
    """(S_{n+2} omega_0, S_{n+2} rho_0); low-pass keeps rho's mean."""
    if n < 0:
        raise ValueError("iteration index must be >= 0")
    k = n + 2
    mult = bank.lowpass_multiplier(k)
    om = SpectralField(omega0.grid, mult * omega0.coeffs).drop_mean()
    rh = SpectralField(rho0.grid, mult * rho0.coeffs).with_mean(rho0.mean)
    return om, rh


def linear_solve(
    frozen: FrozenVelocity,
    omega_init: SpectralField,
    rho_init: SpectralField,
    kappa: float,
    t_final: float,
    config: StepperConfig,
    **run_kwargs,
) -> Trajectory:
    """Time-step the frozen-transport linear system; same schemes as `run`."""
    return run(
        omega_init, rho_init, kappa, t_final, config,
        velocity_fn=lambda omega, t: frozen(t),
        **run_kwargs,
    )


def _difference_norm(sa, sb, bank: DyadicBank, s: float, q: float) -> float:
    """|omega_a - omega_b| in (B^{s-2} cap H^-1) + |rho_a - rho_b| in B^{s-1}."""
    # both iterates are mean-zero in omega; the difference's mean is pure
    # round-off and would trip the homogeneous-norm mean guard
    dom = (sa.omega - sb.omega).drop_mean()
    drh = sa.rho - sb.rho
    return intersection_norm(dom, s - 2.0, q, bank) + besov_norm(
        drh, BesovSpec(s=s - 1.0, q=q, homogeneous=False), bank
    )


def picard_run(
    omega0: SpectralField,
    rho0: SpectralField,
    kappa: float,
    t_final: float,
    n_max: int,
    config: StepperConfig,
    s: float = 2.0,
    q: float = 1.0,
    n_samples: int = 21,
    bank: DyadicBank | None = None,
    return_states: bool = False,
):
    """Iterates n = 0..n_max; returns the list of IterationTrace.

    With return_states=True also returns the final iterate's snapshots.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    grid = omega0.grid
    if bank is None:
        bank = DyadicBank(grid)
    a0 = intersection_norm(omega0, s - 1.0, q, bank) + besov_norm(
        rho0, BesovSpec(s=s, q=q, homogeneous=False), bank
    )
    sample_times = np.linspace(0.0, t_final, n_samples)

    traces = []
    prev_snapshots = None
    frozen = FrozenVelocity.constant(biot_savart(mollify_initial(omega0, rho0, 0, bank)[0]))
    for n in range(n_max + 1):
        om_init, rh_init = mollify_initial(omega0, rho0, n, bank)
        traj = linear_solve(
            frozen, om_init, rh_init, kappa, t_final, config,
            sample_times=sample_times, store_snapshots=True,
            bank=bank, s=s, q=q,
        )
        if traj.status != "ok" or len(traj.snapshots) != len(sample_times):
            raise RuntimeError(f"linear solve at iteration {n} did not complete")
        a = np.array([
            intersection_norm(st.omega, s - 1.0, q, bank)
            + besov_norm(st.rho, BesovSpec(s=s, q=q, homogeneous=False), bank)
            for st in traj.snapshots
        ])
        if prev_snapshots is None:
            a_bar = None
        else:
            a_bar = np.array([
                _difference_norm(sa, sb, bank, s, q)
                for sa, sb in zip(traj.snapshots, prev_snapshots)
            ])
        traces.append(IterationTrace(n=n, t=sample_times.copy(), a=a, a_bar=a_bar,
                                     kappa=kappa, s=s, q=q, a0=a0))
        prev_snapshots = traj.snapshots
        frozen = FrozenVelocity.from_trajectory(traj)
    if return_states:
        return traces, prev_snapshots
    return traces


def cauchy_ratios(traces) -> np.ndarray:
    """sup_t A-bar_{n+1} / sup_t A-bar_n for n = 1..n_max-1."""
    sups = [tr.sup_a_bar for tr in traces if tr.a_bar is not None]
    sups = np.array(sups)
    with np.errstate(divide="ignore", invalid="ignore"):
        return sups[1:] / sups[:-1]


def uniformity_report(traces_by_kappa: dict, spread_limit: float = 1.5) -> dict:
    """Per-kappa sup_{n,t} A_n / A_0 table with a spread pass flag."""
    entries = {}
    for kappa, traces in traces_by_kappa.items():
        a0 = traces[0].a0
        sup = max(tr.sup_a for tr in traces)
        entries[float(kappa)] = sup / a0 if a0 > 0 else 0.0
    vals = [v for v in entries.values() if v > 0]
    spread = (max(vals) / min(vals)) if vals else 1.0
    return {
        "sup_ratio_by_kappa": entries,
        "spread": spread,
        "spread_limit": spread_limit,
        "pass": spread < spread_limit,
    }
