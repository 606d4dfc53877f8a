"""Time integration of the stratified vorticity system on the torus.

    d omega/dt + u.grad omega = kappa * d1 rho
    d rho/dt   + u.grad rho   = kappa * u2,     u = biot_savart(omega)

Two steppers: a classical explicit 4-stage Runge-Kutta scheme on (omega, rho),
and an integrating-factor variant that works in the diagonal variables
V+- = omega +- Lambda rho, where the stratified coupling is the exact phase
multiplier exp(+-i kappa t xi1/|xi|) and only the advection terms are stepped
explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .bands import BesovSpec, DyadicBank, besov_norm, intersection_norm
from .errors import BlowupSuspectedError
from .grid import (
    GridSpec,
    SpectralField,
    VectorField,
    advect,
    biot_savart,
    dealias,
    derivative,
    hminus1_norm,
    inverse_transform,
    lambda_power,
    lp_norm,
    require_mean_zero,
)

GUARD_FACTOR = 1e6


@dataclass(frozen=True)
class SimState:
    """Instantaneous solver state: spectral (omega, rho) at time t."""

    omega: SpectralField
    rho: SpectralField
    t: float
    kappa: float

    @property
    def grid(self) -> GridSpec:
        return self.omega.grid


@dataclass(frozen=True)
class StepperConfig:
    scheme: str = "rk4"  # "rk4" | "ifrk4"
    dt: float = 1e-2
    adaptive: bool = False
    cfl_advect: float = 0.5  # c0 in dt <= c0 dx / |u|_inf
    cfl_coupling: float = 0.5  # c1 in dt <= c1 / (1 + |kappa|); rk4 only
    dealias_on: bool = True
    guard_factor: float = GUARD_FACTOR

    def __post_init__(self):
        if self.scheme not in ("rk4", "ifrk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")


@dataclass
class DiagnosticsRecord:
    t: float
    energy: float  # |omega|_{H^-1}^2 + |rho|_{L2}^2
    z: float  # z_{s,q}
    grad_u_inf: float
    grad_rho_inf: float
    vplus_band_norm: float  # |V+| in dotted B^0_{inf,1}
    vminus_band_norm: float
    m_integral: float  # int_0^t max(|V+|,|V-|) band norm
    b_integral: float  # int_0^t (|grad rho|_inf + |grad u|_inf)


@dataclass
class Trajectory:
    grid: GridSpec
    kappa: float
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # SimState at sample times
    status: str = "ok"  # "ok" | "blowup"
    t_end: float = 0.0
    nonlinear: bool = True  # whether the advection terms were active

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


# ---------------------------------------------------------------------------
# right-hand side


def _own_velocity(omega: SpectralField, t: float) -> VectorField:
    return biot_savart(omega)


def rhs(state: SimState, velocity_fn=_own_velocity):
    """(d omega, d rho); `velocity_fn(omega, t)` supplies the advecting field.

    The kappa * u2 coupling always uses the unknown's own Biot-Savart
    velocity, so the same routine serves the frozen-transport linear solves.
    """
    u_adv = velocity_fn(state.omega, state.t)
    u_own = biot_savart(state.omega)
    domega = -advect(u_adv, state.omega) + state.kappa * derivative(state.rho, 1)
    drho = -advect(u_adv, state.rho) + state.kappa * u_own.u2
    return domega, drho


# ---------------------------------------------------------------------------
# steppers


def _rk4_step(state: SimState, dt: float, velocity_fn) -> SimState:
    def f(om, rh, t):
        return rhs(SimState(om, rh, t, state.kappa), velocity_fn)

    om, rh, t = state.omega, state.rho, state.t
    k1o, k1r = f(om, rh, t)
    k2o, k2r = f(om + (dt / 2) * k1o, rh + (dt / 2) * k1r, t + dt / 2)
    k3o, k3r = f(om + (dt / 2) * k2o, rh + (dt / 2) * k2r, t + dt / 2)
    k4o, k4r = f(om + dt * k3o, rh + dt * k3r, t + dt)
    om1 = om + (dt / 6) * (k1o + 2 * k2o + 2 * k3o + k4o)
    rh1 = rh + (dt / 6) * (k1r + 2 * k2r + 2 * k3r + k4r)
    return SimState(om1, rh1, t + dt, state.kappa)


def _phase(grid: GridSpec, kappa: float, h: float) -> np.ndarray:
    """exp(i kappa h xi1/|xi|) (the V+ propagator; conjugate for V-)."""
    mult = np.zeros_like(grid.xi_abs)
    nz = grid.xi_abs > 0
    mult[nz] = grid.xi1[nz] / grid.xi_abs[nz]
    return np.exp(1j * kappa * h * mult)


def _split(state: SimState):
    """State -> (Vp, Vm coefficient arrays, rho mean)."""
    lam = state.grid.xi_abs
    lam_rho = lam * state.rho.coeffs
    return (
        state.omega.coeffs + lam_rho,
        state.omega.coeffs - lam_rho,
        state.rho.coeffs[0, 0],
    )


def _merge(grid: GridSpec, vp: np.ndarray, vm: np.ndarray, rho_mean, t, kappa) -> SimState:
    omega = SpectralField(grid, 0.5 * (vp + vm))
    lam_rho = 0.5 * (vp - vm)
    inv = np.zeros_like(grid.xi_abs)
    nz = grid.xi_abs > 0
    inv[nz] = 1.0 / grid.xi_abs[nz]
    rho_c = inv * lam_rho
    rho_c[0, 0] = rho_mean
    return SimState(omega, SpectralField(grid, rho_c), t, kappa)


def _ifrk4_step(state: SimState, dt: float, velocity_fn, nonlinear: bool = True) -> SimState:
    """Lawson (integrating-factor) RK4 in the diagonal variables."""
    grid, kappa = state.grid, state.kappa
    vp, vm, rho_mean = _split(state)
    e_half = _phase(grid, kappa, dt / 2)
    e_full = _phase(grid, kappa, dt)

    def nl(vp_c, vm_c, t):
        """N+- = -advect(u, omega) -+ Lambda advect(u, rho)."""
        if not nonlinear:
            z = np.zeros_like(vp_c)
            return z, z
        st = _merge(grid, vp_c, vm_c, rho_mean, t, kappa)
        u_adv = velocity_fn(st.omega, t)
        a = advect(u_adv, st.omega).coeffs
        b = grid.xi_abs * advect(u_adv, st.rho).coeffs
        return -a - b, -a + b

    t = state.t
    k1p, k1m = nl(vp, vm, t)
    k2p, k2m = nl(e_half * (vp + dt / 2 * k1p), np.conj(e_half) * (vm + dt / 2 * k1m), t + dt / 2)
    k2p, k2m = np.conj(e_half) * k2p, e_half * k2m
    k3p, k3m = nl(e_half * (vp + dt / 2 * k2p), np.conj(e_half) * (vm + dt / 2 * k2m), t + dt / 2)
    k3p, k3m = np.conj(e_half) * k3p, e_half * k3m
    k4p, k4m = nl(e_full * (vp + dt * k3p), np.conj(e_full) * (vm + dt * k3m), t + dt)
    k4p, k4m = np.conj(e_full) * k4p, e_full * k4m
    vp1 = e_full * (vp + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p))
    vm1 = np.conj(e_full) * (vm + dt / 6 * (k1m + 2 * k2m + 2 * k3m + k4m))
    return _merge(grid, vp1, vm1, rho_mean, t + dt, kappa)


def step(state: SimState, dt: float, config: StepperConfig, velocity_fn=_own_velocity,
         nonlinear: bool = True) -> SimState:
    if config.scheme == "ifrk4":
        new = _ifrk4_step(state, dt, velocity_fn, nonlinear=nonlinear)
    else:
        new = _rk4_step(state, dt, velocity_fn)
    if not (np.isfinite(new.omega.coeffs).all() and np.isfinite(new.rho.coeffs).all()):
        raise BlowupSuspectedError("non-finite coefficients after step", t=new.t)
    return new


def cfl_dt(state: SimState, config: StepperConfig, velocity_fn=_own_velocity) -> float:
    """Adaptive step size; falls back to config.dt as an upper bound."""
    u = velocity_fn(state.omega, state.t)
    speed = max(
        np.abs(inverse_transform(u.u1)).max(),
        np.abs(inverse_transform(u.u2)).max(),
    )
    dt = config.dt
    if speed > 0:
        dt = min(dt, config.cfl_advect * state.grid.dx / speed)
    if config.scheme == "rk4":
        dt = min(dt, config.cfl_coupling / (1.0 + abs(state.kappa)))
    return dt


# ---------------------------------------------------------------------------
# diagnostics


def grad_inf(f: SpectralField) -> float:
    """max over grid points of the euclidean norm of grad f."""
    g1 = inverse_transform(derivative(f, 1))
    g2 = inverse_transform(derivative(f, 2))
    return float(np.sqrt(g1**2 + g2**2).max())


def velocity_grad_inf(u: VectorField) -> float:
    """max over grid points of the Frobenius norm of grad u."""
    parts = [
        inverse_transform(derivative(comp, ax))
        for comp in (u.u1, u.u2)
        for ax in (1, 2)
    ]
    return float(np.sqrt(sum(p**2 for p in parts)).max())


def z_norm(omega: SpectralField, rho: SpectralField, bank: DyadicBank,
           s: float = 2.0, q: float = 1.0) -> float:
    """z_{s,q} = |omega| in (dotted B^{s-1}_{2,q} cap H^-1) + |rho| in B^s_{2,q}."""
    return intersection_norm(omega, s - 1.0, q, bank) + besov_norm(
        rho, BesovSpec(s=s, q=q, homogeneous=False), bank
    )


_B0INF1 = BesovSpec(s=0.0, p=np.inf, q=1.0, homogeneous=True)


def diagnostics(state: SimState, bank: DyadicBank, s: float, q: float,
                prev: DiagnosticsRecord | None) -> DiagnosticsRecord:
    omega, rho = state.omega, state.rho
    u = biot_savart(omega)
    lam_rho = lambda_power(rho, 1.0)
    vplus = omega + lam_rho
    vminus = omega - lam_rho
    rec = DiagnosticsRecord(
        t=state.t,
        energy=hminus1_norm(omega) ** 2 + lp_norm(rho, 2) ** 2,
        z=z_norm(omega, rho, bank, s, q),
        grad_u_inf=velocity_grad_inf(u),
        grad_rho_inf=grad_inf(rho),
        vplus_band_norm=besov_norm(vplus, _B0INF1, bank),
        vminus_band_norm=besov_norm(vminus, _B0INF1, bank),
        m_integral=0.0,
        b_integral=0.0,
    )
    if prev is not None:
        h = rec.t - prev.t
        v_now = max(rec.vplus_band_norm, rec.vminus_band_norm)
        v_prev = max(prev.vplus_band_norm, prev.vminus_band_norm)
        rec.m_integral = prev.m_integral + 0.5 * h * (v_now + v_prev)
        b_now = rec.grad_rho_inf + rec.grad_u_inf
        b_prev = prev.grad_rho_inf + prev.grad_u_inf
        rec.b_integral = prev.b_integral + 0.5 * h * (b_now + b_prev)
    return rec


# ---------------------------------------------------------------------------
# driver


def run(
    omega0: SpectralField,
    rho0: SpectralField,
    kappa: float,
    t_final: float,
    config: StepperConfig,
    sample_times=None,
    n_samples: int = 21,
    store_snapshots: bool = False,
    bank: DyadicBank | None = None,
    s: float = 2.0,
    q: float = 1.0,
    velocity_fn=_own_velocity,
    nonlinear: bool = True,
    stop_when=None,
) -> Trajectory:
    """Integrate to t_final, recording diagnostics at the sample times.

    `stop_when(record)` -> bool triggers an early stop (used by `lifespan`).
    Raises nothing on suspected blow-up: the trajectory is returned with
    status "blowup" and whatever records were collected.
    """
    require_mean_zero(omega0, "time integration")
    grid = omega0.grid
    if config.dealias_on:
        omega0, rho0 = dealias(omega0), dealias(rho0)
    if bank is None:
        bank = DyadicBank(grid)
    if sample_times is None:
        sample_times = np.linspace(0.0, t_final, n_samples)
    sample_times = np.asarray(sample_times, dtype=float)
    if sample_times[0] != 0.0:
        raise ValueError("sample times must start at 0")

    state = SimState(omega0, rho0, 0.0, kappa)
    traj = Trajectory(grid=grid, kappa=kappa, nonlinear=nonlinear)
    rec = diagnostics(state, bank, s, q, None)
    traj.records.append(rec)
    if store_snapshots:
        traj.snapshots.append(state)
    z0 = rec.z

    for target in sample_times[1:]:
        try:
            while state.t < target - 1e-12 * max(1.0, target):
                dt = cfl_dt(state, config, velocity_fn) if config.adaptive else config.dt
                dt = min(dt, target - state.t)
                state = step(state, dt, config, velocity_fn, nonlinear=nonlinear)
        except BlowupSuspectedError:
            traj.status = "blowup"
            break
        rec = diagnostics(state, bank, s, q, traj.records[-1])
        traj.records.append(rec)
        if store_snapshots:
            traj.snapshots.append(state)
        if not np.isfinite(rec.z) or (z0 > 0 and rec.z > config.guard_factor * z0):
            traj.status = "blowup"
            break
        if stop_when is not None and stop_when(rec):
            break
    traj.t_end = traj.records[-1].t
    return traj


def lifespan(
    omega0: SpectralField,
    rho0: SpectralField,
    kappa: float,
    t_max: float,
    theta: float,
    config: StepperConfig,
    **run_kwargs,
):
    """First time B(t) = int (|grad rho|_inf + |grad u|_inf) crosses theta.

    Returns (t_life, trajectory); t_life = t_max when no crossing occurs.
    """
    if theta <= 0:
        raise ValueError("threshold must be positive")
    traj = run(
        omega0, rho0, kappa, t_max, config,
        stop_when=lambda r: r.b_integral >= theta,
        **run_kwargs,
    )
    b = traj.column("b_integral")
    t = traj.column("t")
    above = np.nonzero(b >= theta)[0]
    if above.size == 0:
        return t_max, traj
    i = above[0]
    if i == 0:
        return float(t[0]), traj
    # linear interpolation of the crossing inside the last sample interval
    frac = (theta - b[i - 1]) / (b[i] - b[i - 1])
    return float(t[i - 1] + frac * (t[i] - t[i - 1])), traj


def gronwall_fit(records) -> float:
    """Smallest C with z(t) <= z(0) exp(C B(t)) at every sample (0 if none binds)."""
    if not records:
        raise ValueError("empty diagnostics series")
    z0 = records[0].z
    best = 0.0
    for r in records[1:]:
        if r.b_integral > 0 and z0 > 0 and r.z > z0:
            best = max(best, np.log(r.z / z0) / r.b_integral)
    return float(best)
