"""Experiment orchestration: config validation, deterministic sweeps,
parallel execution, and CSV/JSON emission.

Every experiment expands into a list of independent runs (the sweep
schedule).  Runs may execute on a thread pool (STRAT2D_THREADS caps the
width) but results are always collected and written in schedule order, so
outputs are byte-identical regardless of parallelism.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bands import DyadicBank, band_profile_rows
from .dispersive import (
    Kappa0Inputs,
    fit_slope,
    kappa0_estimate,
    strichartz_measure,
)
from .errors import ConfigError
from .estimates import resolution_stability
from .fields import PRESETS, coherent_band_field, make_initial_data
from .grid import GridSpec, save_field
from .picard import cauchy_ratios, picard_run, uniformity_report
from .solver import StepperConfig, gronwall_fit, lifespan, run

KINDS = (
    "simulate",
    "picard",
    "strichartz",
    "lifespan-sweep",
    "verify-estimates",
    "kappa0",
    "bands",
)

DIAGNOSTIC_COLUMNS = (
    "t",
    "energy",
    "z",
    "grad_u_inf",
    "grad_rho_inf",
    "vplus_band_norm",
    "vminus_band_norm",
    "m_integral",
    "b_integral",
)


def thread_count() -> int:
    """Worker cap from STRAT2D_THREADS (default: all cores)."""
    raw = os.environ.get("STRAT2D_THREADS", "")
    if raw.strip():
        try:
            value = int(raw)
        except ValueError as exc:
            raise ConfigError(f"STRAT2D_THREADS must be an integer, got {raw!r}") from exc
        if value < 1:
            raise ConfigError("STRAT2D_THREADS must be >= 1")
        return value
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    kind: str
    grid: dict = field(default_factory=lambda: {"n": 64})
    scheme: str = "ifrk4"
    dt: float = 5e-3
    adaptive: bool = False
    initial_data: dict = field(default_factory=lambda: {"name": "taylor-green"})
    kappa_list: list = field(default_factory=lambda: [0.0])
    seeds: list = field(default_factory=lambda: [0])
    s: float = 2.0
    q: float = 1.0
    t_final: float = 1.0
    n_samples: int = 41
    snapshots: bool = False
    output_dir: str = "out"
    # lifespan
    threshold: float = 8.0
    t_max: float = 2.0
    # picard
    n_max: int = 8
    spread_limit: float = 1.5
    # strichartz
    gamma: float = 4.0
    r: float = float("inf")
    window: float = 0.5
    # verify-estimates
    lemma: str = "bracket"
    trials: int = 100
    alpha: float = 2.5
    # kappa0
    kappa0_inputs: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; have {KINDS}")
        if not self.kappa_list:
            raise ConfigError("kappa list must be nonempty")
        if not self.seeds:
            raise ConfigError("seed list must be nonempty")
        name = self.initial_data.get("name")
        if name not in PRESETS:
            raise ConfigError(f"unknown initial-data preset {name!r}")
        if self.scheme not in ("rk4", "ifrk4"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.dt <= 0 or self.t_final <= 0:
            raise ConfigError("dt and t_final must be positive")

    def grid_spec(self) -> GridSpec:
        return GridSpec(**self.grid)

    def stepper(self, scheme: str | None = None) -> StepperConfig:
        return StepperConfig(scheme=scheme or self.scheme, dt=self.dt, adaptive=self.adaptive)

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        out["r"] = "inf" if np.isinf(self.r) else self.r
        return out


def load_config(path, overrides=()) -> ExperimentConfig:
    with open(path) as fh:
        raw = json.load(fh)
    for item in overrides:
        key, _, value = item.partition("=")
        if not _:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        node = raw
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = parsed
    if "r" in raw and raw["r"] == "inf":
        raw["r"] = float("inf")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig(**raw)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# sweep schedule


@dataclass(frozen=True)
class RunSpec:
    index: int
    kappa: float
    seed: int
    scheme: str

    @property
    def tag(self) -> str:
        kap = f"{self.kappa:g}".replace(".", "p").replace("-", "m")
        return f"run{self.index:03d}_kappa{kap}_seed{self.seed}_{self.scheme}"


def sweep_schedule(config: ExperimentConfig) -> list[RunSpec]:
    """Deterministic expansion kappa x seed x scheme, in that nesting order."""
    config.validate()
    specs = []
    idx = 0
    for kappa in config.kappa_list:
        for seed in config.seeds:
            specs.append(RunSpec(index=idx, kappa=float(kappa), seed=int(seed),
                                 scheme=config.scheme))
            idx += 1
    return specs


# ---------------------------------------------------------------------------
# writers


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def diagnostics_rows(traj):
    return [[getattr(r, c) for c in DIAGNOSTIC_COLUMNS] for r in traj.records]


# ---------------------------------------------------------------------------
# experiment drivers


@dataclass
class RunManifest:
    config: dict
    version: str
    wall_clock: float
    outputs: list
    flags: dict
    runs: list

    @property
    def passed(self) -> bool:
        return all(self.flags.values())


def _parallel_map(fn, items):
    workers = min(thread_count(), max(len(items), 1))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _simulate(config: ExperimentConfig, outdir: Path):
    grid = config.grid_spec()
    bank = DyadicBank(grid)
    schedule = sweep_schedule(config)

    def one(spec: RunSpec):
        data = dict(config.initial_data)
        if data.get("name") == "random-spectrum":
            data["seed"] = spec.seed
        omega0, rho0 = make_initial_data(grid, data)
        try:
            traj = run(omega0, rho0, spec.kappa, config.t_final,
                       config.stepper(spec.scheme), n_samples=config.n_samples,
                       store_snapshots=config.snapshots, bank=bank,
                       s=config.s, q=config.q)
            return spec, traj, None
        except Exception as exc:  # crash isolation: siblings keep running
            return spec, None, f"{type(exc).__name__}: {exc}"

    outputs, runs, flags = [], [], {}
    for spec, traj, err in _parallel_map(one, schedule):
        entry = {"tag": spec.tag, "kappa": spec.kappa, "seed": spec.seed,
                 "scheme": spec.scheme}
        if err is not None:
            entry["status"] = "error"
            entry["error"] = err
        else:
            csv_path = outdir / f"{spec.tag}_diagnostics.csv"
            write_csv(csv_path, DIAGNOSTIC_COLUMNS, diagnostics_rows(traj))
            outputs.append(csv_path.name)
            entry["status"] = traj.status
            entry["c6"] = gronwall_fit(traj.records)
            if config.snapshots:
                snap = outdir / f"{spec.tag}_final_omega.npz"
                save_field(traj.snapshots[-1].omega, snap)
                outputs.append(snap.name)
        runs.append(entry)
    flags["all_runs_completed"] = all(r["status"] in ("ok", "blowup") for r in runs)
    return outputs, flags, runs


def _lifespan_sweep(config: ExperimentConfig, outdir: Path):
    grid = config.grid_spec()
    bank = DyadicBank(grid)
    schedule = sweep_schedule(config)

    def one(spec: RunSpec):
        data = dict(config.initial_data)
        omega0, rho0 = make_initial_data(grid, data)
        try:
            t_life, traj = lifespan(omega0, rho0, spec.kappa, config.t_max,
                                    config.threshold, config.stepper(spec.scheme),
                                    n_samples=config.n_samples, bank=bank,
                                    s=config.s, q=config.q)
            return spec, t_life, traj, None
        except Exception as exc:
            return spec, None, None, f"{type(exc).__name__}: {exc}"

    rows, outputs, runs = [], [], []
    lifespans = []
    for spec, t_life, traj, err in _parallel_map(one, schedule):
        entry = {"tag": spec.tag, "kappa": spec.kappa, "status": "ok" if err is None else "error"}
        if err is not None:
            entry["error"] = err
        else:
            curve = outdir / f"{spec.tag}_bcurve.csv"
            write_csv(curve, DIAGNOSTIC_COLUMNS, diagnostics_rows(traj))
            outputs.append(curve.name)
            rows.append([spec.kappa, t_life, curve.name])
            lifespans.append((spec.kappa, t_life))
        runs.append(entry)
    table = outdir / "lifespan_table.csv"
    write_csv(table, ("kappa", "t_life", "b_curve_file"), rows)
    outputs.append(table.name)
    values = [t for _, t in sorted(lifespans)]
    nondecreasing = all(b >= 0.95 * a for a, b in zip(values, values[1:]))
    flags = {"all_runs_completed": all(r["status"] == "ok" for r in runs),
             "lifespan_nondecreasing_5pct": nondecreasing}
    return outputs, flags, runs


def _picard(config: ExperimentConfig, outdir: Path):
    grid = config.grid_spec()
    bank = DyadicBank(grid)
    omega0, rho0 = make_initial_data(grid, dict(config.initial_data))
    stepper = config.stepper()

    def one(kappa):
        return kappa, picard_run(omega0, rho0, float(kappa), config.t_final,
                                 config.n_max, stepper, s=config.s, q=config.q,
                                 n_samples=config.n_samples, bank=bank)

    outputs, runs = [], []
    traces_by_kappa = {}
    for kappa, traces in _parallel_map(one, list(config.kappa_list)):
        traces_by_kappa[kappa] = traces
        rows = []
        for tr in traces:
            for i, t in enumerate(tr.t):
                rows.append([tr.n, t, tr.a[i], tr.a_bar[i] if tr.a_bar is not None else ""])
        name = f"picard_kappa{float(kappa):g}.csv".replace(".", "p", 1)
        path = outdir / name
        write_csv(path, ("n", "t", "a_n", "a_bar_n"), rows)
        outputs.append(path.name)
        ratios = cauchy_ratios(traces)
        runs.append({"kappa": float(kappa), "status": "ok",
                     "cauchy_ratios": [float(x) for x in ratios]})
    report = uniformity_report(traces_by_kappa, spread_limit=config.spread_limit)
    rep_path = outdir / "uniformity_report.json"
    write_json(rep_path, report)
    outputs.append(rep_path.name)
    flags = {"kappa_uniform_spread": bool(report["pass"])}
    return outputs, flags, runs


def _strichartz(config: ExperimentConfig, outdir: Path):
    grid = config.grid_spec()
    bank = DyadicBank(grid)

    def one(job):
        kappa, seed = job
        f = coherent_band_field(grid, seed)
        sample = strichartz_measure(f, float(kappa), config.gamma, config.r,
                                    t_max=config.window, bank=bank)
        return kappa, seed, sample

    jobs = [(kappa, seed) for kappa in config.kappa_list for seed in config.seeds]
    rows, by_kappa = [], {}
    for kappa, seed, sample in _parallel_map(one, jobs):
        rows.append([sample.kappa, seed, sample.gamma,
                     "inf" if np.isinf(sample.r) else sample.r,
                     sample.t_max, sample.nodes, sample.value])
        by_kappa.setdefault(float(kappa), []).append(sample.value)
    csv_path = outdir / "strichartz_samples.csv"
    write_csv(csv_path, ("kappa", "seed", "gamma", "r", "t_max", "nodes", "value"), rows)
    kappas = sorted(by_kappa)
    means = [float(np.mean(by_kappa[k])) for k in kappas]
    slope = fit_slope(kappas, means) if len(kappas) >= 6 else None
    target = -1.0 / config.gamma
    payload = {
        "kappas": kappas,
        "mean_values": means,
        "slope": slope,
        "target_slope": target,
        "torus_note": "windowed integral; kappa-scaling is the measured content",
    }
    json_path = outdir / "strichartz_fit.json"
    write_json(json_path, payload)
    flags = {}
    if slope is not None:
        flags["slope_within_0p08"] = bool(abs(slope - target) <= 0.08)
    return [csv_path.name, json_path.name], flags, [{"status": "ok", "jobs": len(jobs)}]


def _verify_estimates(config: ExperimentConfig, outdir: Path):
    grid = config.grid_spec()
    reports = []
    lemmas = [config.lemma] if config.lemma != "all" else ["bracket", "lambda", "smoothed", "product"]
    for lemma in lemmas:
        rep = resolution_stability(lemma, config.s, config.q, config.trials,
                                   seed=int(config.seeds[0]), n=grid.n,
                                   box_scale=grid.box_scale, alpha=config.alpha)
        reports.append(rep)
    rows = [[r.which, r.s, r.q, r.seed, len(r.lhs), r.max_ratio, r.max_ratio_doubled]
            for r in reports]
    csv_path = outdir / "ratio_reports.csv"
    write_csv(csv_path, ("which", "s", "q", "seed", "trials", "max_ratio", "max_ratio_doubled"), rows)
    json_path = outdir / "ratio_reports.json"
    write_json(json_path, [r.as_dict() for r in reports])
    stable = all(
        r.max_ratio > 0 and abs(r.max_ratio_doubled - r.max_ratio) <= 0.25 * r.max_ratio
        for r in reports
    )
    flags = {"ratios_resolution_stable_25pct": stable}
    return [csv_path.name, json_path.name], flags, [{"status": "ok", "lemmas": lemmas}]


def _kappa0(config: ExperimentConfig, outdir: Path):
    inp = Kappa0Inputs(**config.kappa0_inputs)
    value, overflow = kappa0_estimate(inp)
    payload = {"inputs": config.kappa0_inputs, "kappa0": value, "overflow": overflow}
    path = outdir / "kappa0.json"
    write_json(path, payload)
    return [path.name], {"kappa0_finite": not overflow}, [{"status": "ok"}]


def _bands(config: ExperimentConfig, outdir: Path):
    bank = DyadicBank(config.grid_spec())
    path = outdir / "band_profiles.csv"
    write_csv(path, ("xi", "band", "value"), band_profile_rows(bank))
    resid = bank.partition_residual()
    rep = outdir / "partition.json"
    write_json(rep, {"j_min": bank.j_min, "j_max": bank.j_max,
                     "partition_residual": resid})
    return [path.name, rep.name], {"partition_residual_ok": resid < 1e-12}, [{"status": "ok"}]


_DRIVERS = {
    "simulate": _simulate,
    "picard": _picard,
    "strichartz": _strichartz,
    "lifespan-sweep": _lifespan_sweep,
    "verify-estimates": _verify_estimates,
    "kappa0": _kappa0,
    "bands": _bands,
}


def run_experiment(config: ExperimentConfig) -> RunManifest:
    config.validate()
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    outputs, flags, runs = _DRIVERS[config.kind](config, outdir)
    manifest = RunManifest(
        config=config.as_dict(),
        version=__version__,
        wall_clock=time.time() - started,
        outputs=sorted(outputs),
        flags=flags,
        runs=runs,
    )
    write_json(outdir / "manifest.json", {
        "config": manifest.config,
        "version": manifest.version,
        "wall_clock": manifest.wall_clock,
        "outputs": manifest.outputs,
        "flags": manifest.flags,
        "runs": manifest.runs,
    })
    return manifest
