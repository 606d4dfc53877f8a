import json
import os

import numpy as np
import pytest

from strat2d.cli import main as cli_main
from strat2d.errors import ConfigError
from strat2d.harness import (
    ExperimentConfig,
    load_config,
    run_experiment,
    sweep_schedule,
    thread_count,
)


def write_config(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh)
    return str(path)


SIM_CONFIG = {
    "kind": "simulate",
    "grid": {"n": 64},
    "scheme": "ifrk4",
    "dt": 0.01,
    "initial_data": {"name": "random-spectrum", "seed": 3, "amplitude": 0.5,
                     "xi_lo": 0.5, "xi_hi": 4.0},
    "kappa_list": [0.0, 16.0],
    "t_final": 0.1,
    "n_samples": 3,
}


def test_config_validation(tmp_path):
    bad = dict(SIM_CONFIG, kappa_list=[])
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path / "a.json", bad))
    bad = dict(SIM_CONFIG, initial_data={"name": "nonsense"})
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path / "b.json", bad))
    bad = dict(SIM_CONFIG, kind="nonsense")
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path / "c.json", bad))
    bad = dict(SIM_CONFIG, bogus_key=1)
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path / "d.json", bad))


def test_overrides(tmp_path):
    path = write_config(tmp_path / "cfg.json", SIM_CONFIG)
    cfg = load_config(path, ["dt=0.5", "grid.n=32", "initial_data.seed=9"])
    assert cfg.dt == 0.5
    assert cfg.grid["n"] == 32
    assert cfg.initial_data["seed"] == 9
    with pytest.raises(ConfigError):
        load_config(path, ["no_equals_sign"])


def test_sweep_schedule_expansion():
    cfg = ExperimentConfig(kind="simulate", kappa_list=[0.0], seeds=[1],
                           initial_data={"name": "taylor-green"})
    assert len(sweep_schedule(cfg)) == 1
    cfg = ExperimentConfig(kind="simulate", kappa_list=[0, 1, 2, 3, 4],
                           seeds=[1, 2, 3], initial_data={"name": "taylor-green"})
    specs = sweep_schedule(cfg)
    assert len(specs) == 15
    # kappa is the slow axis, seed the fast one; indices are consecutive
    assert [s.index for s in specs] == list(range(15))
    assert specs[0].kappa == 0.0 and specs[0].seed == 1
    assert specs[1].kappa == 0.0 and specs[1].seed == 2
    assert specs[3].kappa == 1.0 and specs[3].seed == 1


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("STRAT2D_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("STRAT2D_THREADS", "zero")
    with pytest.raises(ConfigError):
        thread_count()
    monkeypatch.setenv("STRAT2D_THREADS", "0")
    with pytest.raises(ConfigError):
        thread_count()
    monkeypatch.delenv("STRAT2D_THREADS")
    assert thread_count() >= 1


def test_simulate_reruns_byte_identical(tmp_path, monkeypatch):
    outputs = {}
    for label, threads in (("one", "1"), ("two", "4")):
        monkeypatch.setenv("STRAT2D_THREADS", threads)
        cfg = load_config(write_config(tmp_path / f"{label}.json",
                                       dict(SIM_CONFIG, output_dir=str(tmp_path / label))))
        manifest = run_experiment(cfg)
        assert manifest.passed
        blobs = {}
        for name in manifest.outputs:
            with open(tmp_path / label / name, "rb") as fh:
                blobs[name] = fh.read()
        outputs[label] = blobs
    assert outputs["one"] == outputs["two"]


def test_manifest_written(tmp_path):
    cfg = load_config(write_config(tmp_path / "cfg.json",
                                   dict(SIM_CONFIG, output_dir=str(tmp_path / "out"))))
    manifest = run_experiment(cfg)
    with open(tmp_path / "out" / "manifest.json") as fh:
        on_disk = json.load(fh)
    assert on_disk["version"] == manifest.version
    assert on_disk["flags"] == manifest.flags
    assert sorted(on_disk["outputs"]) == manifest.outputs
    assert all(r["status"] in ("ok", "blowup") for r in on_disk["runs"])


def test_crash_isolation(tmp_path):
    # a run that blows up is recorded but does not abort its siblings
    cfg_payload = dict(
        SIM_CONFIG,
        scheme="rk4",
        dt=0.05,
        t_final=2.0,
        n_samples=11,
        initial_data={"name": "random-spectrum", "seed": 3, "amplitude": 1.0,
                      "xi_lo": 0.5, "xi_hi": 4.0},
        kappa_list=[0.0, 1e4],
        output_dir=str(tmp_path / "out"),
    )
    cfg = load_config(write_config(tmp_path / "cfg.json", cfg_payload))
    with np.errstate(invalid="ignore", over="ignore"):
        manifest = run_experiment(cfg)
    statuses = {r["kappa"]: r["status"] for r in manifest.runs}
    assert statuses[0.0] == "ok"
    assert statuses[1e4] == "blowup"


def test_bands_experiment(tmp_path):
    cfg = ExperimentConfig(kind="bands", grid={"n": 128},
                           output_dir=str(tmp_path / "out"))
    manifest = run_experiment(cfg)
    assert manifest.flags["partition_residual_ok"]
    assert (tmp_path / "out" / "band_profiles.csv").exists()


def test_kappa0_experiment(tmp_path):
    cfg = ExperimentConfig(
        kind="kappa0",
        kappa0_inputs={"t": 1.0, "z": 1.0, "c6": 1.0, "c7": 1.0, "gamma": 4.0},
        output_dir=str(tmp_path / "out"),
    )
    manifest = run_experiment(cfg)
    with open(tmp_path / "out" / "kappa0.json") as fh:
        payload = json.load(fh)
    assert abs(payload["kappa0"] - (2 * (1 + np.e)) ** 4) < 1e-6


def test_cli_exit_codes(tmp_path):
    path = write_config(tmp_path / "bands.json",
                        {"kind": "bands", "grid": {"n": 64},
                         "output_dir": str(tmp_path / "out")})
    assert cli_main(["bands", "--config", path]) == 0
    # subcommand / kind mismatch
    assert cli_main(["simulate", "--config", path]) == 2
    # missing config file
    assert cli_main(["bands", "--config", str(tmp_path / "missing.json")]) == 2


def test_cli_override(tmp_path):
    path = write_config(tmp_path / "bands.json",
                        {"kind": "bands", "grid": {"n": 64},
                         "output_dir": str(tmp_path / "out")})
    alt = str(tmp_path / "alt")
    assert cli_main(["bands", "--config", path, "--override",
                     f'output_dir="{alt}"']) == 0
    assert os.path.isdir(alt)
