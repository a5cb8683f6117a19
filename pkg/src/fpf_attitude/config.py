"""Experiment configuration from a YAML key-value file plus command-line overrides."""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import yaml

from .bench import ExperimentConfig, default_filters
from .sim import ScenarioConfig

SCENARIO_KEYS = {
    "horizon",
    "dt",
    "process_std",
    "process_std_deg",
    "sensor_std",
    "sensor_std_deg",
    "init_std",
    "init_std_deg",
    "r_g",
    "r_b",
    "truth_init",
    "nf_fpfg",
    "nf_other",
    "nf_steps",
}
EXPERIMENT_KEYS = {
    "filters",
    "runs",
    "particles",
    "seed",
    "eps",
    "kernel_iterations",
    "kernel_h_term",
    "kernel_trace_form",
    "workers",
}
OUTPUT_KEYS = {"out", "deterministic", "trace_dir", "full"}
TOP_KEYS = {"scenario", "noise_convention"} | SCENARIO_KEYS | EXPERIMENT_KEYS | OUTPUT_KEYS

# Monte Carlo size for full-scale runs.
FULL_RUNS = 100


@dataclass(frozen=True)
class OutputOptions:
    out: Path | None = None
    deterministic: bool = False
    trace_dir: Path | None = None


def load_file(path):
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except OSError as exc:
        raise OSError(f"could not read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"config {path} must be a mapping of keys to values")
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise ValueError(f"unknown config keys in {path}: {sorted(unknown)}")
    return data


def parse_filters(value):
    if isinstance(value, str):
        value = [v.strip() for v in value.split(",") if v.strip()]
    return tuple(value)


def build(options):
    """Merge a flat option mapping into an ``ExperimentConfig`` and output options.

    ``None`` values are treated as unset, so command-line defaults never mask
    values from a config file.
    """
    opts = {k: v for k, v in options.items() if v is not None}
    unknown = set(opts) - TOP_KEYS
    if unknown:
        raise ValueError(f"unknown options {sorted(unknown)}")
    name = opts.get("scenario", "a")
    scenario = ScenarioConfig.from_dict(
        {"scenario": name, "noise_convention": opts.get("noise_convention", "degree-label")}
        | {k: opts[k] for k in SCENARIO_KEYS if k in opts}
    )
    exp = {k: opts[k] for k in EXPERIMENT_KEYS if k in opts}
    exp["filters"] = parse_filters(exp.get("filters", default_filters(name)))
    if opts.get("full"):
        exp.setdefault("runs", FULL_RUNS)
        exp.setdefault("particles", 200)
        scenario = replace(scenario, horizon=2.0, dt=0.01)
    config = ExperimentConfig(scenario=scenario, **exp)
    out = OutputOptions(
        out=Path(opts["out"]) if "out" in opts else None,
        deterministic=bool(opts.get("deterministic", False)),
        trace_dir=Path(opts["trace_dir"]) if "trace_dir" in opts else None,
    )
    return config, out
