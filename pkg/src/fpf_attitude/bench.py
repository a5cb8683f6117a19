"""Monte Carlo comparison of the attitude filters.

Every run index owns a family of random streams derived from the master seed
and a purpose tag, so the truth, the measurements, the initial particles and
each filter's process noise are reproducible independently of which filters
are selected or in which order runs execute.
"""
from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .baselines import FILTERS as GAUSSIAN_FILTERS
from .fpf import FeedbackParticleFilter, FilterDivergence
from .galerkin import GalerkinGain
from .kernel import KernelGain
from .sim import ScenarioConfig, simulate
from .so3 import IDENTITY, AmbiguousMeanError, rotation_angle_error, sample_concentrated_gaussian

log = logging.getLogger(__name__)

FILTER_IDS = ("iekf", "mekf", "ukf", "fpf-g", "fpf-k")
PURPOSES = {"truth": 0, "measurement": 1, "particles": 2, "fpf-g": 3, "fpf-k": 4}
SHARED_PURPOSES = ("truth", "measurement")


def stream(seed, run, purpose):
    """Independent generator for ``(seed, run, purpose)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(run, PURPOSES[purpose])))


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    filters: tuple = FILTER_IDS
    particles: int = 200
    runs: int = 20
    seed: int = 0
    eps: float = 1.0
    kernel_iterations: int = 10
    kernel_h_term: str = "none"
    kernel_trace_form: str = "transpose"
    workers: int = 1

    def __post_init__(self):
        unknown = set(self.filters) - set(FILTER_IDS)
        if unknown:
            raise ValueError(f"unknown filters {sorted(unknown)}; choose from {FILTER_IDS}")
        if not self.filters:
            raise ValueError("select at least one filter")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if any(f.startswith("fpf") for f in self.filters) and self.particles < 2:
            raise ValueError("particle filters need at least 2 particles")

    @property
    def ordered_filters(self):
        return tuple(f for f in FILTER_IDS if f in self.filters)


def default_filters(scenario_name):
    if scenario_name == "b":
        return ("iekf", "mekf", "ukf", "fpf-k")
    return FILTER_IDS


def make_filter(config, filter_id, run):
    sc = config.scenario
    sensors = sc.sensors
    if filter_id in GAUSSIAN_FILTERS:
        return GAUSSIAN_FILTERS[filter_id](IDENTITY, sc.init_cov, sensors, sc.process_cov)
    particles = sample_concentrated_gaussian(IDENTITY, sc.init_cov, config.particles, stream(config.seed, run, "particles"))
    if filter_id == "fpf-g":
        solver = GalerkinGain()
    else:
        solver = KernelGain(
            eps=config.eps,
            iterations=config.kernel_iterations,
            trace_form=config.kernel_trace_form,
            h_term=config.kernel_h_term,
        )
    return FeedbackParticleFilter(particles, solver, sensors, sc.process_cov, stream(config.seed, run, filter_id), kind=filter_id)


def run_filter(config, filter_id, run, trajectory):
    """Angle-error trace (radians, one value per output time) for one filter on one trajectory.

    A filter that blows up yields ``None`` together with a diagnostic string.
    """
    sc = config.scenario
    filt = make_filter(config, filter_id, run)
    trace = np.empty(len(trajectory.times))
    try:
        trace[0] = rotation_angle_error(trajectory.truth[0], filt.estimate())
        for k in range(sc.n_steps):
            n_sub = sc.sub_intervals(k, filter_id)
            for _ in range(n_sub):
                filt.step(trajectory.omega[k], sc.dt / n_sub, trajectory.dz[k] / n_sub)
            trace[k + 1] = rotation_angle_error(trajectory.truth[k + 1], filt.estimate())
    except (FilterDivergence, AmbiguousMeanError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return None, f"{filter_id} run {run} diverged at step {k}: {exc}"
    if not np.all(np.isfinite(trace)):
        return None, f"{filter_id} run {run} produced a non-finite error trace"
    return trace, None


def simulate_run(config, run):
    return simulate(config.scenario, stream(config.seed, run, "truth"), stream(config.seed, run, "measurement"))


def run_single(config, filter_id, run):
    trace, problem = run_filter(config, filter_id, run, simulate_run(config, run))
    if problem:
        raise FilterDivergence(problem)
    return trace


def _run_all_filters(args):
    config, run = args
    trajectory = simulate_run(config, run)
    traces, problems, seconds = {}, [], {}
    for fid in config.ordered_filters:
        start = time.perf_counter()
        trace, problem = run_filter(config, fid, run, trajectory)
        seconds[fid] = time.perf_counter() - start
        traces[fid] = trace
        if problem:
            problems.append(problem)
    return traces, problems, seconds


def rmse(traces):
    """Root mean square over runs (axis 0) of angle-error traces."""
    traces = np.atleast_2d(np.asarray(traces, dtype=float))
    return np.sqrt(np.mean(traces**2, axis=0))


@dataclass
class ExperimentResult:
    times: np.ndarray
    rmse: dict  # filter id -> (n_steps + 1,) radians
    traces: dict  # filter id -> (runs_ok, n_steps + 1) radians
    failures: list
    seconds: dict

    def final_rmse_deg(self):
        return {fid: float(np.rad2deg(v[-1])) for fid, v in self.rmse.items()}

    def summary(self):
        lines = [f"{'filter':<8}{'final RMSE [deg]':>18}{'wall [s]':>10}{'ok runs':>9}"]
        for fid, v in self.rmse.items():
            lines.append(
                f"{fid:<8}{np.rad2deg(v[-1]):>18.3f}{self.seconds[fid]:>10.2f}{len(self.traces[fid]):>9d}"
            )
        for problem in self.failures:
            lines.append(f"failed: {problem}")
        return "\n".join(lines)


def run_experiment(config):
    jobs = [(config, run) for run in range(config.runs)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outputs = list(pool.map(_run_all_filters, jobs))
    else:
        outputs = [_run_all_filters(job) for job in jobs]
    traces = {fid: [] for fid in config.ordered_filters}
    seconds = {fid: 0.0 for fid in config.ordered_filters}
    failures = []
    for run_traces, problems, run_seconds in outputs:
        failures.extend(problems)
        for fid, trace in run_traces.items():
            seconds[fid] += run_seconds[fid]
            if trace is not None:
                traces[fid].append(trace)
    for problem in failures:
        log.warning(problem)
    times = np.arange(config.scenario.n_steps + 1) * config.scenario.dt
    stacked = {fid: np.array(v).reshape(-1, len(times)) for fid, v in traces.items()}
    series = {fid: rmse(v) if len(v) else np.full(len(times), np.nan) for fid, v in stacked.items()}
    return ExperimentResult(times=times, rmse=series, traces=stacked, failures=failures, seconds=seconds)


def column_name(filter_id):
    return "rmse_" + filter_id.replace("-", "_")


def rmse_csv(result, deterministic=False, meta=None):
    """CSV text: ``t`` plus one RMSE column per filter, angles in degrees."""
    buf = io.StringIO()
    if not deterministic:
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        buf.write(f"# generated {stamp}" + (f" {meta}" if meta else "") + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    fids = list(result.rmse)
    writer.writerow(["t"] + [column_name(f) for f in fids])
    for k, t in enumerate(result.times):
        writer.writerow([f"{t:.4f}"] + [f"{np.rad2deg(result.rmse[f][k]):.6f}" for f in fids])
    return buf.getvalue()


def write_csv(path, text):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"could not write results to {path}: {exc}") from exc
    return path


def write_traces(directory, result):
    """One CSV per filter with a column per successful run (degrees)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for fid, traces in result.traces.items():
        path = directory / f"traces_{fid.replace('-', '_')}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t"] + [f"run{j}" for j in range(len(traces))])
            for k, t in enumerate(result.times):
                writer.writerow([f"{t:.4f}"] + [f"{np.rad2deg(v[k]):.6f}" for v in traces])
        paths.append(path)
    return paths


def first_crossing(times, series, threshold):
    """First time at which ``series`` drops below ``threshold``; ``inf`` if never."""
    below = np.nonzero(np.asarray(series) < threshold)[0]
    return float(times[below[0]]) if len(below) else float("inf")


def with_scenario(config, **changes):
    return replace(config, scenario=replace(config.scenario, **changes))
