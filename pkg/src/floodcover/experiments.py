"""Batch experiment harness: seeded trials over fleet sizes and density
modes, per-run artifacts, and the summary table comparing the two modes.
"""

from __future__ import annotations

import configparser
import csv
import multiprocessing
import os
from dataclasses import dataclass, fields, replace

import numpy as np

from .coverage import RunRecord, SimConfig, read_run_header, simulate
from .metrics import read_metrics_csv, time_to_fraction

SNAPSHOT_TIMES_FRACTIONS = (0.0, 0.5, 1.0)

SUMMARY_COLUMNS = ("mode", "n", "trials", "mean_cov", "std_cov", "min_cov", "max_cov", "mean_t90")

ENV_OUT = "FLOODCOVER_OUT"


@dataclass(frozen=True)
class BatchSpec:
    """One batch: every (mode, fleet size, trial) triple gets a run."""

    fleet_sizes: tuple = (16, 20, 24)
    trials: int = 10
    modes: tuple = ("gmdf", "axis")
    scenario: str = "ellipse"
    base_seed: int = 0
    out_dir: str = "runs"
    jobs: int = 1

    def validate(self) -> None:
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if not self.fleet_sizes:
            raise ValueError("need at least one fleet size")
        if not self.modes:
            raise ValueError("need at least one density mode")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")


@dataclass
class SummaryRow:
    """Final-coverage statistics for one (mode, fleet size) pair."""

    mode: str
    n: int
    trials: int
    mean_cov: float
    std_cov: float
    min_cov: float
    max_cov: float
    mean_t90: float


def run_dir_name(mode: str, n: int, trial: int) -> str:
    return f"{mode}_n{n}_trial{trial:02d}"


def snapshot_times(t_end: float) -> tuple:
    return tuple(f * t_end for f in SNAPSHOT_TIMES_FRACTIONS)


def run_single(config: SimConfig, run_dir, snapshots: bool = True) -> RunRecord:
    """Run one simulation and write its artifacts into run_dir."""
    run_dir = _ensure_dir(run_dir)
    times = snapshot_times(config.t_end) if snapshots else ()
    record = simulate(config, snapshot_times=times, snapshot_dir=run_dir if snapshots else None)
    record.write_jsonl(os.path.join(run_dir, "run.jsonl"))
    record.write_metrics_csv(os.path.join(run_dir, "metrics.csv"))
    return record


def _ensure_dir(path) -> str:
    path = os.fspath(path)
    os.makedirs(path, exist_ok=True)
    return path


def _check_writable(path) -> None:
    _ensure_dir(path)
    probe = os.path.join(path, ".write_probe")
    try:
        with open(probe, "w") as f:
            f.write("ok")
        os.remove(probe)
    except OSError as e:
        raise ValueError(f"output directory {path!r} is not writable: {e}") from e


def _batch_configs(spec: BatchSpec, base: SimConfig):
    for mode in spec.modes:
        for n in spec.fleet_sizes:
            for trial in range(spec.trials):
                cfg = replace(
                    base,
                    mode=mode,
                    n=int(n),
                    scenario=spec.scenario,
                    seed=spec.base_seed + trial,
                )
                yield cfg, run_dir_name(mode, int(n), trial)


def _run_one(args):
    cfg, run_dir = args
    record = run_single(cfg, run_dir)
    return record.coverage.tolist(), record.times.tolist()


def run_batch(spec: BatchSpec, base_config: SimConfig | None = None) -> list[SummaryRow]:
    """Run the whole batch, write per-run artifacts and summary.csv.

    Trial j of every (mode, fleet size) pair uses seed base_seed + j, so the
    two modes see identical initial deployments and each trial is independent
    of whichever trials ran before it.
    """
    spec.validate()
    base = base_config if base_config is not None else SimConfig()
    _check_writable(spec.out_dir)

    jobs = [(cfg, os.path.join(spec.out_dir, name)) for cfg, name in _batch_configs(spec, base)]
    if spec.jobs > 1:
        with multiprocessing.Pool(spec.jobs) as pool:
            results = pool.map(_run_one, jobs)
    else:
        results = [_run_one(j) for j in jobs]

    rows = []
    idx = 0
    for mode in spec.modes:
        for n in spec.fleet_sizes:
            finals, t90s = [], []
            for _trial in range(spec.trials):
                covs, ts = results[idx]
                idx += 1
                finals.append(covs[-1])
                t90s.append(time_to_fraction(ts, covs))
            rows.append(_summary_row(mode, int(n), finals, t90s))
    write_summary_csv(rows, os.path.join(spec.out_dir, "summary.csv"))
    return rows


def _summary_row(mode: str, n: int, finals, t90s) -> SummaryRow:
    finals = np.asarray(finals, dtype=float)
    return SummaryRow(
        mode=mode,
        n=n,
        trials=len(finals),
        mean_cov=float(finals.mean()),
        std_cov=float(finals.std()),
        min_cov=float(finals.min()),
        max_cov=float(finals.max()),
        mean_t90=float(np.mean(t90s)),
    )


def write_summary_csv(rows, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SUMMARY_COLUMNS)
        for r in rows:
            writer.writerow(
                [r.mode, r.n, r.trials, r.mean_cov, r.std_cov, r.min_cov, r.max_cov, r.mean_t90]
            )


def summarize_runs(run_dirs) -> list[SummaryRow]:
    """Recompute the summary table from stored per-run artifacts.

    Groups runs by the (mode, n) echoed in each run.jsonl header; coverage
    series come from the stored metrics.csv.
    """
    groups: dict = {}
    order = []
    for d in run_dirs:
        d = os.fspath(d)
        if not os.path.isdir(d):
            raise ValueError(f"not a run directory: {d!r}")
        cfg, _version = read_run_header(os.path.join(d, "run.jsonl"))
        cols = read_metrics_csv(os.path.join(d, "metrics.csv"))
        key = (cfg.mode, cfg.n)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(
            (cols["coverage_rate"][-1], time_to_fraction(cols["t"], cols["coverage_rate"]))
        )
    rows = []
    for key in order:
        finals = [f for f, _ in groups[key]]
        t90s = [t for _, t in groups[key]]
        rows.append(_summary_row(key[0], key[1], finals, t90s))
    return rows


# --- config file -----------------------------------------------------------

# config file sections -> SimConfig / BatchSpec field names
_CONFIG_SCHEMA = {
    "simulation": ("n", "scenario", "mode", "seed", "k", "dt", "t_end", "quadrature_res", "conv_tol"),
    "sensing": ("tau", "sensor_w", "pixel_size", "spiral_a", "spiral_omega", "level_amp", "level_period"),
    "density": ("phi0",),
    "metrics": ("eval_res",),
    "workspace": ("workspace_w", "workspace_h"),
    "batch": ("fleet_sizes", "trials", "modes", "base_seed", "out_dir", "jobs"),
}

_INT_LIST_FIELDS = {"fleet_sizes"}
_STR_LIST_FIELDS = {"modes"}


def _coerce(name: str, raw: str, target_type):
    raw = raw.strip()
    if name in _INT_LIST_FIELDS:
        return tuple(int(v) for v in raw.replace(",", " ").split())
    if name in _STR_LIST_FIELDS:
        return tuple(raw.replace(",", " ").split())
    if target_type is int:
        return int(raw)
    if target_type is float:
        return float(raw)
    return raw


def load_config_file(path=None) -> tuple[SimConfig, BatchSpec]:
    """Parse a key = value config file into (SimConfig, BatchSpec).

    Every field has a default, so a missing or empty file yields the default
    localized-flood run with 16 agents. Unknown sections or keys are errors.
    """
    sim_kwargs: dict = {}
    batch_kwargs: dict = {}
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(os.fspath(path))
        if not read:
            raise ValueError(f"config file not found: {path!r}")
        sim_types = {f.name: type(getattr(SimConfig(), f.name)) for f in fields(SimConfig)}
        batch_types = {f.name: type(getattr(BatchSpec(), f.name)) for f in fields(BatchSpec)}
        for section in parser.sections():
            if section not in _CONFIG_SCHEMA:
                raise ValueError(f"unknown config section [{section}]")
            allowed = _CONFIG_SCHEMA[section]
            for key, raw in parser.items(section):
                if key not in allowed:
                    raise ValueError(f"unknown key {key!r} in section [{section}]")
                if section == "batch":
                    batch_kwargs[key] = _coerce(key, raw, batch_types[key])
                else:
                    sim_kwargs[key] = _coerce(key, raw, sim_types[key])
    return SimConfig(**sim_kwargs), BatchSpec(**batch_kwargs)


def default_out_dir() -> str:
    return os.environ.get(ENV_OUT, "runs")
