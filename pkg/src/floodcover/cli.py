"""Command-line interface: run, batch, render, summarize."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .coverage import read_run_header, simulate
from .experiments import (
    BatchSpec,
    default_out_dir,
    load_config_file,
    run_batch,
    run_single,
    snapshot_times,
    summarize_runs,
    write_summary_csv,
    SUMMARY_COLUMNS,
)

EXIT_OK = 0
EXIT_BAD_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floodcover",
        description="Multi-agent flood-coverage simulator and experiment harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one simulation and write its artifacts")
    _add_common(run_p)
    run_p.add_argument("--n", type=int, help="fleet size")

    batch_p = sub.add_parser("batch", help="run the full (mode x fleet x trial) batch")
    _add_common(batch_p)
    batch_p.add_argument("--fleet-sizes", help="comma-separated fleet sizes, e.g. 16,20,24")
    batch_p.add_argument("--trials", type=int, help="trials per configuration")
    batch_p.add_argument("--jobs", type=int, help="parallel worker processes")

    render_p = sub.add_parser("render", help="re-emit density and mask snapshots for a stored run")
    render_p.add_argument("run_dir", help="directory containing run.jsonl")
    render_p.add_argument("--times", help="comma-separated snapshot times in seconds")

    sum_p = sub.add_parser("summarize", help="recompute the summary table from stored runs")
    sum_p.add_argument("run_dirs", nargs="+", help="run directories (each with run.jsonl + metrics.csv)")
    sum_p.add_argument("--out", help="write summary CSV here instead of stdout")
    return parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--scenario", help="flood scenario id (band, blob, ellipse, full, none)")
    p.add_argument("--mode", choices=("gmdf", "axis"), help="density mode")
    p.add_argument("--seed", type=int, help="run seed (batch: base seed)")
    p.add_argument("--out", help="output directory")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BAD_CONFIG


def _dispatch(args) -> int:
    if args.command == "run":
        config, _ = load_config_file(args.config)
        overrides = {
            k: v
            for k, v in (
                ("scenario", args.scenario),
                ("mode", args.mode),
                ("seed", args.seed),
                ("n", args.n),
            )
            if v is not None
        }
        config = replace(config, **overrides)
        config.validate()
        out = args.out or default_out_dir()
        run_single(config, out)
        print(f"run complete: {out}/metrics.csv, {out}/run.jsonl")
        return EXIT_OK

    if args.command == "batch":
        config, spec = load_config_file(args.config)
        spec_overrides = {}
        if args.scenario is not None:
            spec_overrides["scenario"] = args.scenario
        if args.seed is not None:
            spec_overrides["base_seed"] = args.seed
        if args.out is not None:
            spec_overrides["out_dir"] = args.out
        elif spec.out_dir == "runs":
            spec_overrides["out_dir"] = default_out_dir()
        if args.fleet_sizes is not None:
            spec_overrides["fleet_sizes"] = tuple(
                int(v) for v in args.fleet_sizes.replace(",", " ").split()
            )
        if args.trials is not None:
            spec_overrides["trials"] = args.trials
        if args.jobs is not None:
            spec_overrides["jobs"] = args.jobs
        if args.mode is not None:
            spec_overrides["modes"] = (args.mode,)
        spec = replace(spec, **spec_overrides)
        spec.validate()
        rows = run_batch(spec, base_config=config)
        for r in rows:
            print(
                f"{r.mode} n={r.n}: mean={r.mean_cov:.4f} std={r.std_cov:.4f} "
                f"min={r.min_cov:.4f} max={r.max_cov:.4f} t90={r.mean_t90:.1f}s"
            )
        print(f"summary written: {os.path.join(spec.out_dir, 'summary.csv')}")
        return EXIT_OK

    if args.command == "render":
        jsonl = os.path.join(args.run_dir, "run.jsonl")
        if not os.path.isfile(jsonl):
            raise ValueError(f"no run.jsonl under {args.run_dir!r}")
        config, _version = read_run_header(jsonl)
        if args.times is not None:
            times = tuple(float(v) for v in args.times.replace(",", " ").split())
        else:
            times = snapshot_times(config.t_end)
        simulate(config, snapshot_times=times, snapshot_dir=args.run_dir, snapshot_masks=True)
        print(f"snapshots written under {args.run_dir}")
        return EXIT_OK

    if args.command == "summarize":
        rows = summarize_runs(args.run_dirs)
        if args.out:
            write_summary_csv(rows, args.out)
            print(f"summary written: {args.out}")
        else:
            print(",".join(SUMMARY_COLUMNS))
            for r in rows:
                print(
                    f"{r.mode},{r.n},{r.trials},{r.mean_cov},{r.std_cov},"
                    f"{r.min_cov},{r.max_cov},{r.mean_t90}"
                )
        return EXIT_OK

    raise ValueError(f"unknown command {args.command!r}")  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
