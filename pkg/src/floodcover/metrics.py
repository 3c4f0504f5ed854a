"""Coverage-rate and convergence measurement, plus the per-run CSV format."""

from __future__ import annotations

import csv
from functools import lru_cache

import numpy as np

from .geometry import Rect
from .sensing import FloodField

METRICS_COLUMNS = ("t", "coverage_rate", "H", "n_f", "max_centroid_gap")

DEFAULT_EVAL_RES = 256


@lru_cache(maxsize=8)
def _axis_grid(domain: Rect, res: int):
    xs = domain.xmin + (np.arange(res) + 0.5) * domain.width / res
    ys = domain.ymin + (np.arange(res) + 0.5) * domain.height / res
    xs.flags.writeable = False
    ys.flags.writeable = False
    return xs, ys


def coverage_rate(
    field: FloodField,
    t: float,
    positions,
    half_side: float,
    domain: Rect,
    res: int = DEFAULT_EVAL_RES,
) -> float:
    """Fraction of the flooded area lying inside at least one agent footprint.

    Evaluated on a res x res midpoint grid over the domain; footprints are
    axis-aligned squares of half side `half_side` centered on the agents.
    Returns 0 when no grid point is flooded.
    """
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    dx = domain.width / res
    dy = domain.height / res
    xs, ys = _axis_grid(domain, res)
    flooded = field.flooded_xy(xs[None, :], ys[:, None], t)
    n_flooded = int(flooded.sum())
    if n_flooded == 0:
        return 0.0
    covered = np.zeros((res, res), dtype=bool)
    for px, py in pos:
        # index range of grid midpoints with |x - px| <= half_side (same for y)
        c0 = max(0, int(np.ceil((px - half_side - domain.xmin) / dx - 0.5)))
        c1 = min(res - 1, int(np.floor((px + half_side - domain.xmin) / dx - 0.5)))
        r0 = max(0, int(np.ceil((py - half_side - domain.ymin) / dy - 0.5)))
        r1 = min(res - 1, int(np.floor((py + half_side - domain.ymin) / dy - 0.5)))
        if c0 <= c1 and r0 <= r1:
            covered[r0 : r1 + 1, c0 : c1 + 1] = True
    return float((flooded & covered).sum() / n_flooded)


def converged(positions, centroids, tol: float) -> bool:
    """True when every agent sits within tol of its cell centroid."""
    p = np.atleast_2d(np.asarray(positions, dtype=float))
    c = np.atleast_2d(np.asarray(centroids, dtype=float))
    if p.shape != c.shape:
        raise ValueError("positions and centroids must have matching shapes")
    return bool(np.hypot(p[:, 0] - c[:, 0], p[:, 1] - c[:, 1]).max() < tol)


def write_metrics_csv(steps, path) -> None:
    """One row per step: t, coverage_rate, H, n_f, max_centroid_gap."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(METRICS_COLUMNS)
        for s in steps:
            writer.writerow([s.t, s.coverage_rate, s.cost, s.n_f, s.max_centroid_gap])


def read_metrics_csv(path):
    """Columns of a metrics CSV as a dict of float arrays (n_f as int)."""
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        rows = list(reader)
    out = {k: np.array([float(r[k]) for r in rows]) for k in METRICS_COLUMNS}
    out["n_f"] = out["n_f"].astype(int)
    return out


def time_to_fraction(ts, values, fraction: float = 0.9) -> float:
    """First time the series reaches `fraction` of its final value."""
    ts = np.asarray(ts, dtype=float)
    vals = np.asarray(values, dtype=float)
    target = fraction * vals[-1]
    hit = np.flatnonzero(vals >= target)
    return float(ts[hit[0]]) if len(hit) else float(ts[-1])
