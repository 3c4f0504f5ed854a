"""Density-weighted coverage control: locational cost, mass/centroid
quadrature, the move-to-centroid controller, and the full monitoring loop.

The simulation loop follows the four-phase strategy: agents spiral outward
until the first flood detection, then every detection switches on (and keeps
refreshing) that agent's density bump, and all agents descend the locational
cost by stepping toward the density-weighted centroids of their cells. Once
every agent has detected flood the density freezes and the centroid descent
runs to convergence.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from ._version import __version__
from .density import DEFAULT_PHI0, DensityField, GaussianComponent, SPD_EPS
from .geometry import Cell, Rect
from .metrics import DEFAULT_EVAL_RES, coverage_rate, write_metrics_csv
from .sensing import (
    BOUNDARY_MARGIN,
    DEFAULT_LEVEL_AMP,
    DEFAULT_LEVEL_PERIOD,
    DEFAULT_TAU,
    FloodField,
    capture,
    detect,
    make_flood_field,
    spiral_step,
    write_mask_pgm,
)
from .density import write_density_pgm


@dataclass(frozen=True)
class SimConfig:
    """Full parameterization of one simulation run."""

    n: int = 16
    scenario: str = "blob"
    mode: str = "gmdf"
    seed: int = 0
    k: float = 1.0
    dt: float = 0.1
    t_end: float = 50.0
    quadrature_res: int = 128
    conv_tol: float = 1e-3
    tau: float = DEFAULT_TAU
    sensor_w: int = 32
    pixel_size: float = 0.0625
    spiral_a: float = 0.5
    spiral_omega: float = 1.0
    phi0: float = DEFAULT_PHI0
    eval_res: int = DEFAULT_EVAL_RES
    workspace_w: float = 20.0
    workspace_h: float = 20.0
    level_amp: float = DEFAULT_LEVEL_AMP
    level_period: float = DEFAULT_LEVEL_PERIOD

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("fleet size must be at least 1")
        if not (self.k > 0.0 and self.dt > 0.0):
            raise ValueError("k and dt must be positive")
        if not self.k * self.dt < 1.0:
            raise ValueError("need k * dt < 1 for a stable centroid step")
        if self.t_end <= 0.0:
            raise ValueError("t_end must be positive")
        if self.quadrature_res < 64:
            raise ValueError("quadrature_res must be at least 64")
        if self.eval_res < 256:
            raise ValueError("eval_res must be at least 256")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")
        if self.sensor_w < 8:
            raise ValueError("sensor_w must be at least 8")
        if self.pixel_size <= 0.0:
            raise ValueError("pixel_size must be positive")
        if self.spiral_a <= 0.0 or self.spiral_omega <= 0.0:
            raise ValueError("spiral parameters must be positive")
        if self.conv_tol <= 0.0:
            raise ValueError("conv_tol must be positive")
        if self.phi0 <= 0.0:
            raise ValueError("phi0 must be positive")
        if self.workspace_w <= 0.0 or self.workspace_h <= 0.0:
            raise ValueError("workspace dimensions must be positive")
        from .density import MODES
        from .sensing import FLOOD_KINDS

        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.scenario not in FLOOD_KINDS:
            raise ValueError(f"scenario must be one of {FLOOD_KINDS}")

    @property
    def workspace(self) -> Rect:
        return Rect(0.0, 0.0, self.workspace_w, self.workspace_h)

    @property
    def footprint_side(self) -> float:
        return self.sensor_w * self.pixel_size


@dataclass
class StepRecord:
    """Per-step snapshot of the run state and its metrics."""

    t: float
    positions: np.ndarray
    rho: np.ndarray
    n_f: int
    cost: float
    coverage_rate: float
    max_centroid_gap: float


@dataclass
class RunRecord:
    """Everything one run produced: config echo, per-step records, version."""

    config: SimConfig
    steps: list
    version: str = __version__

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.steps])

    @property
    def coverage(self) -> np.ndarray:
        return np.array([s.coverage_rate for s in self.steps])

    @property
    def final_positions(self) -> np.ndarray:
        return self.steps[-1].positions

    def write_jsonl(self, path) -> None:
        with open(path, "w") as f:
            header = {"config": asdict(self.config), "version": self.version}
            f.write(json.dumps(header) + "\n")
            for s in self.steps:
                row = {
                    "t": s.t,
                    "positions": np.asarray(s.positions).tolist(),
                    "rho": [int(r) for r in s.rho],
                    "n_f": int(s.n_f),
                    "H": s.cost,
                    "coverage_rate": s.coverage_rate,
                }
                f.write(json.dumps(row) + "\n")

    def write_metrics_csv(self, path) -> None:
        write_metrics_csv(self.steps, path)


def read_run_header(path) -> tuple[SimConfig, str]:
    """Config echo and version string from the first line of a run JSONL."""
    with open(path) as f:
        header = json.loads(f.readline())
    return SimConfig(**header["config"]), header["version"]


@lru_cache(maxsize=8)
def _midpoint_grid(domain: Rect, res: int):
    xs = domain.xmin + (np.arange(res) + 0.5) * domain.width / res
    ys = domain.ymin + (np.arange(res) + 0.5) * domain.height / res
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    pts.flags.writeable = False
    da = (domain.width / res) * (domain.height / res)
    return pts, da


def partition_quadrature(positions, field: DensityField, domain: Rect, res: int, phi=None):
    """Masses, centroids, and locational cost on a shared midpoint grid.

    Grid points are assigned to their nearest agent, which realizes the
    Voronoi partition on the quadrature grid; `phi` may be passed in when the
    caller has already evaluated the density on the same grid.

    Returns (masses, centroids, cost).
    """
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    n = len(pos)
    pts, da = _midpoint_grid(domain, res)
    if phi is None:
        phi = field.evaluate(pts)
    # nearest-site labels via |q|^2 - 2 q.p + |p|^2 (the |q|^2 term is shared)
    score = pts @ pos.T
    score *= -2.0
    score += (pos * pos).sum(axis=1)[None, :]
    labels = score.argmin(axis=1)
    diff = pts - pos[labels]
    d2min = (diff * diff).sum(axis=1)
    w = phi * da
    masses = np.bincount(labels, weights=w, minlength=n)
    sx = np.bincount(labels, weights=w * pts[:, 0], minlength=n)
    sy = np.bincount(labels, weights=w * pts[:, 1], minlength=n)
    centroids = pos.copy()  # empty-label fallback: stay put
    nz = masses > 0.0
    centroids[nz, 0] = sx[nz] / masses[nz]
    centroids[nz, 1] = sy[nz] / masses[nz]
    cost = float(w @ d2min)
    return masses, centroids, cost


def locational_cost(positions, field: DensityField, domain: Rect, res: int) -> float:
    """Density-weighted sum over cells of squared distance to the cell's agent."""
    return partition_quadrature(positions, field, domain, res)[2]


def cost_gradient(positions, field: DensityField, domain: Rect, res: int) -> np.ndarray:
    """Gradient of the locational cost: 2 * m_i * (p_i - c_i) per agent."""
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    masses, centroids, _ = partition_quadrature(pos, field, domain, res)
    return 2.0 * masses[:, None] * (pos - centroids)


def cell_mass_centroid(cell: Cell, field: DensityField, res: int):
    """Midpoint-rule mass and density-weighted centroid of one cell.

    The res x res grid spans the cell's bounding box and only points inside
    the (convex) cell contribute. Degenerate slivers that trap no grid point
    fall back to the vertex average with a uniform-background mass.
    """
    v = cell.vertices
    bbox = Rect(v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())
    pts, da = _midpoint_grid(bbox, res)
    inside = cell.contains(pts)
    if not inside.any():
        return field.phi0 * cell.area, v.mean(axis=0)
    p = pts[inside]
    w = field.evaluate(p) * da
    mass = float(w.sum())
    centroid = w @ p / mass
    return mass, centroid


def control_step(positions, centroids, k: float, dt: float, domain: Rect, margin: float = BOUNDARY_MARGIN):
    """One explicit Euler step of the move-to-centroid controller,
    clamped strictly inside the workspace."""
    p = np.asarray(positions, dtype=float)
    c = np.asarray(centroids, dtype=float)
    return domain.clamp(p - (k * dt) * (p - c), margin)


@dataclass
class LloydInfo:
    masses: np.ndarray
    centroids: np.ndarray
    cost: float
    max_gap: float


def lloyd_step(positions, field: DensityField, domain: Rect, res: int, k: float, dt: float):
    """One repartition/centroid/move cycle. Returns (new_positions, LloydInfo)."""
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    masses, centroids, cost = partition_quadrature(pos, field, domain, res)
    gap = float(np.hypot(*(pos - centroids).T).max())
    new_pos = control_step(pos, centroids, k, dt, domain)
    return new_pos, LloydInfo(masses, centroids, cost, gap)


def initial_positions(n: int, domain: Rect, seed: int) -> np.ndarray:
    """Near-uniform lattice deployment with a small seeded jitter.

    Agents fill a ceil(sqrt(n))-per-side lattice row-major (surplus slots
    dropped) and each gets a uniform jitter of +/-2% of the lattice pitch.
    """
    if n < 1:
        raise ValueError("need at least one agent")
    m = int(np.ceil(np.sqrt(n)))
    pitch = np.array([domain.width / m, domain.height / m])
    ii, jj = np.meshgrid(np.arange(m), np.arange(m))
    centers = np.column_stack(
        [
            domain.xmin + (ii.ravel() + 0.5) * pitch[0],
            domain.ymin + (jj.ravel() + 0.5) * pitch[1],
        ]
    )[:n]
    rng = np.random.default_rng(seed)
    jitter = rng.uniform(-0.02, 0.02, size=(n, 2)) * pitch
    return domain.clamp(centers + jitter, BOUNDARY_MARGIN)


def format_time(t: float) -> str:
    """Compact time label for snapshot filenames (50.0 -> "50")."""
    return str(int(round(t))) if abs(t - round(t)) < 1e-9 else f"{t:g}"


def _write_snapshots(field, density, t, positions, config, domain, out_dir, masks):
    out_dir = Path(out_dir)
    label = format_time(t)
    write_density_pgm(density, domain, config.eval_res, out_dir / f"density_t{label}.pgm")
    if masks:
        for a, pos in enumerate(positions):
            mask = capture(field, t, pos, config.sensor_w, config.pixel_size, domain)
            write_mask_pgm(mask, out_dir / f"mask_t{label}_a{a}.pgm")


def simulate(
    config: SimConfig,
    field: FloodField | None = None,
    snapshot_times=(),
    snapshot_dir=None,
    snapshot_masks: bool = False,
) -> RunRecord:
    """Run the monitoring loop and record metrics at every step.

    Per step: every agent captures its footprint and runs detection; an
    agent's density bump switches on at its first detection and stays on,
    refreshing its mean/covariance from the newest capture while flood stays
    in view. With no detections anywhere the fleet spirals; otherwise all
    agents step toward the density-weighted centroids of their cells. Once
    all n agents have detected, the density freezes and the centroid descent
    continues until it converges (after which positions hold).

    The run is a pure function of the config (and flood field): identical
    inputs reproduce identical records bit for bit.
    """
    config.validate()
    domain = config.workspace
    if field is None:
        field = make_flood_field(
            config.scenario,
            domain,
            level_amp=config.level_amp,
            level_period=config.level_period,
        )
    n = config.n
    res = config.quadrature_res
    half_fp = 0.5 * config.footprint_side

    positions = initial_positions(n, domain, config.seed)
    spiral_origin = positions.copy()
    phases = np.zeros(n)
    latched = np.zeros(n, dtype=bool)
    mus = positions.copy()
    sigmas = np.tile(SPD_EPS * np.eye(2), (n, 1, 1))
    density = DensityField.all_off(config.phi0, n, config.mode, domain.center)

    grid_pts, _ = _midpoint_grid(domain, res)
    phi_cache = None  # density values on the quadrature grid, if still valid

    frozen = False  # all agents have detected; density stops updating
    hold = False  # post-freeze descent converged; positions stop moving
    masses = centroids = None
    cost = gap = 0.0
    n_f = 0

    steps: list[StepRecord] = []
    n_steps = int(round(config.t_end / config.dt))
    for i in range(n_steps + 1):
        t = i * config.dt

        if not frozen:
            changed = False
            for a in range(n):
                mask = capture(field, t, positions[a], config.sensor_w, config.pixel_size, domain)
                det = detect(mask, config.tau)
                if det.rho == 1:
                    latched[a] = True
                    mus[a] = det.mu
                    sigmas[a] = det.sigma
                    changed = True
            n_f = int(latched.sum())
            if changed:
                comps = tuple(
                    GaussianComponent(mus[a], sigmas[a], int(latched[a])) for a in range(n)
                )
                density = DensityField(config.phi0, comps, config.mode)
                phi_cache = None
            if n_f == n:
                frozen = True

        if not hold:
            if phi_cache is None:
                phi_cache = density.evaluate(grid_pts)
            masses, centroids, cost = partition_quadrature(
                positions, density, domain, res, phi=phi_cache
            )
            gap = float(np.hypot(*(positions - centroids).T).max())
            if frozen and gap < config.conv_tol:
                hold = True

        cov = coverage_rate(field, t, positions, half_fp, domain, config.eval_res)
        steps.append(
            StepRecord(t, positions.copy(), latched.astype(int), n_f, cost, cov, gap)
        )

        if snapshot_dir is not None and any(abs(t - st) < 0.5 * config.dt for st in snapshot_times):
            _write_snapshots(
                field, density, t, positions, config, domain, snapshot_dir, snapshot_masks
            )

        if i < n_steps and not hold:
            if n_f == 0:
                for a in range(n):
                    positions[a], phases[a] = spiral_step(
                        spiral_origin[a],
                        phases[a],
                        config.spiral_a,
                        config.spiral_omega,
                        config.dt,
                        domain,
                    )
            else:
                positions = control_step(positions, centroids, config.k, config.dt, domain)

    return RunRecord(config, steps)
