"""Synthetic flood fields, square downward-camera captures, and image-moment
detection that turns a boolean snapshot into a (mu, sigma) estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import SPD_EPS, regularize_spd
from .geometry import Rect, as_point

FLOOD_KINDS = ("band", "blob", "ellipse", "full", "none")

# Detection threshold: fraction of footprint pixels that must be flooded.
DEFAULT_TAU = 0.02

DEFAULT_LEVEL_AMP = 0.15
DEFAULT_LEVEL_PERIOD = 60.0

# Workspace clamp margin for spiral and controller moves.
BOUNDARY_MARGIN = 1e-3


@dataclass(frozen=True)
class FloodField:
    """Deterministic time-varying flooded-region predicate.

    The nominal shape is scaled by level(t) = 1 + amp * sin(2 pi t / period),
    so the region slowly grows and shrinks. Kinds:

    - "band": horizontal strip |y - cy| <= hy * level
    - "blob": disc of radius hx * level around center
    - "ellipse": ellipse with semi-axes (hx, hy) * level, rotated by
      `orientation` about center
    - "full": everything flooded (degenerate all-detect case)
    - "none": nothing flooded (degenerate no-detect case)
    """

    kind: str
    center: np.ndarray = None
    half_extents: np.ndarray = None
    orientation: float = 0.0
    level_amp: float = DEFAULT_LEVEL_AMP
    level_period: float = DEFAULT_LEVEL_PERIOD

    def __post_init__(self):
        if self.kind not in FLOOD_KINDS:
            raise ValueError(f"kind must be one of {FLOOD_KINDS}")
        center = as_point(self.center if self.center is not None else (0.0, 0.0))
        center.flags.writeable = False
        object.__setattr__(self, "center", center)
        he = np.asarray(
            self.half_extents if self.half_extents is not None else (1.0, 1.0), dtype=float
        ).reshape(2)
        if self.kind in ("band", "blob", "ellipse") and not (he > 0).all():
            raise ValueError("half extents must be positive")
        he.flags.writeable = False
        object.__setattr__(self, "half_extents", he)
        if not 0.0 <= self.level_amp < 1.0:
            raise ValueError("level amplitude must lie in [0, 1)")
        if self.level_period <= 0.0:
            raise ValueError("level period must be positive")

    def level(self, t: float) -> float:
        return 1.0 + self.level_amp * np.sin(2.0 * np.pi * t / self.level_period)

    def flooded_xy(self, x, y, t: float):
        """Flood predicate on broadcastable x/y coordinate arrays."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast_shapes(x.shape, y.shape)
        lv = self.level(t)
        if self.kind == "none":
            return np.zeros(shape, dtype=bool)
        if self.kind == "full":
            return np.ones(shape, dtype=bool)
        if self.kind == "band":
            hw = self.half_extents[1] * lv
            out = np.abs(y - self.center[1]) <= hw
        elif self.kind == "blob":
            r = self.half_extents[0] * lv
            out = (x - self.center[0]) ** 2 + (y - self.center[1]) ** 2 <= r * r
        else:  # ellipse
            c, s = np.cos(self.orientation), np.sin(self.orientation)
            dx = x - self.center[0]
            dy = y - self.center[1]
            u = (c * dx + s * dy) / (self.half_extents[0] * lv)
            v = (c * dy - s * dx) / (self.half_extents[1] * lv)
            out = u * u + v * v <= 1.0
        if out.shape != shape:
            out = np.broadcast_to(out, shape).copy()
        return out

    def flooded(self, q, t: float):
        """Boolean flood predicate at a point (2,) or an (..., 2) batch."""
        pts = np.asarray(q, dtype=float)
        out = self.flooded_xy(pts[..., 0], pts[..., 1], t)
        return bool(out) if pts.ndim == 1 else out


def band_field(center_y: float, half_width: float, **level) -> FloodField:
    return FloodField("band", (0.0, center_y), (half_width, half_width), **level)


def blob_field(center, radius: float, **level) -> FloodField:
    return FloodField("blob", center, (radius, radius), **level)


def ellipse_field(center, semi_axes, orientation: float, **level) -> FloodField:
    return FloodField("ellipse", center, semi_axes, orientation, **level)


def make_flood_field(scenario: str, domain: Rect, **level) -> FloodField:
    """Built-in scenarios sized for the default 20 x 20 m workspace.

    - "band": wide horizontal strip across the middle
    - "blob": disc on the left side
    - "ellipse": long thin diagonal stripe through the center; narrower than
      the default footprint, so captures see slanted bands whose moments
      carry the orientation (the regime that separates the density modes)
    - "full" / "none": degenerate fields for exercising the two trivial
      branches of the monitoring loop
    """
    cx, cy = domain.center
    if scenario == "band":
        return band_field(cy, 0.125 * domain.height, **level)
    if scenario == "blob":
        return blob_field((domain.xmin + 0.3 * domain.width, cy), 0.225 * domain.width, **level)
    if scenario == "ellipse":
        return ellipse_field(
            (cx, cy), (0.425 * domain.width, 0.02 * domain.height), np.pi / 4.0, **level
        )
    if scenario == "full":
        return FloodField("full", (cx, cy), (1.0, 1.0), **level)
    if scenario == "none":
        return FloodField("none", (cx, cy), (1.0, 1.0), **level)
    raise ValueError(f"unknown scenario {scenario!r}")


@dataclass(frozen=True)
class FloodMask:
    """W x W boolean camera snapshot with its world placement.

    cells[r, c] corresponds to the pixel centered at
    origin + pixel_size * (c, r); rows increase northward.
    """

    cells: np.ndarray
    origin: np.ndarray
    pixel_size: float

    def __post_init__(self):
        m = np.asarray(self.cells, dtype=bool)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 8:
            raise ValueError("mask must be square with at least 8 pixels per side")
        m.flags.writeable = False
        object.__setattr__(self, "cells", m)
        origin = as_point(self.origin)
        origin.flags.writeable = False
        object.__setattr__(self, "origin", origin)
        if not self.pixel_size > 0.0:
            raise ValueError("pixel size must be positive")

    @property
    def w(self) -> int:
        return self.cells.shape[0]

    @property
    def side(self) -> float:
        return self.w * self.pixel_size

    @property
    def footprint_center(self) -> np.ndarray:
        return self.origin + 0.5 * (self.w - 1) * self.pixel_size


@dataclass(frozen=True)
class Detection:
    """Outcome of one capture: switch flag, flooded fraction, and the
    world-frame mean/covariance of the flooded pixels."""

    rho: int
    fraction: float
    mu: np.ndarray
    sigma: np.ndarray


def capture(field: FloodField, t: float, agent_pos, w: int, pixel_size: float, domain: Rect) -> FloodMask:
    """Boolean snapshot of the flood over a w x w footprint centered on the
    agent. Pixels outside the workspace read as not flooded."""
    pos = as_point(agent_pos)
    origin = pos - 0.5 * (w - 1) * pixel_size
    xs = (origin[0] + np.arange(w) * pixel_size)[None, :]
    ys = (origin[1] + np.arange(w) * pixel_size)[:, None]
    cells = field.flooded_xy(xs, ys, t)
    cells &= (xs >= domain.xmin) & (xs <= domain.xmax)
    cells &= (ys >= domain.ymin) & (ys <= domain.ymax)
    return FloodMask(cells, origin, pixel_size)


def mask_moments(mask: FloodMask):
    """Pixel-frame moments of the flooded pixels: count, mean (col, row), and
    the covariance of (col, row). Exact, with no regularization."""
    rows, cols = np.nonzero(mask.cells)
    count = len(rows)
    if count == 0:
        return 0, np.zeros(2), np.zeros((2, 2))
    mc = cols.mean()
    mr = rows.mean()
    dc = cols - mc
    dr = rows - mr
    cov = np.array(
        [
            [dc @ dc, dc @ dr],
            [dc @ dr, dr @ dr],
        ]
    ) / count
    return count, np.array([mc, mr]), cov


def detect(mask: FloodMask, tau: float = DEFAULT_TAU) -> Detection:
    """Threshold the flooded fraction and extract (mu, sigma) in world units.

    rho switches on exactly at fraction >= tau. With no detection, mu falls
    back to the footprint center and sigma to the regularization floor; both
    are placeholders that the density update gates out via rho.
    """
    count, mean_px, cov_px = mask_moments(mask)
    fraction = count / mask.cells.size
    if fraction >= tau and count > 0:
        mu = mask.origin + mask.pixel_size * mean_px
        sigma = regularize_spd(cov_px * mask.pixel_size**2)
        return Detection(1, float(fraction), mu, sigma)
    return Detection(0, float(fraction), mask.footprint_center, SPD_EPS * np.eye(2))


def spiral_position(origin, theta: float, a: float) -> np.ndarray:
    """Point at phase theta on the Archimedean spiral r = a * theta."""
    o = as_point(origin)
    r = a * theta
    return o + r * np.array([np.cos(theta), np.sin(theta)])


def spiral_step(
    origin,
    theta: float,
    a: float,
    omega: float,
    dt: float,
    domain: Rect,
    margin: float = BOUNDARY_MARGIN,
):
    """Advance the spiral phase by omega * dt and return the new workspace-
    clamped position together with the new phase."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    theta_new = theta + omega * dt
    pos = domain.clamp(spiral_position(origin, theta_new, a), margin)
    return pos, theta_new


def write_mask_pgm(mask: FloodMask, path) -> None:
    """ASCII PBM-style bitmap (P1) of the mask, north row first; 1 = flooded."""
    img = mask.cells[::-1].astype(int)
    w = mask.w
    with open(path, "w") as f:
        f.write(f"P1\n{w} {w}\n")
        for row in img:
            for k in range(0, w, 32):
                f.write(" ".join(str(v) for v in row[k : k + 32]) + "\n")
