"""Planar geometry: rectangular workspace, convex cells, bounded Voronoi partition.

Cells are built by clipping the workspace rectangle against the perpendicular
bisectors of all site pairs, which is exact and fast for the small fleets
(n <= a few dozen) this simulator targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Consecutive vertices closer than this are merged while clipping.
MERGE_EPS = 1e-12
# Polygons below this area are treated as empty.
MIN_AREA = 1e-12
# Sites closer than this get jittered apart before tessellating.
MIN_SITE_SEPARATION = 1e-9
JITTER_RADIUS = 1e-7


def as_point(p) -> np.ndarray:
    """Coerce to a finite (2,) float array."""
    q = np.asarray(p, dtype=float).reshape(2)
    if not np.isfinite(q).all():
        raise ValueError(f"non-finite point: {p!r}")
    return q


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle [xmin, xmax] x [ymin, ymax]."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        vals = (self.xmin, self.ymin, self.xmax, self.ymax)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("rectangle bounds must be finite")
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError("need xmin < xmax and ymin < ymax")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> np.ndarray:
        return np.array([0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax)])

    def corners(self) -> np.ndarray:
        """Vertices in counterclockwise order starting at (xmin, ymin)."""
        return np.array(
            [
                [self.xmin, self.ymin],
                [self.xmax, self.ymin],
                [self.xmax, self.ymax],
                [self.xmin, self.ymax],
            ]
        )

    def contains(self, pts, margin: float = 0.0):
        """Elementwise containment test, shrunk inward by `margin`."""
        p = np.asarray(pts, dtype=float)
        x, y = p[..., 0], p[..., 1]
        return (
            (x >= self.xmin + margin)
            & (x <= self.xmax - margin)
            & (y >= self.ymin + margin)
            & (y <= self.ymax - margin)
        )

    def clamp(self, pts, margin: float = 0.0) -> np.ndarray:
        """Project points into the rectangle shrunk inward by `margin`."""
        p = np.array(pts, dtype=float)
        p[..., 0] = np.clip(p[..., 0], self.xmin + margin, self.xmax - margin)
        p[..., 1] = np.clip(p[..., 1], self.ymin + margin, self.ymax - margin)
        return p


def shoelace_area(vertices: np.ndarray) -> float:
    """Signed area of a polygon given as an (m, 2) vertex array."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    wrap = x[-1] * y[0] - y[-1] * x[0]
    return 0.5 * float(x[:-1] @ y[1:] - y[:-1] @ x[1:] + wrap)


@dataclass(frozen=True)
class Cell:
    """Convex polygon with counterclockwise vertices, tagged by its site index."""

    vertices: np.ndarray
    site_index: int

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("cell needs an (m>=3, 2) vertex array")
        if not np.isfinite(v).all():
            raise ValueError("cell vertices must be finite")
        if shoelace_area(v) <= 0.0:
            raise ValueError("cell vertices must be counterclockwise")
        scale = float(np.abs(v).max()) + 1.0
        e = np.empty_like(v)
        e[:-1] = v[1:] - v[:-1]
        e[-1] = v[0] - v[-1]
        cross = e[:-1, 0] * e[1:, 1] - e[:-1, 1] * e[1:, 0]
        wrap = e[-1, 0] * e[0, 1] - e[-1, 1] * e[0, 0]
        if (cross < -1e-9 * scale * scale).any() or wrap < -1e-9 * scale * scale:
            raise ValueError("cell must be convex")
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)

    @property
    def area(self) -> float:
        return shoelace_area(self.vertices)

    def centroid(self) -> np.ndarray:
        """Area centroid of the polygon."""
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        return (v + w).T @ cross / (6.0 * self.area)

    def contains(self, pts, tol: float = 1e-9):
        """True where points lie inside or on the boundary (within tol)."""
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        # cross(edge, point - vertex) >= -tol for every edge of a CCW polygon
        dx = p[:, None, 0] - v[None, :, 0]
        dy = p[:, None, 1] - v[None, :, 1]
        cross = e[None, :, 0] * dy - e[None, :, 1] * dx
        inside = (cross >= -tol).all(axis=1)
        return inside if np.asarray(pts).ndim > 1 else bool(inside[0])


def polygon_area(cell) -> float:
    """Area of a cell (or raw CCW vertex array) by the shoelace formula."""
    v = cell.vertices if isinstance(cell, Cell) else np.asarray(cell, dtype=float)
    return shoelace_area(v)


def _clip_poly(vertices: np.ndarray, normal: np.ndarray, offset: float):
    """Clip a convex CCW polygon to the halfplane {q : q . normal <= offset}.

    Returns the clipped vertex array, or None when the result is empty or
    degenerate (fewer than 3 vertices or area below MIN_AREA).

    Plain-float arithmetic on vertex lists: this runs tens of thousands of
    times per tessellation batch and ndarray row indexing dominates otherwise.
    """
    d = (vertices @ normal - offset).tolist()
    if all(di <= 0.0 for di in d):
        return vertices
    if all(di > 0.0 for di in d):
        return None
    vx = vertices[:, 0].tolist()
    vy = vertices[:, 1].tolist()
    m = len(vx)
    outx: list = []
    outy: list = []
    for i in range(m):
        j = i + 1 if i + 1 < m else 0
        di, dj = d[i], d[j]
        if di <= 0.0:
            outx.append(vx[i])
            outy.append(vy[i])
        if (di <= 0.0) != (dj <= 0.0):
            t = di / (di - dj)
            outx.append(vx[i] + t * (vx[j] - vx[i]))
            outy.append(vy[i] + t * (vy[j] - vy[i]))
    # drop duplicate consecutive vertices produced by on-boundary cases
    keep = [0]
    for k in range(1, len(outx)):
        p = keep[-1]
        if abs(outx[k] - outx[p]) > MERGE_EPS or abs(outy[k] - outy[p]) > MERGE_EPS:
            keep.append(k)
    if len(keep) > 1:
        k0, kl = keep[0], keep[-1]
        if abs(outx[kl] - outx[k0]) <= MERGE_EPS and abs(outy[kl] - outy[k0]) <= MERGE_EPS:
            keep.pop()
    if len(keep) < 3:
        return None
    poly = np.array([(outx[k], outy[k]) for k in keep])
    if shoelace_area(poly) < MIN_AREA:
        return None
    return poly


def clip_halfplane(cell: Cell, a, b):
    """Clip a cell to the side of the (a, b) perpendicular bisector containing a.

    Returns a new Cell, or None when nothing (non-degenerate) remains.
    """
    pa, pb = as_point(a), as_point(b)
    normal = pb - pa
    if float(normal @ normal) < MIN_SITE_SEPARATION**2:
        raise ValueError("bisector of (near-)coincident points is undefined")
    offset = float(0.5 * (pa + pb) @ normal)
    poly = _clip_poly(cell.vertices, normal, offset)
    if poly is None:
        return None
    return Cell(poly, cell.site_index)


def _separate_sites(sites: np.ndarray, seed: int) -> np.ndarray:
    """Jitter later-indexed near-coincident sites apart, deterministically."""
    pts = sites.copy()
    n = len(pts)
    for _attempt in range(8):
        collided = False
        for j in range(1, n):
            d = np.hypot(pts[:j, 0] - pts[j, 0], pts[:j, 1] - pts[j, 1])
            if (d < MIN_SITE_SEPARATION).any():
                rng = np.random.default_rng([seed & 0x7FFFFFFF, j, _attempt])
                ang = rng.uniform(0.0, 2.0 * np.pi)
                pts[j] += JITTER_RADIUS * np.array([np.cos(ang), np.sin(ang)])
                collided = True
        if not collided:
            return pts
    raise ValueError("could not separate coincident sites")


def voronoi_partition(sites, domain: Rect, seed: int = 0) -> list[Cell]:
    """Voronoi cells of the given sites, clipped to the rectangular domain.

    Each cell is the set of domain points at least as close to its site as
    to any other site. Sites must lie strictly inside the domain; coincident
    sites are separated by a deterministic seed-derived jitter.
    """
    pts = np.atleast_2d(np.asarray(sites, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("sites must be an (n, 2) array")
    if not np.isfinite(pts).all():
        raise ValueError("sites must be finite")
    strict = (
        (pts[:, 0] > domain.xmin)
        & (pts[:, 0] < domain.xmax)
        & (pts[:, 1] > domain.ymin)
        & (pts[:, 1] < domain.ymax)
    )
    if not strict.all():
        bad = int(np.flatnonzero(~strict)[0])
        raise ValueError(f"site {bad} is not strictly inside the domain")
    pts = _separate_sites(pts, seed)

    rect = domain.corners()
    cells = []
    d2_all = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    for i in range(len(pts)):
        p = pts[i]
        poly = rect
        order = np.argsort(d2_all[i])
        for j in order[1:]:
            # a bisector at distance dist/2 cannot cut a cell contained in
            # the radius-rmax disc around the site when dist >= 2 rmax
            rmax2 = ((poly - p) ** 2).sum(axis=1).max()
            if d2_all[i, j] >= 4.0 * rmax2:
                break  # sites are sorted: the rest are even farther
            normal = pts[j] - p
            offset = float(0.5 * (pts[j] + p) @ normal)
            poly = _clip_poly(poly, normal, offset)
            if poly is None:  # pragma: no cover - site always lies in its own cell
                raise RuntimeError("voronoi cell degenerated unexpectedly")
        cells.append(Cell(poly, i))
    return cells
