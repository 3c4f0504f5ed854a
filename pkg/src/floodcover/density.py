"""Importance density over the workspace: background constant plus switched
bivariate Gaussian bumps, one slot per agent.

Two modes share the pipeline: "gmdf" keeps the full covariance of each bump,
"axis" zeroes the cross term so every bump stays axis-aligned. Fields are
immutable values; updates return a new field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Rect, as_point

# Regularization floor for covariance matrices (added as eps * I).
SPD_EPS = 1e-6
SPD_DET_FLOOR = 1e-12

MODES = ("gmdf", "axis")

DEFAULT_PHI0 = 1e-3


def regularize_spd(sigma) -> np.ndarray:
    """Return a symmetric positive-definite copy of a 2x2 covariance.

    Symmetric positive-semidefinite inputs with a determinant below
    SPD_DET_FLOOR get SPD_EPS * I added; anything that still is not positive
    definite afterwards is rejected.
    """
    s = np.array(sigma, dtype=float).reshape(2, 2)
    if not np.isfinite(s).all():
        raise ValueError("covariance must be finite")
    scale = max(1.0, float(np.abs(s).max()))
    if abs(s[0, 1] - s[1, 0]) > 1e-9 * scale:
        raise ValueError("covariance must be symmetric")
    s[0, 1] = s[1, 0] = 0.5 * (s[0, 1] + s[1, 0])
    det = s[0, 0] * s[1, 1] - s[0, 1] ** 2
    if det < SPD_DET_FLOOR:
        s[0, 0] += SPD_EPS
        s[1, 1] += SPD_EPS
        det = s[0, 0] * s[1, 1] - s[0, 1] ** 2
    if det < SPD_DET_FLOOR or s[0, 0] <= 0.0 or s[1, 1] <= 0.0:
        raise ValueError(f"covariance is not positive definite: {sigma!r}")
    return s


def effective_sigma(sigma, mode: str) -> np.ndarray:
    """Covariance as stored by a field: cross term zeroed in axis mode, then
    regularized to SPD."""
    s = np.array(sigma, dtype=float).reshape(2, 2)
    if mode == "axis":
        scale = max(1.0, float(np.abs(s).max()))
        if abs(s[0, 1] - s[1, 0]) > 1e-9 * scale:
            raise ValueError("covariance must be symmetric")
        s[0, 1] = s[1, 0] = 0.0
    return regularize_spd(s)


@dataclass(frozen=True)
class GaussianComponent:
    """One unit-mass bump: mean, SPD covariance, and a 0/1 switch."""

    mu: np.ndarray
    sigma: np.ndarray
    rho: int = 0

    def __post_init__(self):
        mu = as_point(self.mu)
        mu.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        s = regularize_spd(self.sigma)
        s.flags.writeable = False
        object.__setattr__(self, "sigma", s)
        if self.rho not in (0, 1):
            raise ValueError("rho must be 0 or 1")
        object.__setattr__(self, "rho", int(self.rho))

    def pdf(self, pts: np.ndarray) -> np.ndarray:
        """Bivariate normal density at (N, 2) points."""
        s = self.sigma
        det = s[0, 0] * s[1, 1] - s[0, 1] ** 2
        dx = pts[:, 0] - self.mu[0]
        dy = pts[:, 1] - self.mu[1]
        # quadratic form via the explicit 2x2 inverse
        quad = (s[1, 1] * dx * dx - 2.0 * s[0, 1] * dx * dy + s[0, 0] * dy * dy) / det
        return np.exp(-0.5 * quad) / (2.0 * np.pi * np.sqrt(det))


@dataclass(frozen=True)
class DensityField:
    """phi(q) = phi0 + sum_i rho_i * N(q; mu_i, sigma_i)."""

    phi0: float
    components: tuple
    mode: str = "gmdf"

    def __post_init__(self):
        if not (np.isfinite(self.phi0) and self.phi0 > 0.0):
            raise ValueError("phi0 must be positive and finite")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        comps = []
        for c in self.components:
            if self.mode == "gmdf" or c.sigma[0, 1] == 0.0:
                comps.append(c)  # already in effective form
            else:
                comps.append(GaussianComponent(c.mu, effective_sigma(c.sigma, self.mode), c.rho))
        object.__setattr__(self, "components", tuple(comps))

    @classmethod
    def all_off(cls, phi0: float, n: int, mode: str, center) -> "DensityField":
        """Field with n switched-off placeholder components."""
        c = as_point(center)
        eps = SPD_EPS * np.eye(2)
        return cls(phi0, tuple(GaussianComponent(c, eps, 0) for _ in range(n)), mode)

    @property
    def n(self) -> int:
        return len(self.components)

    def evaluate(self, q):
        """Density at a point (2,) or at an (N, 2) batch of points."""
        pts = np.asarray(q, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        out = np.full(len(pts), self.phi0)
        for comp in self.components:
            if comp.rho:
                out += comp.pdf(pts)
        return float(out[0]) if single else out

    def set_component(self, i: int, mu, sigma, rho: int) -> "DensityField":
        """New field with component i replaced (covariance regularized, and
        cross term zeroed first in axis mode)."""
        if not 0 <= i < self.n:
            raise ValueError(f"component index {i} out of range [0, {self.n})")
        comps = list(self.components)
        comps[i] = GaussianComponent(as_point(mu), effective_sigma(sigma, self.mode), rho)
        return DensityField(self.phi0, tuple(comps), self.mode)


def evaluate(field: DensityField, q):
    return field.evaluate(q)


def component_integral(component: GaussianComponent, domain: Rect, grid: int) -> float:
    """Midpoint-rule integral of one component over the domain (0 if off)."""
    if component.rho == 0:
        return 0.0
    xs = domain.xmin + (np.arange(grid) + 0.5) * domain.width / grid
    ys = domain.ymin + (np.arange(grid) + 0.5) * domain.height / grid
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    da = (domain.width / grid) * (domain.height / grid)
    return float(component.pdf(pts).sum() * da)


def write_density_pgm(field: DensityField, domain: Rect, res: int, path) -> None:
    """16-bit ASCII PGM of the density over the domain, north row first.

    Values are scaled so the grid maximum maps to 65535.
    """
    xs = domain.xmin + (np.arange(res) + 0.5) * domain.width / res
    ys = domain.ymin + (np.arange(res) + 0.5) * domain.height / res
    gx, gy = np.meshgrid(xs, ys)
    phi = field.evaluate(np.column_stack([gx.ravel(), gy.ravel()])).reshape(res, res)
    img = np.rint(phi / phi.max() * 65535).astype(int)
    img = img[::-1]  # row 0 of the grid is south; PGM wants north first
    with open(path, "w") as f:
        f.write(f"P2\n{res} {res}\n65535\n")
        for row in img:
            for k in range(0, res, 16):
                f.write(" ".join(str(v) for v in row[k : k + 16]) + "\n")
