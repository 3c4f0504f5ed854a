"""Deterministic multi-agent flood-coverage simulator.

Agents with square camera footprints discover an unknown, slowly varying
flooded region, encode detections as Gaussian bumps in an importance density,
and redistribute by stepping toward the density-weighted centroids of their
Voronoi cells.
"""

from ._version import __version__
from .coverage import (
    RunRecord,
    SimConfig,
    StepRecord,
    cell_mass_centroid,
    control_step,
    cost_gradient,
    initial_positions,
    lloyd_step,
    locational_cost,
    partition_quadrature,
    simulate,
)
from .density import DensityField, GaussianComponent, component_integral, regularize_spd
from .geometry import Cell, Rect, clip_halfplane, polygon_area, voronoi_partition
from .metrics import converged, coverage_rate
from .sensing import (
    Detection,
    FloodField,
    FloodMask,
    capture,
    detect,
    make_flood_field,
    mask_moments,
    spiral_step,
)

__all__ = [
    "__version__",
    "Cell",
    "Rect",
    "clip_halfplane",
    "polygon_area",
    "voronoi_partition",
    "DensityField",
    "GaussianComponent",
    "component_integral",
    "regularize_spd",
    "FloodField",
    "FloodMask",
    "Detection",
    "capture",
    "detect",
    "make_flood_field",
    "mask_moments",
    "spiral_step",
    "SimConfig",
    "RunRecord",
    "StepRecord",
    "simulate",
    "lloyd_step",
    "partition_quadrature",
    "locational_cost",
    "cost_gradient",
    "cell_mass_centroid",
    "control_step",
    "initial_positions",
    "converged",
    "coverage_rate",
]
