import numpy as np
import pytest

from floodcover.coverage import StepRecord
from floodcover.geometry import Rect
from floodcover.metrics import (
    converged,
    coverage_rate,
    read_metrics_csv,
    time_to_fraction,
    write_metrics_csv,
)
from floodcover.sensing import band_field, blob_field, make_flood_field

DOMAIN = Rect(0.0, 0.0, 20.0, 20.0)


class TestCoverageRate:
    def test_no_agents_near_flood(self):
        f = blob_field((4.0, 4.0), 2.0, level_amp=0.0)
        assert coverage_rate(f, 0.0, [(16.0, 16.0)], 1.0, DOMAIN) == 0.0

    def test_flood_inside_one_footprint(self):
        f = blob_field((10.0, 10.0), 0.8, level_amp=0.0)
        assert coverage_rate(f, 0.0, [(10.0, 10.0)], 1.0, DOMAIN) == 1.0

    def test_no_flood_returns_zero(self):
        f = make_flood_field("none", DOMAIN)
        assert coverage_rate(f, 0.0, [(10.0, 10.0)], 1.0, DOMAIN) == 0.0

    def test_band_analytic_overlap(self):
        # band y in [8, 12] crossing the whole 20 m width; one footprint
        # [9, 11]^2 covers a 2 m x 2 m patch of the 80 m^2 band
        f = band_field(10.0, 2.0, level_amp=0.0)
        res = 512
        got = coverage_rate(f, 0.0, [(10.0, 10.0)], 1.0, DOMAIN, res=res)
        assert got == pytest.approx(4.0 / 80.0, abs=2.0 / res)

    def test_monotone_in_footprint_size(self):
        f = make_flood_field("ellipse", DOMAIN)
        rng = np.random.default_rng(0)
        pos = rng.uniform(2, 18, size=(6, 2))
        rates = [coverage_rate(f, 0.0, pos, h, DOMAIN) for h in (0.5, 1.0, 2.0, 4.0)]
        assert all(b >= a for a, b in zip(rates, rates[1:]))

    def test_resolution_stability(self):
        rng = np.random.default_rng(1)
        pos = rng.uniform(2, 18, size=(8, 2))
        for scenario in ("band", "blob", "ellipse"):
            f = make_flood_field(scenario, DOMAIN)
            r256 = coverage_rate(f, 10.0, pos, 1.0, DOMAIN, res=256)
            r512 = coverage_rate(f, 10.0, pos, 1.0, DOMAIN, res=512)
            assert abs(r512 - r256) < 0.01

    def test_multiple_agents_union(self):
        # two agents covering disjoint halves of a thin band
        f = band_field(10.0, 0.5, level_amp=0.0)
        one = coverage_rate(f, 0.0, [(5.0, 10.0)], 1.0, DOMAIN)
        both = coverage_rate(f, 0.0, [(5.0, 10.0), (15.0, 10.0)], 1.0, DOMAIN)
        assert both == pytest.approx(2.0 * one, rel=1e-6)


class TestConverged:
    def test_exact_match(self):
        p = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert converged(p, p.copy(), tol=1e-12)

    def test_displaced_agent_fails(self):
        p = np.array([[1.0, 2.0], [3.0, 4.0]])
        c = p.copy()
        c[1, 0] += 2e-3
        assert not converged(p, c, tol=1e-3)

    def test_small_perturbations_pass(self):
        rng = np.random.default_rng(2)
        p = rng.uniform(0, 20, size=(10, 2))
        for _ in range(20):
            c = p + rng.uniform(-1, 1, size=p.shape) * 1e-4
            assert converged(p, c, tol=1e-3)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            converged(np.zeros((3, 2)), np.zeros((4, 2)), tol=1.0)


class TestMetricsCsv:
    def test_round_trip(self, tmp_path):
        steps = [
            StepRecord(0.0, np.zeros((2, 2)), np.zeros(2, dtype=int), 0, 3.5, 0.0, 1.25),
            StepRecord(0.1, np.zeros((2, 2)), np.ones(2, dtype=int), 2, 3.25, 0.5, 0.75),
        ]
        path = tmp_path / "metrics.csv"
        write_metrics_csv(steps, path)
        cols = read_metrics_csv(path)
        assert np.allclose(cols["t"], [0.0, 0.1])
        assert np.allclose(cols["coverage_rate"], [0.0, 0.5])
        assert np.allclose(cols["H"], [3.5, 3.25])
        assert cols["n_f"].tolist() == [0, 2]
        assert np.allclose(cols["max_centroid_gap"], [1.25, 0.75])

    def test_header_line(self, tmp_path):
        path = tmp_path / "metrics.csv"
        write_metrics_csv([], path)
        assert path.read_text().splitlines()[0] == "t,coverage_rate,H,n_f,max_centroid_gap"


class TestTimeToFraction:
    def test_monotone_series(self):
        ts = np.arange(0.0, 10.0, 0.5)
        vals = np.linspace(0.0, 1.0, len(ts))
        assert time_to_fraction(ts, vals, 0.9) == pytest.approx(9.0, abs=0.5)

    def test_instant_saturation(self):
        assert time_to_fraction([0.0, 1.0], [1.0, 1.0], 0.9) == 0.0

    def test_all_zero_series(self):
        assert time_to_fraction([0.0, 1.0, 2.0], [0.0, 0.0, 0.0], 0.9) == 0.0
