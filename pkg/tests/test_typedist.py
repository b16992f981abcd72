import math

import numpy as np
import pytest

from agency import (
    AtomPresentError,
    UndefinedAtAtomError,
    ZeroCdfError,
    ZeroDensityError,
    exponential,
    from_spec,
    iron,
    iron_inverse,
    mixture,
    piecewise,
    point_mass,
    rhr,
    to_spec,
    truncated_normal,
    uniform,
)


def non_implement_dist():
    d = 20.0 / 23.0
    return piecewise([(0, 1, d), (1, 4, 0.025 * d), (4, 10, 0.0125 * d)])


class TestCdf:
    def test_uniform_midpoint(self):
        assert uniform(0, 1).cdf(0.5) == pytest.approx(0.5)

    def test_mixture_atom(self, rng):
        eps = 0.5
        mix = mixture([(1 - eps, point_mass(1.0)), (eps, uniform(0, 2))])
        assert mix.cdf(1.0) == pytest.approx(0.75)
        assert mix.cdf_left(1.0) == pytest.approx(0.25)
        # Monte-Carlo cross-check
        s = mix.sample(rng, 200_000)
        assert np.mean(s <= 1.0) == pytest.approx(0.75, abs=0.005)

    def test_piecewise_counterexample(self):
        assert non_implement_dist().cdf(1.0) == pytest.approx(20 / 23, abs=1e-12)

    def test_clamps_outside_support(self):
        u = uniform(1, 2)
        assert u.cdf(0.0) == 0.0
        assert u.cdf(5.0) == 1.0

    def test_numeric_cdf_matches_density_integral(self):
        for dist in (uniform(0.5, 3), exponential(0.7), truncated_normal(1, 2, 0),
                     non_implement_dist()):
            hi = dist.effective_high()
            xs = np.linspace(dist.c_low, hi, 1001)
            fine = np.linspace(dist.c_low, hi, 200_001)
            mid = 0.5 * (fine[1:] + fine[:-1])
            dens = np.asarray(dist.pdf(mid, side="right"))
            approx = np.concatenate([[0], np.cumsum(dens * np.diff(fine))])
            num = np.interp(xs, fine, approx)
            exact = np.asarray(dist.cdf(xs))
            assert np.max(np.abs(num - exact)) < 1e-8 * max(1.0, exact.max())


class TestVirtualCost:
    def test_uniform_doubles(self):
        u = uniform(0, 3)
        c = np.linspace(0.001, 3, 500)
        assert np.max(np.abs(np.asarray(u.virtual_cost(c)) - 2 * c)) < 1e-12

    def test_counterexample_segments(self):
        d = non_implement_dist()
        assert d.virtual_cost(2.0) == pytest.approx(43.0, abs=1e-9)
        assert d.virtual_cost(0.5) == pytest.approx(1.0, abs=1e-9)
        assert d.virtual_cost(5.0) == pytest.approx(92.0, abs=1e-9)

    def test_exponential_at_zero(self):
        assert exponential(1.0).virtual_cost(0.0) == pytest.approx(0.0)

    def test_atom_raises(self):
        mix = mixture([(0.5, point_mass(1.0)), (0.5, uniform(0, 2))])
        with pytest.raises(UndefinedAtAtomError):
            mix.virtual_cost(1.0)
        # atoms strictly below are folded into the CDF
        assert mix.virtual_cost(1.5) == pytest.approx(1.5 + (0.875 / 0.25))

    def test_zero_density_raises(self):
        with pytest.raises(ZeroDensityError):
            uniform(1, 2).virtual_cost(0.5)


class TestIron:
    def test_uniform_identity(self):
        iv = iron(uniform(0, 1))
        c = np.linspace(0, 1, 1000)
        assert np.max(np.abs(np.asarray(iv.value(c)) - 2 * c)) < 1e-8
        assert iv.flats == ()

    def test_counterexample_monotone(self):
        iv = iron(non_implement_dist())
        assert iv.flats == ()
        c = np.linspace(0.01, 9.99, 1500)
        expected = np.asarray(non_implement_dist().virtual_cost(c))
        assert np.max(np.abs(np.asarray(iv.value(c)) - expected)) < 1e-6

    def test_synthetic_non_monotone(self):
        # density jumps up at 1, so the virtual cost drops there and the
        # hull must bridge the dip with a flat
        dist = piecewise([(0, 1, 0.2), (1, 2, 0.8)])
        phi = dist.virtual_cost
        assert phi(1.0) < phi(0.999)  # genuinely non-monotone
        iv = iron(dist)
        assert len(iv.flats) >= 1
        vals = np.asarray(iv.value(np.linspace(0, 2, 2000)))
        assert np.all(np.diff(vals) >= -1e-9)
        # hull property: integral of the ironed function equals the lower
        # convex hull of the integral of the raw one (brute-force check)
        grid = iv.grid
        mid = 0.5 * (grid[:-1] + grid[1:])
        raw = np.concatenate([[0.0], np.cumsum(np.asarray(phi(mid)) * np.diff(grid))])
        ironed_int = np.concatenate(
            [[0.0], np.cumsum(np.asarray(iv.value(mid)) * np.diff(grid))]
        )
        hull = np.asarray(_lower_hull_vals(grid, raw))
        assert np.max(np.abs(ironed_int - hull)) < 1e-8 * max(1.0, raw.max())

    def test_atoms_rejected(self):
        with pytest.raises(AtomPresentError):
            iron(mixture([(0.5, point_mass(1.0)), (0.5, uniform(0, 2))]))

    def test_small_grid_rejected(self):
        with pytest.raises(ValueError):
            iron(uniform(0, 1), grid_size=32)


def _lower_hull_vals(x, y):
    hull = []
    for i in range(len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            if (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a]) <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.interp(x, x[hull], y[hull])


class TestIronInverse:
    def test_uniform(self):
        iv = iron(uniform(0, 1))
        assert iron_inverse(iv, 1.0) == pytest.approx(0.5, abs=1e-9)

    def test_counterexample_jumps(self):
        iv = iron(non_implement_dist())
        # scan oracle at 1e-4 resolution for q = 50
        grid = np.arange(0, 10, 1e-4)
        phi = np.asarray(non_implement_dist().virtual_cost(np.maximum(grid, 1e-9)))
        oracle = grid[phi <= 50].max()
        assert iron_inverse(iv, 50.0) == pytest.approx(4.0, abs=1e-6)
        assert abs(iron_inverse(iv, 50.0) - oracle) < 2e-4
        assert iron_inverse(iv, 100.0) == pytest.approx(9.0, abs=1e-6)
        assert iron_inverse(iv, 40.0) == pytest.approx(1.0, abs=1e-6)

    def test_clamps(self):
        iv = iron(uniform(1, 2))
        assert iron_inverse(iv, 0.0) == 1.0
        assert iron_inverse(iv, 1e9) == 2.0

    def test_round_trip_property(self):
        for dist in (uniform(0, 2), exponential(1.0), non_implement_dist()):
            iv = iron(dist)
            for c in np.linspace(dist.c_low + 1e-6, iv.c_high - 1e-6, 25):
                q = float(iv.value(c))
                assert iron_inverse(iv, q) >= c - 1e-7
                assert q >= c - 1e-9  # ironed virtual cost dominates cost


class TestQuantile:
    def test_uniform_quarter(self):
        assert uniform(1, 5).quantile(0.25) == pytest.approx(2.0)

    def test_zero_is_low_end(self):
        assert exponential(2.0).quantile(0.0) == 0.0
        assert non_implement_dist().quantile(0.0) == 0.0

    def test_atom_plateau_left_endpoint(self):
        mix = mixture([(0.5, point_mass(1.0)), (0.5, uniform(0, 2))])
        # CDF jumps from 0.25 to 0.75 at c = 1
        for q in (0.3, 0.5, 0.74):
            assert mix.quantile(q) == pytest.approx(1.0, abs=1e-9)
        # scan-grid oracle
        grid = np.linspace(0, 2, 100_001)
        G = np.asarray(mix.cdf(grid))
        assert grid[np.argmax(G >= 0.5)] == pytest.approx(1.0, abs=1e-4)

    def test_round_trip(self):
        d = truncated_normal(1, 2, 0)
        for q in (0.1, 0.5, 0.93):
            assert d.cdf(d.quantile(q)) == pytest.approx(q, abs=1e-9)


class TestRhr:
    def test_uniform(self):
        assert rhr(uniform(0, 1), 0.5) == pytest.approx(2.0)

    def test_exponential_closed_form(self):
        got = rhr(exponential(1.0), 1.0)
        assert got == pytest.approx(math.exp(-1) / (1 - math.exp(-1)), rel=1e-12)

    def test_zero_cdf_raises(self):
        with pytest.raises(ZeroCdfError):
            rhr(uniform(0, 1), 0.0)


class TestSpecFormat:
    def test_round_trip(self):
        specs = [
            {"kind": "uniform", "low": 0.0, "high": 2.0},
            {"kind": "exponential", "rate": 0.5},
            {"kind": "truncated_normal", "mu": 1.0, "sigma": 2.0, "low": 0.0},
            {
                "kind": "mixture",
                "parts": [
                    {"weight": 0.9, "dist": {"kind": "atom", "at": 1.0}},
                    {"weight": 0.1, "dist": {"kind": "uniform", "low": 0.0, "high": 2.0}},
                ],
            },
            {
                "kind": "piecewise",
                "segments": [
                    {"from": 0.0, "to": 1.0, "density": 0.25},
                    {"from": 1.0, "to": 2.0, "density": 0.75},
                ],
            },
        ]
        for spec in specs:
            dist = from_spec(spec)
            dist2 = from_spec(to_spec(dist))
            probe = np.linspace(0, 3, 50)
            assert np.allclose(np.asarray(dist.cdf(probe)), np.asarray(dist2.cdf(probe)))

    def test_unknown_kind(self):
        with pytest.raises(Exception, match="unknown distribution kind"):
            from_spec({"kind": "beta"})
