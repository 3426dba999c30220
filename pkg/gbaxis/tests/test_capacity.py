import math
import unittest
import numpy as np
from scipy.optimize import minimize_scalar
from gbaxis.model import ModelParameters, CircadianDrive
from gbaxis.steadystate import LinearizedSystem, operating_point
from gbaxis.frequency import FrequencyResponse, bode
from gbaxis.capacity import (CapacityError, NoiseModel, trapezoid_weights, water_level, water_fill_bins, water_fill,
                             capacity_sweeps, capacity_vs_stress, sweep_operating_point)


def flat_response(lo, hi, gain2, points=101):
    grid = np.linspace(lo, hi, points)
    return FrequencyResponse(grid, np.full(points, math.sqrt(gain2), dtype=complex), math.sqrt(gain2), None)


def one_pole_response():
    sys = LinearizedSystem([1.0], 0.1, [[-0.01]], [[0.0]], [[0.0]], [0.01], 10.0, 40.0, C_out=[1.0], stable=True)
    return bode(sys)


def allocation_capacity(gain2, noise, weights, S_u):
    return float(np.sum(weights * np.log2(1.0 + gain2 * S_u / noise)))


class WaterLevelTestCase(unittest.TestCase):
    def test_trapezoid_weights(self):
        grid = np.array([0.0, 1.0, 3.0])
        np.testing.assert_allclose([0.5, 1.5, 1.0], trapezoid_weights(grid))

    def test_exact_level(self):
        thresholds = np.array([1.0, 2.0, 10.0])
        weights = np.ones(3)
        mu = water_level(thresholds, weights, 3.0)
        self.assertAlmostEqual(3.0, mu)
        self.assertAlmostEqual(3.0, np.sum(weights * np.maximum(0.0, mu - thresholds)))

    def test_no_usable_bin(self):
        with self.assertRaises(CapacityError):
            water_level(np.array([np.inf, np.inf]), np.ones(2), 1.0)


class WaterFillTestCase(unittest.TestCase):
    def test_flat_channel_closed_form(self):
        lo, hi, g, N, P = 0.0, 0.5, 4.0, 1e-3, 2e-2
        result = water_fill(flat_response(lo, hi, g), NoiseModel(N), P, band_limited=True)
        W = 2.0 * (hi - lo)
        self.assertAlmostEqual(N / g + 2 * math.pi * P / W, result.mu, delta=1e-9 * result.mu)
        expected = W / (2 * math.pi) * math.log2(1.0 + 2 * math.pi * P * g / (W * N))
        self.assertAlmostEqual(expected, result.capacity_total, delta=1e-9 * expected)

    def test_truncated_band(self):
        with self.assertRaises(CapacityError):
            water_fill(flat_response(0.0, 0.5, 4.0), NoiseModel(1e-3), 2e-2)

    def test_two_level_brute_force(self):
        gain2 = np.array([1.0, 0.01])
        weights = np.array([0.3, 0.3])
        budget = 40.0
        result = water_fill_bins(gain2, np.ones(2), weights, budget)

        def negative_capacity(share):
            S_u = np.array([share, 1.0 - share]) * budget / weights
            return -allocation_capacity(gain2, 1.0, weights, S_u)

        best = minimize_scalar(negative_capacity, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-12})
        self.assertAlmostEqual(-best.fun, result.capacity_total, delta=1e-6)

    def test_beats_random_allocations(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(1, 9))
            gain2 = rng.uniform(0.01, 2.0, n)
            weights = rng.uniform(0.1, 1.0, n)
            noise = rng.uniform(0.1, 1.0, n)
            budget = float(rng.uniform(0.1, 5.0))
            optimum = water_fill_bins(gain2, noise, weights, budget)
            self.assertTrue(np.all(optimum.S_u >= 0))
            self.assertAlmostEqual(budget, optimum.power_used, delta=1e-9 * budget)
            S_u = rng.dirichlet(np.ones(n), 1000) * budget / weights
            trials = np.sum(weights * np.log2(1.0 + gain2 * S_u / noise), axis=1)
            self.assertLessEqual(trials.max(), optimum.capacity_total + 1e-9)

    def test_inactive_budget(self):
        with self.assertLogs(level="WARNING"):
            result = water_fill(one_pole_response(), NoiseModel(1e-4), 1e-30)
        self.assertEqual(0.0, result.capacity_total)
        self.assertTrue(np.all(result.S_u == 0.0))
        self.assertTrue(np.all(result.eta == 0.0))

    def test_invalid_inputs(self):
        with self.assertRaises(CapacityError):
            NoiseModel(0.0)
        with self.assertRaises(CapacityError):
            water_fill(one_pole_response(), NoiseModel(1e-4), -1.0)

    def test_one_pole_channel(self):
        response = one_pole_response()
        result = water_fill(response, NoiseModel(1e-4), 1e-2)
        self.assertAlmostEqual(1e-2, result.power_used, delta=1e-11)
        self.assertTrue(np.all(result.eta[result.S_u == 0] == 0.0))
        self.assertAlmostEqual(result.capacity_total, result.cumulative()[-1], delta=1e-9 * result.capacity_total)
        self.assertTrue(np.all(np.diff(result.cumulative()) >= 0))

    def test_phase_does_not_matter(self):
        response = one_pole_response()
        noise = NoiseModel(1e-4)
        self.assertAlmostEqual(water_fill(response, noise, 1e-2).capacity_total,
                               water_fill(response.with_zero_phase(), noise, 1e-2).capacity_total, places=12)


class SweepTestCase(unittest.TestCase):
    def setUp(self):
        self.sweeps = capacity_sweeps(one_pole_response(), [1e-5, 3e-5, 1e-4, 3e-4, 1e-3],
                                      [1e-3, 3e-3, 1e-2, 3e-2, 1e-1])

    def test_noise_sweep_decreasing(self):
        self.assertTrue(np.all(np.diff(self.sweeps.noise_curve) < 0))

    def test_power_sweep_increasing_and_concave(self):
        slopes = np.diff(self.sweeps.power_curve) / np.diff(self.sweeps.powers)
        self.assertTrue(np.all(slopes > 0))
        self.assertTrue(np.all(np.diff(slopes) <= 0))

    def test_invalid_ranges(self):
        with self.assertRaises(CapacityError):
            capacity_sweeps(one_pole_response(), [1e-3, 1e-4], [1e-2])


class StressCurveTestCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.points = capacity_vs_stress([0.1, 3.0], ModelParameters(), CircadianDrive(), NoiseModel(), 1e-2)

    def test_points_keep_order(self):
        self.assertEqual([0.1, 3.0], [point.k_leak for point in self.points])
        for point in self.points:
            self.assertTrue(point.capacity is not None or point.error)

    def test_healthy_exceeds_chronic(self):
        healthy, chronic = self.points
        self.assertTrue(healthy.stable and chronic.stable)
        self.assertGreater(healthy.capacity, chronic.capacity)


class OperatingPointCapacityTestCase(unittest.TestCase):
    NOISE_LEVELS = [1e-5, 1e-4, 1e-3]
    POWERS = [3e-3, 1e-2, 3e-2]

    @classmethod
    def setUpClass(cls):
        p, drive = ModelParameters(), CircadianDrive()
        cls.healthy = sweep_operating_point(operating_point(p, drive, 0.1), cls.NOISE_LEVELS, cls.POWERS)
        cls.chronic = sweep_operating_point(operating_point(p, drive, 3.0), cls.NOISE_LEVELS, cls.POWERS)

    def test_healthy_efficiency_peaks_higher(self):
        self.assertGreater(self.healthy.nominal.eta.max(), self.chronic.nominal.eta.max())

    def test_healthy_passband_is_broader(self):
        def band_edge(result):
            return result.grid[np.nonzero(result.S_u)[0][-1]]

        self.assertGreater(band_edge(self.healthy.nominal), band_edge(self.chronic.nominal))
        self.assertGreater(self.healthy.nominal.cumulative()[-1], self.chronic.nominal.cumulative()[-1])

    def test_healthy_more_robust_to_noise(self):
        self.assertTrue(np.all(self.healthy.noise_curve > self.chronic.noise_curve))
        self.assertTrue(np.all(np.diff(self.healthy.noise_curve) < 0))

    def test_healthy_uses_power_more_efficiently(self):
        self.assertTrue(np.all(self.healthy.power_curve > self.chronic.power_curve))


if __name__ == '__main__':
    unittest.main()
