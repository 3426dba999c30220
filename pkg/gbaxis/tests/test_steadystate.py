import unittest
import numpy as np
from scipy.optimize import brentq
from gbaxis.model import ModelParameters, CircadianDrive, IDX_P, IDX_T, IDX_A, IDX_C, IDX_L, derivative, hill
from gbaxis.steadystate import (EquilibriumError, UnstableOperatingPointError, LinearizedSystem, HPA_PATTERN,
                                GUT_PATTERN, find_equilibrium, linearize, probe_stability, simulated_start)
from gbaxis.integrator import IntegratorConfig, integrate


DECOUPLED = dict(k_damage=0.0, d1=0.0, d2=0.0, d3=0.0, d4=0.0, d5=0.0, d6=0.0)


def decoupled_equilibrium(p, u_star, e_bar=1.0):
    """Closed form for the loops with every coupling switched off, HPA part by bisection."""
    P = u_star * p.L_base / p.eP
    T = p.k * P / (p.x3 + P) / p.eT

    def acth(C):
        return p.h * e_bar * p.c ** p.m1 / (p.c ** p.m1 + C ** p.m1) / p.eA

    C = brentq(lambda C: p.alpha * hill(acth(C), p.a, p.m2) - p.eC * C, 0.0, p.alpha / p.eC, xtol=1e-14)
    return np.array([P, T, 0.0, acth(C), C, p.L_base])


def complex_step_jacobian(p, x, u_star, which):
    jac = np.empty((6, 6))
    for i in range(6):
        shifted = x.astype(complex)
        shifted[i] += 1e-20j
        args = [x, x, x]
        args[which] = shifted
        jac[:, i] = derivative(args[0], args[1], args[2], u_star, 1.0, p).imag / 1e-20
    return jac


class EquilibriumTestCase(unittest.TestCase):
    def setUp(self):
        self.p = ModelParameters(**DECOUPLED)
        self.drive = CircadianDrive()

    def test_decoupled_equilibrium(self):
        expected = decoupled_equilibrium(self.p, 0.5)
        x_star = find_equilibrium(self.p, self.drive, 0.5, start=1.1 * expected + 0.01)
        np.testing.assert_allclose(x_star, expected, rtol=1e-6, atol=1e-9)
        residual = derivative(x_star, x_star, x_star, 0.5, 1.0, self.p)
        self.assertLess(np.max(np.abs(residual)), 1e-10)

    def test_negative_input(self):
        with self.assertRaises(EquilibriumError):
            find_equilibrium(self.p, self.drive, -1.0, start=np.ones(6))


class LinearizeTestCase(unittest.TestCase):
    def setUp(self):
        self.p = ModelParameters()
        self.x = np.array([2.0, 0.5, 0.3, 30.0, 15.0, 0.12])

    def test_gut_half_saturation_slope(self):
        sys = linearize(self.p, self.x, 0.1)
        expected = self.p.k_damage * self.p.n_gut / (4.0 * self.p.C_half)
        self.assertAlmostEqual(expected, sys.J_gut[IDX_L, IDX_C], delta=1e-7 * expected)

    def test_decay_diagonal(self):
        x = self.x.copy()
        x[IDX_T] = 0.0
        sys = linearize(self.p, x, 0.1)
        self.assertAlmostEqual(-self.p.eA, sys.J0[IDX_A, IDX_A], places=9)
        self.assertAlmostEqual(-self.p.eC, sys.J0[IDX_C, IDX_C], places=9)
        self.assertAlmostEqual(-self.p.k_repair, sys.J0[IDX_L, IDX_L], places=9)
        self.assertAlmostEqual(-self.p.eP, sys.J0[IDX_P, IDX_P], places=9)

    def test_matches_complex_step(self):
        sys = linearize(self.p, self.x, 0.1)
        np.testing.assert_allclose(sys.J0, complex_step_jacobian(self.p, self.x, 0.1, 0), rtol=1e-6, atol=1e-9)
        np.testing.assert_allclose(sys.J_hpa, complex_step_jacobian(self.p, self.x, 0.1, 1), rtol=1e-6, atol=1e-9)
        np.testing.assert_allclose(sys.J_gut, complex_step_jacobian(self.p, self.x, 0.1, 2), rtol=1e-6, atol=1e-9)

    def test_sparsity(self):
        sys = linearize(self.p, self.x, 0.1)
        for jac, pattern in ((sys.J_hpa, HPA_PATTERN), (sys.J_gut, GUT_PATTERN)):
            mask = np.zeros((6, 6), dtype=bool)
            for entry in pattern:
                mask[entry] = True
            self.assertTrue(np.all(jac[~mask] == 0.0))
            self.assertTrue(np.all(jac[mask] != 0.0))
        expected_b = np.zeros(6)
        expected_b[IDX_P] = self.x[IDX_L]
        np.testing.assert_array_equal(expected_b, sys.B)


class LinearizedSystemTestCase(unittest.TestCase):
    def scalar(self, stable=None):
        return LinearizedSystem([1.0], 0.1, [[-2.0]], [[0.0]], [[0.0]], [1.0], 10.0, 120.0, C_out=[1.0],
                                stable=stable)

    def test_dc_gain(self):
        self.assertAlmostEqual(0.5, self.scalar().dc_gain())
        self.assertAlmostEqual(1.0, self.scalar().condition_number())

    def test_require_stable(self):
        for flag in (None, False):
            with self.assertRaises(UnstableOperatingPointError) as ctx:
                self.scalar(flag).require_stable()
            self.assertIn("unstable operating point", ctx.exception.message)
        self.scalar(True).require_stable()


class OperatingPointTestCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.p = ModelParameters()
        cls.drive = CircadianDrive()
        cls.x_star = find_equilibrium(cls.p, cls.drive, 0.1)
        cls.sys = linearize(cls.p, cls.x_star, 0.1)

    def test_equilibrium_is_physical(self):
        self.assertTrue(np.all(self.x_star >= 0))
        self.assertGreater(self.x_star[IDX_C], 0)

    def test_matches_long_frozen_run(self):
        settled = simulated_start(self.p, self.drive, 0.1)
        np.testing.assert_allclose(settled, self.x_star, rtol=1e-6)

    def test_dc_gain_matches_equilibrium_slope(self):
        du = 0.005 * 0.1
        plus = find_equilibrium(self.p, self.drive, 0.1 + du, start=self.x_star)
        minus = find_equilibrium(self.p, self.drive, 0.1 - du, start=self.x_star)
        slope = (plus[IDX_C] - minus[IDX_C]) / (2 * du)
        self.assertAlmostEqual(slope, self.sys.dc_gain(), delta=0.02 * abs(slope) + 1e-12)

    def test_step_response_settles_at_dc_gain(self):
        du = 1e-3 * 0.1
        ts = integrate(self.p, self.drive.frozen(), 0.1 + du, self.x_star, IntegratorConfig(horizon=20 * 1440.0))
        shift = ts.final_state()[IDX_C] - self.x_star[IDX_C]
        expected = self.sys.dc_gain() * du
        self.assertAlmostEqual(expected, shift, delta=0.02 * abs(expected))

    def test_healthy_point_is_stable(self):
        self.assertTrue(probe_stability(self.sys, self.p, self.drive))
        self.assertTrue(self.sys.stable)


if __name__ == '__main__':
    unittest.main()
