import unittest
import numpy as np
from scipy.integrate import trapezoid
from gbaxis.model import (ModelError, ModelParameters, CircadianDrive, StateVector, DelayedView,
                          STATE_NAMES, IDX_A, IDX_L, derivative, rhs, hill)


class ModelTestCase(unittest.TestCase):
    def setUp(self):
        self.p = ModelParameters()
        self.zero = np.zeros(6)

    def test_default_parameters(self):
        self.assertEqual(7.66, self.p.h)
        self.assertEqual(4, self.p.m1)
        self.assertEqual(120.0, self.p.max_delay)
        self.assertIn("tau_gut", ModelParameters.field_names())

    def test_invalid_parameters(self):
        with self.assertRaises(ModelError):
            ModelParameters(eA=-0.04)
        with self.assertRaises(ModelError):
            ModelParameters(m1=2.5)
        with self.assertRaises(ModelError):
            ModelParameters(L_base=1.5)
        with self.assertRaises(ModelError):
            ModelParameters(tau_hpa=float("nan"))

    def test_couplings_may_be_zero(self):
        p = self.p.replace(d1=0.0, d5=0.0, k_damage=0.0)
        self.assertEqual(0.0, p.d5)

    def test_circadian_drive(self):
        drive = CircadianDrive()
        self.assertAlmostEqual(1.5, drive.value(480.0))
        self.assertAlmostEqual(0.5, drive.value(480.0 + 720.0))
        self.assertAlmostEqual(drive.value(100.0), drive.value(100.0 + 1440.0))
        self.assertEqual(1.0, drive.frozen().value(123.0))
        with self.assertRaises(ModelError):
            CircadianDrive(amplitude=1.0)

    def test_circadian_mean(self):
        drive = CircadianDrive(mean_level=2.0, amplitude=0.7, phase=123.0)
        t = np.linspace(0.0, drive.period, 1000001)
        values = 2.0 * (1.0 + 0.7 * np.cos(2 * np.pi * (t - 123.0) / drive.period))
        self.assertAlmostEqual(2.0, trapezoid(values, t) / drive.period, delta=1e-9)
        self.assertAlmostEqual(values[4567], drive.value(t[4567]))

    def test_state_vector(self):
        x = StateVector.from_array([1, 2, 3, 4, 5, 0.5])
        self.assertEqual(5.0, x["C"])
        self.assertEqual(x, StateVector(**x.to_json()))
        with self.assertRaises(ModelError):
            StateVector.from_array([1, 2, 3])

    def test_hill(self):
        self.assertAlmostEqual(0.5, hill(15.0, 15.0, 2))
        self.assertEqual(0.0, hill(0.0, 15.0, 2))

    def test_rhs_at_zero_state(self):
        dx = rhs(0.0, self.zero, DelayedView(self.zero, self.zero), 0.0, 1.0, self.p)
        expected = np.zeros(6)
        expected[IDX_A] = self.p.h
        expected[IDX_L] = self.p.k_repair * self.p.L_base
        np.testing.assert_allclose(dx, expected, atol=1e-15)

    def test_rhs_leak_feeds_endotoxin(self):
        x = self.zero.copy()
        x[IDX_L] = 0.2
        dx = rhs(0.0, x, DelayedView(self.zero, self.zero), 3.0, 1.0, self.p)
        self.assertAlmostEqual(0.6, dx[0])

    def test_rhs_rejects_negative_component(self):
        x = self.zero.copy()
        x[2] = -1e-3
        with self.assertRaises(ModelError) as ctx:
            rhs(0.0, x, DelayedView(self.zero, self.zero), 0.1, 1.0, self.p)
        self.assertIn(STATE_NAMES[2], ctx.exception.message)

    def test_rhs_tolerates_rounding_below_zero(self):
        x = self.zero.copy()
        x[1] = -1e-14
        rhs(0.0, x, DelayedView(self.zero, self.zero), 0.1, 1.0, self.p)

    def test_rhs_rejects_bad_inputs(self):
        delayed = DelayedView(self.zero, self.zero)
        with self.assertRaises(ModelError):
            rhs(0.0, self.zero, delayed, -0.1, 1.0, self.p)
        with self.assertRaises(ModelError):
            rhs(0.0, self.zero, delayed, 0.1, 0.0, self.p)
        with self.assertRaises(ModelError):
            rhs(0.0, [np.inf, 0, 0, 0, 0, 0], delayed, 0.1, 1.0, self.p)

    def test_derivative_accepts_complex(self):
        x = np.array([1, 1, 1, 20, 10, 0.1], dtype=complex) + 1e-20j
        dx = derivative(x, x, x, 0.1, 1.0, self.p)
        self.assertEqual(np.complex128, dx.dtype)


if __name__ == '__main__':
    unittest.main()
