#!/usr/bin/env python3

import math
import unittest

import numpy as np
from scipy import integrate, special

from heatwave.bundle_op import (apply_function, diagonal_operator, kernel_of, laplacian,
                                spectral_decompose)
from heatwave.errors import ValidationError
from heatwave.models import build_magnetic, random_phases
from heatwave.space import build_space, cycle, doubling_profile, path
from heatwave.wave_heat import (davies_gaffney_check, default_pair_grid, ellip_equivalence_check,
                                eps_support_radius, heat_kernel, heat_matrix, ondiag_factor,
                                propagation_speed_estimate, resolvent_profile,
                                subordination_check, subordination_constant, subordination_error,
                                subordination_weight, wave_kernel)


class TestKernels(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.space = cycle(64)
        cls.dec = spectral_decompose(laplacian(cls.space))

    def test_heat_kernel_bessel(self):
        # continuous time random walk on Z: e^{-2t} I_k(2t)
        kernel = heat_kernel(self.dec, 1.0)
        expected = math.exp(-2) * special.iv(2, 2.0)
        self.assertAlmostEqual(kernel.block(0, 2)[0, 0], expected, places=12)
        self.assertAlmostEqual(expected, 0.09324, places=5)

    def test_heat_at_zero_is_identity(self):
        kernel = heat_kernel(self.dec, 0.0)
        np.testing.assert_allclose(kernel.blocks[:, :, 0, 0], np.eye(64), atol=1e-12)

    def test_wave_at_zero_is_identity(self):
        kernel = wave_kernel(self.dec, 0.0)
        self.assertEqual(eps_support_radius(kernel, self.space), 0.0)

    def test_negative_times(self):
        with self.assertRaises(ValidationError):
            wave_kernel(self.dec, -1.0)
        with self.assertRaises(ValidationError):
            heat_kernel(self.dec, -1.0)

    def test_support_radius_grows(self):
        near = eps_support_radius(wave_kernel(self.dec, 2.0), self.space, 1e-10)
        far = eps_support_radius(wave_kernel(self.dec, 6.0), self.space, 1e-10)
        self.assertGreater(far, near)

    def test_bad_eps(self):
        with self.assertRaises(ValidationError):
            eps_support_radius(kernel_of(np.eye(4), path(4)), path(4), 0.0)

    def test_heat_semigroup(self):
        for s, t in ((0.5, 1.0), (2.0, 3.5)):
            np.testing.assert_allclose(heat_matrix(self.dec, s) @ heat_matrix(self.dec, t),
                                       heat_matrix(self.dec, s + t),
                                       atol=1e-9)

    def _cosine(self, t):
        return apply_function(self.dec, lambda lam: np.cos(t * np.sqrt(lam)))

    def test_cosine_functional_equation(self):
        for s, t in ((1.0, 0.5), (3.0, 2.0), (2.5, 4.0)):
            lhs = 2 * self._cosine(s) @ self._cosine(t)
            rhs = self._cosine(s + t) + self._cosine(abs(s - t))
            np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    def test_wave_is_contraction(self):
        for t in (0.5, 3.0, 11.0):
            self.assertLessEqual(np.linalg.norm(self._cosine(t), 2), 1 + 1e-12)


class TestPropagation(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.space = path(128)
        cls.op = laplacian(cls.space)
        cls.dec = spectral_decompose(cls.op)

    def test_slope(self):
        report = propagation_speed_estimate(self.dec, self.space, [2, 4, 6, 8])
        self.assertTrue(report.passed)
        self.assertGreaterEqual(report.observed_constant, 1.0)
        self.assertLessEqual(report.observed_constant, 3.0)
        self.assertTrue(report.details['within_cone_bound'])
        self.assertTrue(report.details['stable'])
        self.assertAlmostEqual(report.threshold, math.e * math.sqrt(self.dec.spectral_radius) / 2)

    def test_slope_outside_cone_fails(self):
        # slope is about 1.65 while half the cone bound is about 1.36
        report = propagation_speed_estimate(self.dec, self.space, [2, 4, 6, 8], cone_factor=0.5)
        self.assertFalse(report.passed)
        self.assertFalse(report.details['within_cone_bound'])
        self.assertTrue(report.details['stable'])

    def test_rescaling(self):
        base = propagation_speed_estimate(self.dec, self.space, [2, 4, 6, 8])
        faster = propagation_speed_estimate(spectral_decompose(self.op.scaled(4.0)), self.space,
                                            [2, 4, 6, 8])
        ratio = faster.observed_constant / base.observed_constant
        self.assertGreaterEqual(ratio, 1.5)
        self.assertLessEqual(ratio, 2.5)

    def test_grid_validation(self):
        with self.assertRaises(ValidationError):
            propagation_speed_estimate(self.dec, self.space, [2, 4])
        with self.assertRaises(ValidationError):
            propagation_speed_estimate(self.dec, self.space, [4, 2, 6])


class TestDaviesGaffney(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.space = cycle(256)
        cls.dec = spectral_decompose(laplacian(cls.space))

    def test_reference_ratio(self):
        report = davies_gaffney_check(self.dec, self.space, [(0, 8, 2.0)])
        oracle = math.exp(-4) * special.iv(8, 4.0) / math.exp(-8)
        self.assertAlmostEqual(report.observed_constant, oracle, places=9)
        self.assertAlmostEqual(report.observed_constant, 0.5356, delta=0.005)

    def test_default_grid_passes(self):
        report = davies_gaffney_check(self.dec, self.space)
        self.assertTrue(report.passed)
        self.assertLessEqual(report.observed_constant, 2.0)
        self.assertEqual(len(report.rows), len(default_pair_grid(self.space)))

    def test_default_grid_keeps_distance_below_four_t(self):
        for _, y, t in default_pair_grid(self.space):
            self.assertLessEqual(self.space.rho[0, y], 4 * t)

    def test_ball_of_radius_zero_is_point_probe(self):
        grid = [(0, 4, 1.0), (0, 8, 2.0)]
        point = davies_gaffney_check(self.dec, self.space, grid)
        balls = davies_gaffney_check(self.dec, self.space, grid, probe='ball', ball_radius=0.0)
        self.assertAlmostEqual(point.observed_constant, balls.observed_constant, places=12)

    def test_ball_probe(self):
        report = davies_gaffney_check(self.dec, self.space, [(0, 16, 4.0)], probe='ball',
                                      ball_radius=2.0)
        self.assertEqual(report.rows[0]['distance'], 12.0)

    def test_magnetic_ratio_below_free_ratio(self):
        space = cycle(64)
        grid = default_pair_grid(space)
        free = davies_gaffney_check(spectral_decompose(laplacian(space)), space, grid)
        twisted = build_magnetic(space, random_phases(space, seed=3))
        magnetic = davies_gaffney_check(spectral_decompose(twisted.operator), space, grid)
        for free_row, magnetic_row in zip(free.rows, magnetic.rows):
            self.assertLessEqual(magnetic_row['ratio'], free_row['ratio'] + 1e-12)
        self.assertLessEqual(magnetic.observed_constant, free.observed_constant + 1e-12)
        self.assertGreater(report.rows[0]['pairing'], 0.0)

    def test_bad_arguments(self):
        with self.assertRaises(ValidationError):
            davies_gaffney_check(self.dec, self.space, [(0, 4, 1.0)], probe='disk')
        with self.assertRaises(ValidationError):
            davies_gaffney_check(self.dec, self.space, [(0, 4, 0.0)])


class TestSubordination(unittest.TestCase):

    def test_weight_integrates_to_one(self):
        total = integrate.quad(lambda t: subordination_weight(np.array(t), 0.5), 0, np.inf)[0]
        self.assertAlmostEqual(total, 1.0, places=10)

    def test_cycle(self):
        dec = spectral_decompose(laplacian(cycle(32)))
        report = subordination_check(dec, 0.5, 64)
        self.assertTrue(report.passed)
        self.assertLessEqual(report.observed_constant, 1e-6)

    def test_error_decreases_with_nodes(self):
        dec = spectral_decompose(laplacian(cycle(32)).scaled(16.0))
        errors = [subordination_error(dec, 0.5, nodes)[0] for nodes in (16, 32, 64)]
        self.assertGreater(errors[0], errors[1])
        self.assertGreater(errors[1], errors[2])

    def test_scalar_operator(self):
        space = build_space([], [1.0])
        two = spectral_decompose(diagonal_operator(space, [2.0]))
        self.assertLessEqual(subordination_error(two, 1.0, 64)[0], 1e-8)
        zero = spectral_decompose(diagonal_operator(space, [0.0]))
        self.assertLessEqual(subordination_error(zero, 1.0, 64)[0], 1e-8)

    def test_failure_suggests_more_nodes(self):
        dec = spectral_decompose(laplacian(cycle(32)).scaled(64.0))
        report = subordination_check(dec, 0.5, 16, threshold=1e-12)
        self.assertFalse(report.passed)
        self.assertEqual(report.details['suggested_nodes'], 32)

    def test_bad_arguments(self):
        dec = spectral_decompose(laplacian(cycle(8)))
        with self.assertRaises(ValidationError):
            subordination_check(dec, 0.0)
        with self.assertRaises(ValidationError):
            subordination_check(dec, 0.5, 8)


class TestOnDiagonal(unittest.TestCase):

    def test_subordination_constant_against_quadrature(self):
        oracle = integrate.quad(lambda s: math.exp(-s) * (1 + 1 / s)**0.25, 0, np.inf)[0]
        constant = subordination_constant(4.0, 1.0)
        self.assertAlmostEqual(constant, oracle, delta=0.01 * oracle)
        self.assertGreater(constant, 1.3)
        self.assertLess(constant, 1.45)

    def test_ondiag_factor(self):
        self.assertAlmostEqual(ondiag_factor(4.0), math.exp(-3) * 4**4)
        self.assertAlmostEqual(ondiag_factor(4.0), 12.745, places=2)
        self.assertAlmostEqual(ondiag_factor(4.0, 4), 2 * ondiag_factor(4.0))

    def test_equivalence_on_cycle(self):
        space = cycle(256)
        dec = spectral_decompose(laplacian(space))
        d_exponent = doubling_profile(space).d_exponent
        report = ellip_equivalence_check(dec, space, [0.5, 1, 2, 4, 8], 4.0, d_exponent)
        self.assertTrue(report.passed)
        self.assertLessEqual(report.details['ratio_a'], report.details['constant_a'])
        self.assertLessEqual(report.details['ratio_b'], report.details['constant_b'])

    def test_needs_m_above_d(self):
        space = cycle(16)
        dec = spectral_decompose(laplacian(space))
        with self.assertRaises(ValidationError):
            ellip_equivalence_check(dec, space, [1.0], 1.0, 2.0)

    def test_resolvent_profile(self):
        space = cycle(16)
        dec = spectral_decompose(laplacian(space))
        profile = resolvent_profile(dec, space, [1.0, 2.0])
        self.assertEqual(profile.values.shape, (16, 2))
        self.assertGreater(profile.value(0, 1.0), profile.value(0, 2.0))
        np.testing.assert_allclose(profile.volume[:, 0], 3**-0.5)
        heat = resolvent_profile(dec, space, [1.0], choice='heat')
        self.assertEqual(heat.choice, 'heat')
        with self.assertRaises(ValidationError):
            resolvent_profile(dec, space, [1.0], choice='wave')
        with self.assertRaises(ValidationError):
            resolvent_profile(dec, space, [1.0], n_power=0)


if __name__ == '__main__':
    unittest.main()
