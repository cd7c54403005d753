#!/usr/bin/env python3

import dataclasses
import unittest

import numpy as np

from heatwave.bundle_op import laplacian, spectral_decompose
from heatwave.cz_riesz import (cz_decompose, cz_decomposition_check, fractional_power,
                               good_function_diagnostic, gradient_operator, lp_norm_estimate,
                               maximal_function, multiplication_operator, one_norm,
                               pointwise_size, riesz_l2_check, riesz_l2_norm, riesz_matrix,
                               riesz_tail_bound_check, riesz_uniformity_check, weak11_estimate)
from heatwave.errors import ValidationError
from heatwave.multiplier import build_phi_family
from heatwave.space import build_space, cycle


def indicator(n, x=0):
    f = np.zeros(n)
    f[x] = 1.0
    return f


class TestMaximalFunction(unittest.TestCase):

    def test_point_mass(self):
        values = maximal_function(cycle(64), indicator(64))
        self.assertEqual(values[0], 1.0)
        self.assertAlmostEqual(values[5], 1 / 11)
        self.assertAlmostEqual(values[59], 1 / 11)

    def test_radius_grid(self):
        values = maximal_function(cycle(16), indicator(16), radii=[1.0])
        self.assertAlmostEqual(values[0], 1 / 3)
        self.assertEqual(values[4], 0.0)
        with self.assertRaises(ValidationError):
            maximal_function(cycle(16), indicator(16), radii=[])

    def test_pointwise_size(self):
        section = np.array([[3.0, 4.0], [0.0, 1.0]])
        np.testing.assert_allclose(pointwise_size(section), [5.0, 1.0])


class TestDecomposition(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.space = cycle(64)
        cls.f = indicator(64)
        cls.czd = cz_decompose(cls.space, cls.f, 1 / 8)

    def test_level_set(self):
        covered = sorted(c for c, _ in self.czd.balls)
        self.assertEqual(covered, [0, 2, 3, 61, 62])
        self.assertEqual(self.czd.balls[0], (0, 1.6))
        self.assertTrue(np.all(self.czd.good == 0))

    def test_first_cell(self):
        part = self.czd.bad[0]
        self.assertEqual(part[0], 1.0)
        self.assertEqual(np.count_nonzero(part), 1)

    def test_reconstruction(self):
        np.testing.assert_array_equal(self.czd.reconstruction(), self.f)
        self.assertEqual(self.czd.constants['residual'], 0.0)

    def test_constants(self):
        constants = self.czd.constants
        self.assertAlmostEqual(constants['ball_measure'], 7 / 8)
        self.assertAlmostEqual(constants['bad_mass'], 8 / 3)
        self.assertEqual(constants['overlap'], 3.0)
        self.assertEqual(constants['good_sup'], 0.0)

    def test_as_dict(self):
        data = self.czd.as_dict(self.space)
        self.assertEqual(data['level'], 1 / 8)
        self.assertEqual(len(data['balls']), 5)
        self.assertEqual(data['balls'][0]['integral'], 1.0)

    def test_level_above_maximal_function(self):
        czd = cz_decompose(self.space, self.f, 2.0)
        self.assertEqual(czd.bad, [])
        np.testing.assert_array_equal(czd.good, self.f)

    def test_bad_levels(self):
        with self.assertRaises(ValidationError):
            cz_decompose(self.space, self.f, 1 / 128)
        with self.assertRaises(ValidationError):
            cz_decompose(self.space, self.f, 0.0)
        with self.assertRaises(ValidationError):
            cz_decompose(self.space, np.zeros(64), 1.0)

    def test_seeded_samples(self):
        report = cz_decomposition_check(self.space, samples=10)
        self.assertTrue(report.passed)
        self.assertEqual(len(report.rows) + report.details['skipped'], 10)
        self.assertLessEqual(report.details['worst']['good_sup'], 1 + 1e-12)
        with self.assertRaises(ValidationError):
            cz_decomposition_check(self.space, samples=0)

    def test_seed_is_reproducible(self):
        first = cz_decomposition_check(self.space, samples=3, seed=7)
        second = cz_decomposition_check(self.space, samples=3, seed=7)
        self.assertEqual(first.rows, second.rows)


class TestOperators(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.space = cycle(16)
        cls.dec = spectral_decompose(laplacian(cls.space))
        cls.grad = gradient_operator(cls.space)

    def test_gradient_is_local(self):
        self.assertEqual(self.grad.locality_radius, 0.5)
        self.assertLessEqual(self.grad.support_violation(), 1e-12)
        self.assertEqual(self.grad.target_fiber, 1)

    def test_fractional_power_inverts_off_kernel(self):
        product = self.dec.operator.matrix @ fractional_power(self.dec, 1.0)
        np.testing.assert_allclose(product, np.eye(16) - np.ones((16, 16)) / 16, atol=1e-10)

    def test_mismatched_operator(self):
        with self.assertRaises(ValidationError):
            riesz_matrix(gradient_operator(cycle(8)), self.dec, 0.5)

    def test_gradient_riesz_norm(self):
        self.assertAlmostEqual(riesz_l2_norm(self.grad, self.dec, 0.5), 1.0, delta=1e-8)
        with self.assertRaises(ValidationError):
            riesz_l2_norm(self.grad, self.dec, 0.0)

    def test_riesz_l2_check(self):
        report = riesz_l2_check(self.grad, self.dec, 0.5, expected=1.0)
        self.assertTrue(report.passed)
        self.assertIn('weak11', report.details)
        self.assertIn('one_norm', report.details)
        self.assertGreater(report.details['lp_norm'], 0.0)

    def test_weighted_gradient_norm(self):
        space = build_space([(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 0, 0.5)],
                            [1.0, 2.0, 0.5, 1.5])
        dec = spectral_decompose(laplacian(space))
        report = riesz_l2_check(gradient_operator(space), dec, 0.5)
        self.assertTrue(report.passed)

    def test_multiplication_operator(self):
        op = multiplication_operator(self.space, np.arange(16.0))
        np.testing.assert_allclose(op.apply(np.ones(16)), np.arange(16.0))
        self.assertEqual(op.support_violation(), 0.0)

    def test_identity_estimates(self):
        self.assertAlmostEqual(weak11_estimate(np.eye(16), self.space), 1.0)
        self.assertAlmostEqual(one_norm(np.eye(16), self.space), 1.0)
        self.assertAlmostEqual(lp_norm_estimate(np.eye(16), 1.5), 1.0)

    def test_lp_estimate(self):
        matrix = np.diag([3.0, 1.0, 0.5, 0.25])
        self.assertAlmostEqual(lp_norm_estimate(matrix, 2.0), 3.0, places=6)
        with self.assertRaises(ValidationError):
            lp_norm_estimate(matrix, 3.0)
        with self.assertRaises(ValidationError):
            lp_norm_estimate(matrix, 1.5, iterations=5)


class TestGoodFunction(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.space = cycle(64)
        cls.dec = spectral_decompose(laplacian(cls.space))
        cls.phi = build_phi_family(2)
        cls.report = good_function_diagnostic(cls.space, cls.dec, indicator(64), 1 / 8, cls.phi)

    def test_point_mass(self):
        report = self.report
        self.assertTrue(report.passed)
        self.assertEqual(report.threshold, 16.0)
        self.assertEqual(len(report.rows), 1)
        self.assertEqual(report.rows[0]['center'], 0)
        self.assertEqual(report.artifacts['good_function'].shape, (64,))

    def test_column_constant_within_profile_bound(self):
        details = self.report.details
        self.assertGreater(details['lemma_constant'], 0.0)
        self.assertLessEqual(details['lemma_constant'], details['lemma_bound'] * (1 + 1e-9))

    def test_single_piece_energy(self):
        # the good part vanishes, so G is the one smoothed bad piece
        details = self.report.details
        self.assertAlmostEqual(details['energy_ratio'], details['good_ratio'], places=9)
        self.assertLessEqual(details['good_ratio'], 16.0)

    def test_scaled_multiplier_fails(self):
        loud = dataclasses.replace(self.phi, coefficients=self.phi.coefficients * 1e3)
        report = good_function_diagnostic(self.space, self.dec, indicator(64), 1 / 8, loud)
        self.assertFalse(report.passed)
        self.assertAlmostEqual(report.details['lemma_constant'],
                               1e3 * self.report.details['lemma_constant'],
                               delta=1e-6 * report.details['lemma_constant'])

    def test_stable_under_doubling(self):
        larger = cycle(128)
        report = good_function_diagnostic(larger, spectral_decompose(laplacian(larger)),
                                          indicator(128), 1 / 8, self.phi)
        self.assertTrue(report.passed)
        for key in ('lemma_constant', 'energy_ratio', 'good_ratio'):
            ratio = report.details[key] / self.report.details[key]
            self.assertLessEqual(abs(ratio - 1), 0.25, key)

    def test_without_bad_balls(self):
        report = good_function_diagnostic(self.space, self.dec, indicator(64), 2.0, self.phi)
        self.assertTrue(report.passed)
        self.assertEqual(report.rows, [])
        self.assertAlmostEqual(report.details['good_ratio'], 0.5)

    def test_bad_constant(self):
        with self.assertRaises(ValidationError):
            good_function_diagnostic(self.space, self.dec, indicator(64), 1 / 8, self.phi,
                                     constant=0.0)


class TestRieszTailBound(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.space = cycle(128)
        cls.dec = spectral_decompose(laplacian(cls.space))
        cls.grad = gradient_operator(cls.space)
        cls.phi = build_phi_family(2)

    def test_rows(self):
        report = riesz_tail_bound_check(self.grad, self.dec, self.space, self.phi, j_max=4,
                                        probes=[0])
        self.assertEqual([row['j'] for row in report.rows], [1, 2, 3, 4])
        self.assertGreaterEqual(report.observed_constant, 0.0)
        self.assertGreaterEqual(report.details['annulus_sum'], report.rows[0]['term'])

    def test_arguments(self):
        with self.assertRaises(ValidationError):
            riesz_tail_bound_check(self.grad, self.dec, self.space, self.phi, r=0.0)
        with self.assertRaises(ValidationError):
            riesz_tail_bound_check(self.grad, self.dec, self.space, self.phi, j_max=2)


class TestRieszUniformity(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.levels = []
        for n in (64, 128, 256, 512):
            space = cycle(n)
            cls.levels.append((gradient_operator(space), spectral_decompose(laplacian(space))))
        cls.report = riesz_uniformity_check(cls.levels)

    def test_cycles_are_uniform(self):
        self.assertTrue(self.report.passed)
        self.assertEqual([row['n'] for row in self.report.rows], [64, 128, 256, 512])
        self.assertLessEqual(self.report.details['lp_spread'], 0.25)
        self.assertLessEqual(self.report.details['weak11_spread'], 0.25)
        self.assertEqual(self.report.threshold, 0.25)

    def test_lp_estimate_above_two_norm(self):
        for row in self.report.rows:
            self.assertGreater(row['lp_norm'], 1.0)
            self.assertGreater(row['weak11'], 0.0)

    def test_zero_limit_fails(self):
        report = riesz_uniformity_check(self.levels[:2], limit=0.0)
        self.assertFalse(report.passed)
        self.assertGreater(report.details['lp_spread'], 0.0)

    def test_arguments(self):
        with self.assertRaises(ValidationError):
            riesz_uniformity_check(self.levels[:1])
        with self.assertRaises(ValidationError):
            riesz_uniformity_check(self.levels[:2], limit=-1.0)


if __name__ == '__main__':
    unittest.main()
