#!/usr/bin/env python3

import math
import os
import tempfile
import unittest

import numpy as np

from heatwave.bundle_op import apply_function, laplacian, spectral_decompose
from heatwave.errors import FamilyError, ValidationError
from heatwave.multiplier import (SampledEvenFunction, apply_band_limited, build_gl2_family,
                                 build_phi_family, build_riesz_tail_family, ft_support_violation,
                                 gaussian, inverse_transform_even, mollifier, phi_derivatives, psi,
                                 riesz_tail_profile, sample_even, smooth_step, transform_at,
                                 transform_even, triangle, triangle_pair, verify_osz_decay,
                                 verify_pom_estimate)
from heatwave.space import cycle


class TestTransforms(unittest.TestCase):

    def test_triangle_transform(self):
        tri = sample_even(triangle(1.0), 1 / 256, 2.0, 'triangle')
        lam = np.linspace(0, 8, 33)
        np.testing.assert_allclose(transform_at(tri, lam),
                                   2 * math.pi * triangle_pair(1.0)(lam),
                                   atol=1e-5)

    def test_dual_grid(self):
        tri = sample_even(triangle(1.0), 1 / 256, 2.0, 'triangle')
        out = transform_even(tri)
        self.assertAlmostEqual(out.step, math.pi / 2)
        np.testing.assert_allclose(out.values, 2 * math.pi * triangle_pair(1.0)(out.grid), atol=1e-5)

    def test_gaussian_transform(self):
        base = sample_even(gaussian, 1 / 16, 20.0, 'gaussian')
        lam = np.linspace(0, 3, 13)
        np.testing.assert_allclose(transform_at(base, lam), np.exp(-lam**2), atol=1e-12)

    def test_inverse(self):
        base = sample_even(gaussian, 1 / 16, 20.0, 'gaussian')
        again = inverse_transform_even(transform_even(base))
        self.assertAlmostEqual(again.step, base.step)
        np.testing.assert_allclose(again.values, base.values, atol=1e-13)

    def test_window_too_small(self):
        base = sample_even(gaussian, 1 / 16, 2.0, 'gaussian')
        with self.assertRaises(FamilyError) as ctx:
            transform_even(base)
        self.assertIn('try T = 4', str(ctx.exception))

    def test_needs_two_samples(self):
        with self.assertRaises(ValidationError):
            transform_even(SampledEvenFunction(1.0, np.array([1.0])))

    def test_norms(self):
        ones = SampledEvenFunction(0.5, np.ones(5))
        self.assertAlmostEqual(ones.half_width, 2.0)
        self.assertAlmostEqual(ones.l1_norm(), 4.0)
        self.assertAlmostEqual(ones.l2_norm_squared(), 4.0)
        self.assertEqual(ones.full_values().size, 9)

    def test_csv(self):
        func = SampledEvenFunction(0.5, np.array([1.0, 0.5, 0.0]), name='ramp')
        with tempfile.TemporaryDirectory() as tmp:
            filename = os.path.join(tmp, 'ramp.csv')
            func.to_csv(filename)
            with open(filename, 'r', encoding='utf-8') as in_file:
                lines = in_file.read().splitlines()
        self.assertEqual(lines[0], 'x,value')
        self.assertEqual(len(lines), 4)


class TestCutoffs(unittest.TestCase):

    def test_smooth_step(self):
        values = smooth_step(np.array([-1.0, 0.0, 0.5, 1.0, 2.0]))
        np.testing.assert_allclose(values, [0.0, 0.0, 0.5, 1.0, 1.0], atol=1e-12)
        ramp = smooth_step(np.linspace(0, 1, 101))
        self.assertTrue(np.all(np.diff(ramp) >= 0))

    def test_psi(self):
        np.testing.assert_allclose(psi(np.array([-2.0, -1.0, -0.5, 0.0])), [0, 0, 1, 1],
                                   atol=1e-12)

    def test_mollifier(self):
        np.testing.assert_allclose(mollifier(np.array([0.0, 0.25, -0.25, 0.5, 0.75])),
                                   [1, 1, 1, 0, 0],
                                   atol=1e-12)


class TestBandLimited(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.space = cycle(64)
        cls.dec = spectral_decompose(laplacian(cls.space))

    def test_matches_spectral_calculus(self):
        f_hat = sample_even(triangle(8.0), 1 / 64, 10.0, 'triangle', support=8.0)
        result = apply_band_limited(self.dec, f_hat, self.space)
        pair = triangle_pair(8.0)
        expected = apply_function(self.dec, lambda lam: pair(np.sqrt(lam)))
        np.testing.assert_allclose(result.matrix, expected, atol=1e-5)
        self.assertEqual(result.nodes, 513)
        self.assertGreater(result.wave_radius, 0.0)

    def test_needs_declared_support(self):
        f_hat = sample_even(triangle(8.0), 1 / 64, 10.0, 'triangle')
        with self.assertRaises(ValidationError):
            apply_band_limited(self.dec, f_hat)

    def test_nyquist(self):
        f_hat = sample_even(triangle(8.0), 2.0, 10.0, 'triangle', support=8.0)
        with self.assertRaises(ValidationError):
            apply_band_limited(self.dec, f_hat)


    def test_support_violation(self):
        f_hat = sample_even(gaussian, 1 / 64, 4.0, 'gaussian', support=1.0)
        self.assertGreater(ft_support_violation(f_hat, 1.0), 0.1)
        with self.assertRaises(ValidationError):
            apply_band_limited(self.dec, f_hat)


class TestGl2Family(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.family = build_gl2_family(4.0)

    def test_split(self):
        family = self.family
        np.testing.assert_allclose(family.f_part.values + family.r_part.values,
                                   family.gaussian.values,
                                   atol=1e-15)
        grid = family.gaussian.grid
        self.assertTrue(np.all(family.f_part.values[grid <= 4 - 1 / 4] == 0))
        self.assertTrue(np.all(family.r_part.values[grid >= 4 - 1 / 8] == 0))
        self.assertAlmostEqual(family.r_support, 3.875)

    def test_transforms_add_up(self):
        lam = np.linspace(0, 2, 9)
        total = self.family.ft_at(lam) + transform_at(self.family.r_part, lam)
        np.testing.assert_allclose(total, np.exp(-lam**2), atol=1e-10)

    def test_needs_s_above_one(self):
        with self.assertRaises(ValidationError):
            build_gl2_family(1.0)

    def test_osz_decay(self):
        report = verify_osz_decay(2, (4.0, 8.0), 0.2)
        self.assertTrue(report.passed)
        self.assertLessEqual(report.details['spread'], 0.2)
        with self.assertRaises(ValidationError):
            verify_osz_decay(-1)


class TestPhiFamily(unittest.TestCase):

    def test_moments(self):
        phi = build_phi_family(2)
        self.assertAlmostEqual(float(phi(np.array(0.0))), 1.0, places=12)
        derivatives = phi_derivatives(phi, 2)
        self.assertAlmostEqual(derivatives[0], 0.0, places=6)
        self.assertAlmostEqual(derivatives[1], 0.0, places=4)
        self.assertEqual(phi.vanishing_order(), 4)

    def test_dilation(self):
        phi = build_phi_family(2)
        half = phi.dilated(2.0)
        x = np.array([0.25, 0.5])
        np.testing.assert_allclose(half(x), phi(2.0 * x))

    def test_transform_support(self):
        phi = build_phi_family(2)
        np.testing.assert_array_equal(phi.ft(np.array([1.5, 3.0])), [0.0, 0.0])

    def test_closed_form_transform(self):
        phi = build_phi_family(2)
        lam = np.linspace(0, 0.9, 10)
        np.testing.assert_allclose(transform_at(phi.sampled(), lam), phi.ft(lam), atol=1e-8)

    def test_order_zero(self):
        phi = build_phi_family(0)
        np.testing.assert_array_equal(phi.coefficients, [1.0])
        with self.assertRaises(ValidationError):
            build_phi_family(-1)


class TestRieszTail(unittest.TestCase):

    def test_split(self):
        family = build_riesz_tail_family(0.5, 1, 1)
        np.testing.assert_allclose(family.f_part.values + family.r_part.values,
                                   family.h_part.values,
                                   atol=1e-10)
        outside = family.r_hat.grid >= 1.0
        self.assertTrue(np.all(family.r_hat.values[outside] == 0))

    def test_profile_limit(self):
        phi = build_phi_family(2)
        self.assertEqual(riesz_tail_profile(phi, 0.5, np.array([0.0]))[0], 0.0)

    def test_tail_value(self):
        family = build_riesz_tail_family(0.5, 1, 1)
        lam = np.array([0.5, 2.0, 7.0])
        np.testing.assert_allclose(family.tail_value(lam),
                                   riesz_tail_profile(family.phi, 0.5, lam))

    def test_arguments(self):
        with self.assertRaises(FamilyError):
            build_riesz_tail_family(3.0, 1, 1, k_order=2)
        with self.assertRaises(ValidationError):
            build_riesz_tail_family(0.5, 0, 1)
        with self.assertRaises(ValidationError):
            build_riesz_tail_family(-0.5, 1, 1)

    def test_first_dyadic_ratio(self):
        report = verify_pom_estimate(j_values=(1, 2), ratio_limit=0.6)
        self.assertTrue(report.passed)
        self.assertLessEqual(report.observed_constant, 0.6)

    def test_scaled_sups_stay_bounded(self):
        report = verify_pom_estimate(j_values=(3, 6), ratio_limit=1.0)
        scaled = {row['j']: row['scaled_sup'] for row in report.rows}
        self.assertLessEqual(scaled[6], 4 * scaled[3])


if __name__ == '__main__':
    unittest.main()
