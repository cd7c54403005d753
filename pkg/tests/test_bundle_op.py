#!/usr/bin/env python3

import math
import os
import tempfile
import unittest
from unittest import mock

import numpy as np
from scipy import linalg

from heatwave.bundle_op import (BundleOperator, apply_function, bundle_laplacian, chebyshev_apply,
                                check_dense_size, compose_bound_check, diagonal_operator,
                                extreme_eigenvalues, functional_calculus_check, hs_column_norms,
                                hs_row_norms, kernel_of, laplacian, load_operator, row_l2_norms,
                                save_operator, spectral_decompose, trace_identity_residual)
from heatwave.errors import OperatorError, ValidationError
from heatwave.space import build_space, cycle, path


def rotation(angle):
    return np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])


class TestBundleOperator(unittest.TestCase):

    def test_cycle_spectrum(self):
        dec = spectral_decompose(laplacian(cycle(8)))
        expected = np.sort(2 - 2 * np.cos(2 * np.pi * np.arange(8) / 8))
        np.testing.assert_allclose(dec.eigenvalues, expected, atol=1e-12)
        self.assertEqual(dec.null_dim, 1)
        self.assertAlmostEqual(dec.spectral_radius, 4.0)

    def test_weighted_measure_is_self_adjoint(self):
        space = build_space([(0, 1, 1.0), (1, 2, 2.0), (2, 0, 1.5)], [1.0, 3.0, 0.5])
        op = laplacian(space)
        dec = spectral_decompose(op)
        gram = dec.eigenvectors.conj().T @ (op.weights[:, None] * dec.eigenvectors)
        np.testing.assert_allclose(gram, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(apply_function(dec, lambda lam: lam), op.matrix, atol=1e-12)

    def test_heat_kernel_is_symmetric(self):
        space = build_space([(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], [1.0, 2.0, 3.0, 4.0])
        dec = spectral_decompose(laplacian(space))
        kernel = kernel_of(apply_function(dec, lambda lam: np.exp(-lam)), space)
        values = kernel.blocks[:, :, 0, 0]
        np.testing.assert_allclose(values, values.T, atol=1e-12)

    def test_not_self_adjoint(self):
        matrix = np.array([[1.0, -1.0], [0.0, 1.0]])
        with self.assertRaises(OperatorError):
            BundleOperator(path(2), matrix)

    def test_wrong_shape(self):
        with self.assertRaises(ValidationError):
            BundleOperator(path(3), np.eye(2))

    def test_not_positive(self):
        op = laplacian(cycle(6)).scaled(-1.0)
        with self.assertRaises(OperatorError):
            spectral_decompose(op)

    def test_dense_limit(self):
        op = laplacian(cycle(16))
        with mock.patch('heatwave.bundle_op.DENSE_LIMIT', 10):
            with self.assertRaises(OperatorError):
                check_dense_size(op)
            with self.assertRaises(OperatorError):
                spectral_decompose(op)

    def test_constant_function_is_identity(self):
        dec = spectral_decompose(laplacian(cycle(10)))
        np.testing.assert_allclose(apply_function(dec, lambda lam: 1.0), np.eye(10), atol=1e-12)

    def test_undefined_function_value(self):
        dec = spectral_decompose(laplacian(cycle(6)))
        with self.assertRaises(OperatorError):
            apply_function(dec, lambda lam: np.where(lam > 0, 1.0, np.nan))

    def test_diagonal_operator(self):
        space = path(4)
        dec = spectral_decompose(diagonal_operator(space, [0.0, 1.0, 2.0, 3.0]))
        result = apply_function(dec, lambda lam: np.exp(-lam))
        np.testing.assert_allclose(result, np.diag(np.exp(-np.arange(4.0))), atol=1e-14)


class TestFunctionalCalculus(unittest.TestCase):

    def test_matches_expm(self):
        op = laplacian(cycle(64))
        dec = spectral_decompose(op)
        spectral = apply_function(dec, lambda lam: np.exp(-lam))
        self.assertLessEqual(np.abs(spectral - linalg.expm(-op.matrix)).max(), 1e-10)

    def test_functional_calculus_check(self):
        report = functional_calculus_check(laplacian(cycle(64)))
        self.assertTrue(report.passed)
        self.assertEqual(report.check_name, 'functional_calculus')
        self.assertLessEqual(report.observed_constant, 1e-10)
        self.assertEqual([row['path'] for row in report.rows],
                         ['expm', 'chebyshev', 'trace_identity'])

    def test_chebyshev_matches_spectral(self):
        op = laplacian(cycle(64))
        dec = spectral_decompose(op)
        cheb = chebyshev_apply(op, lambda lam: np.exp(-lam), 30)
        spectral = apply_function(dec, lambda lam: np.exp(-lam))
        self.assertLessEqual(np.abs(cheb - spectral).max(), 1e-10)

    def test_chebyshev_is_local(self):
        op = laplacian(cycle(64))
        approx = chebyshev_apply(op, lambda lam: np.exp(-lam), 5)
        far = op.space.rho[0] > 5
        self.assertTrue(np.all(approx[0, far] == 0))
        self.assertTrue(np.any(approx[0, op.space.rho[0] == 5] != 0))

    def test_chebyshev_interval_excludes_spectrum(self):
        op = laplacian(cycle(8))
        with self.assertRaises(OperatorError):
            chebyshev_apply(op, lambda lam: np.exp(-lam), 10, spectral_interval=(0.0, 1.0))

    def test_chebyshev_negative_degree(self):
        with self.assertRaises(ValidationError):
            chebyshev_apply(laplacian(cycle(8)), np.exp, -1)

    def test_extreme_eigenvalues(self):
        low, high = extreme_eigenvalues(laplacian(cycle(8)))
        self.assertAlmostEqual(low, 0.0, places=12)
        self.assertAlmostEqual(high, 4.0, places=12)


class TestKernelNorms(unittest.TestCase):

    def setUp(self):
        self.space = build_space([(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)],
                                 [1.0, 2.0, 1.0, 0.5])
        self.dec = spectral_decompose(laplacian(self.space))

    def test_row_norms_agree(self):
        heat = apply_function(self.dec, lambda lam: np.exp(-0.5 * lam))
        kernel = kernel_of(heat, self.space)
        rows = hs_row_norms(heat, self.space)
        for x in range(self.space.n):
            self.assertAlmostEqual(rows[x], row_l2_norms(kernel, x), places=12)

    def test_column_norms_of_symmetric_kernel(self):
        heat = apply_function(self.dec, lambda lam: np.exp(-0.5 * lam))
        np.testing.assert_allclose(hs_column_norms(heat, self.space),
                                   hs_row_norms(heat, self.space),
                                   atol=1e-12)

    def test_calculus_is_multiplicative(self):
        wave = lambda lam: np.cos(np.sqrt(lam))
        heat = lambda lam: np.exp(-0.5 * lam)
        product = apply_function(self.dec, lambda lam: wave(lam) * heat(lam))
        composed = apply_function(self.dec, wave) @ apply_function(self.dec, heat)
        np.testing.assert_allclose(product, composed, atol=1e-12)

    def test_trace_identity(self):
        residual = trace_identity_residual(self.dec, lambda lam: np.cos(np.sqrt(lam)))
        self.assertLessEqual(residual, 1e-12)

    def test_compose_bound(self):
        report = compose_bound_check(lambda lam: np.cos(np.sqrt(lam)), lambda lam: np.exp(-lam),
                                     self.dec)
        self.assertTrue(report.passed)
        self.assertLessEqual(report.observed_constant, 1 + 1e-9)
        self.assertEqual(len(report.rows), self.space.n)

    def test_unknown_norm(self):
        kernel = kernel_of(np.eye(8), path(4), 2)
        with self.assertRaises(ValidationError):
            kernel.norms('nuclear')


class TestBundleLaplacian(unittest.TestCase):

    def test_trivial_transports_double_the_spectrum(self):
        space = cycle(6)
        op = bundle_laplacian(space, [np.eye(2)] * len(space.edges))
        scalar = spectral_decompose(laplacian(space)).eigenvalues
        np.testing.assert_allclose(spectral_decompose(op).eigenvalues,
                                   np.sort(np.repeat(scalar, 2)),
                                   atol=1e-12)

    def test_holonomy_removes_kernel(self):
        space = cycle(6)
        transports = [rotation(0.3)] + [np.eye(2)] * (len(space.edges) - 1)
        dec = spectral_decompose(bundle_laplacian(space, transports))
        self.assertEqual(dec.l, 2)
        self.assertEqual(dec.null_dim, 0)
        self.assertGreater(dec.eigenvalues[0], 0)

    def test_block_norms(self):
        space = cycle(6)
        transports = [rotation(0.1 * k) for k in range(len(space.edges))]
        dec = spectral_decompose(bundle_laplacian(space, transports))
        kernel = kernel_of(apply_function(dec, lambda lam: np.exp(-lam)), space, 2)
        self.assertEqual(kernel.block(0, 1).shape, (2, 2))
        self.assertTrue(np.all(kernel.norms('operator') <= kernel.norms('hilbert-schmidt') + 1e-14))

    def test_non_unitary_transport(self):
        space = cycle(4)
        with self.assertRaises(ValidationError):
            bundle_laplacian(space, [2 * np.eye(2)] * 4)
        with self.assertRaises(ValidationError):
            bundle_laplacian(space, [np.eye(2)] * 3)


class TestPersistence(unittest.TestCase):

    def test_save_and_load_complex(self):
        space = cycle(5)
        transports = [rotation(0.2) @ np.diag([1, 1j])] * len(space.edges)
        op = bundle_laplacian(space, transports)
        with tempfile.TemporaryDirectory() as tmp:
            filename = os.path.join(tmp, 'op.yaml')
            save_operator(op, filename)
            loaded = load_operator(filename)
        self.assertEqual(loaded.l, 2)
        np.testing.assert_allclose(loaded.matrix, op.matrix, atol=1e-15)

    def test_kernel_csv(self):
        space = path(3)
        kernel = kernel_of(np.eye(3), space)
        with tempfile.TemporaryDirectory() as tmp:
            filename = os.path.join(tmp, 'kernel.csv')
            kernel.to_csv(filename)
            with open(filename, 'r', encoding='utf-8') as in_file:
                lines = in_file.read().splitlines()
        self.assertEqual(lines[0], 'x,y,operator_norm,hs_norm')
        self.assertEqual(len(lines), 10)


if __name__ == '__main__':
    unittest.main()
