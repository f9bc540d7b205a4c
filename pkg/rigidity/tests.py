import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings as hsettings, strategies as st

from core.exceptions import DegeneratePairError, ValidationFailure

from .services import (
    affine_from_slope_data,
    find_affine_symmetries,
    rigidity_identity_check,
    rigidity_sweep,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

slopes = st.floats(-3.0, 3.0)
factors = st.one_of(st.floats(-2.0, -0.5), st.floats(0.5, 2.0))
offsets = st.floats(-1.0, 1.0)


class AffineModelTests(SimpleTestCase):
    def test_unit_data_is_identity(self):
        auto = affine_from_slope_data(0.7, -1.3, 1.0, 1.0, 0.0, 0.0)
        self.assertLess(np.max(np.abs(auto.matrix - np.eye(2))), 1e-15)
        self.assertLess(np.max(np.abs(auto.translation)), 1e-15)

    @hsettings(max_examples=100, deadline=None, derandomize=True)
    @given(slopes, slopes, factors, factors, offsets, offsets)
    def test_matches_linear_solve(self, d, dp, a, ap, b, bp):
        if abs(d - dp) < 0.1:
            return
        auto = affine_from_slope_data(d, dp, a, ap, b, bp)
        pts = np.random.default_rng(1).uniform(-1.0, 1.0, (20, 2))
        K = np.array([[-d, 1.0], [-dp, 1.0]])
        for x, y in pts:
            rhs = np.array([a * (y - d * x) + b, ap * (y - dp * x) + bp])
            expected = np.linalg.solve(K, rhs)
            self.assertLess(np.max(np.abs(auto.evaluate((x, y)) - expected)), 1e-12)

    @hsettings(max_examples=100, deadline=None, derandomize=True)
    @given(slopes, slopes, factors, factors, offsets, offsets)
    def test_coefficient_identities_and_eigenstructure(self, d, dp, a, ap, b, bp):
        if abs(d - dp) < 0.1:
            return
        auto = affine_from_slope_data(d, dp, a, ap, b, bp)
        pts = np.random.default_rng(2).uniform(-1.0, 1.0, (100, 2))
        r1, r2 = auto.coefficient_residuals(pts)
        self.assertLess(max(r1, r2), 1e-12)
        self.assertLess(max(auto.eigen_residuals()), 1e-12)

    def test_composition_multiplies_matrices(self):
        f = affine_from_slope_data(0.4, -2.1, 1.5, 0.7, 0.2, -0.3)
        g = affine_from_slope_data(0.4, -2.1, -0.8, 1.9, 0.5, 0.1)
        fg = f.compose(g)
        self.assertLess(np.max(np.abs(fg.matrix - f.matrix @ g.matrix)), 1e-12)
        p = np.array([0.3, -0.6])
        self.assertLess(np.max(np.abs(fg.evaluate(p) - f.evaluate(g.evaluate(p)))), 1e-12)

    def test_degenerate_pair(self):
        with self.assertRaises(DegeneratePairError):
            affine_from_slope_data(0.5, 0.5, 1.0, 1.0, 0.0, 0.0)

    def test_zero_factor_rejected(self):
        with self.assertRaises(ValidationFailure):
            affine_from_slope_data(0.5, -0.5, 0.0, 1.0, 0.0, 0.0)


class RigidityCheckTests(SimpleTestCase):
    def test_identity_verdict(self):
        verdict = rigidity_identity_check(affine_from_slope_data(GOLDEN, -1 / GOLDEN, 1.0, 1.0, 0.0, 0.0))
        self.assertTrue(verdict.is_identity)
        self.assertTrue(verdict.forced_unit_eigenvalues)
        self.assertTrue(verdict.descends_to_torus)

    def test_scaling_is_not_identity(self):
        auto = affine_from_slope_data(1.5, -0.5, 2.0, 2.0, 0.0, 0.0)
        self.assertLess(np.max(np.abs(auto.matrix - 2.0 * np.eye(2))), 1e-12)
        verdict = rigidity_identity_check(auto)
        self.assertFalse(verdict.is_identity)
        self.assertFalse(verdict.descends_to_torus)

    def test_translation_blocks_identity(self):
        verdict = rigidity_identity_check(affine_from_slope_data(1.5, -0.5, 1.0, 1.0, 0.1, 0.0))
        self.assertTrue(verdict.m_is_identity)
        self.assertFalse(verdict.is_identity)

    def test_sweep_hits_only_unit_pair(self):
        grid = np.linspace(0.5, 2.0, 7)
        sweep = rigidity_sweep(0.37, -1.9, grid, grid)
        self.assertEqual(sweep["identity_at"], [[1.0, 1.0]])
        self.assertEqual(sweep["points"], 49)


class SymmetrySearchTests(SimpleTestCase):
    def test_golden_pair_has_cat_map(self):
        found = [m.as_list() for m in find_affine_symmetries(GOLDEN, -(math.sqrt(5.0) + 1.0) / 2.0, 3)]
        self.assertIn([[2, 1], [1, 1]], found)
        self.assertIn([[1, 0], [0, 1]], found)
        self.assertIn([[-1, 0], [0, -1]], found)

    def test_generic_pair_only_plus_minus_identity(self):
        found = sorted(m.as_list() for m in find_affine_symmetries(0.37110593, -1.87412345, 5))
        self.assertEqual(found, [[[-1, 0], [0, -1]], [[1, 0], [0, 1]]])

    def test_bound_validated(self):
        with self.assertRaises(ValidationFailure):
            find_affine_symmetries(0.3, -1.2, 13)
        with self.assertRaises(DegeneratePairError):
            find_affine_symmetries(0.3, 0.3, 3)
