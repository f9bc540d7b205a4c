import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings as hsettings, strategies as st

from core.exceptions import NonMinimalError, NonMonotoneLiftError, ValidationFailure

from .lifts import Arnold, Composition, Inverse, PiecewiseMonotone, Rotation
from .services import (
    circle_lift_from_spec,
    conjugacy_residual,
    conjugacy_to_rotation,
    conjugate_lift,
    iterate_lift,
    minimality_density,
    rotation_number_enclosure,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# współdzielone między testami, liczone raz
_ARNOLD_RHO = {}


def arnold_reference_rho():
    if "rho" not in _ARNOLD_RHO:
        enc = rotation_number_enclosure(Arnold(0.3, 0.8), 10**6)
        _ARNOLD_RHO["rho"] = enc.center
        _ARNOLD_RHO["enclosure"] = enc
    return _ARNOLD_RHO["rho"]


def sample_conjugator():
    xs = np.linspace(0.0, 1.0, 17)[:-1]
    ys = xs + 0.05 * np.sin(2 * np.pi * xs) + 0.02
    return PiecewiseMonotone(tuple(xs), tuple(ys))


lifts = st.one_of(
    st.builds(Rotation, st.floats(0.0, 0.999)),
    st.builds(Arnold, st.floats(0.0, 0.999), st.floats(-0.95, 0.95)),
)


class LiftFamiliesTests(SimpleTestCase):
    @hsettings(max_examples=40, deadline=None, derandomize=True)
    @given(lifts, st.floats(-50.0, 50.0))
    def test_degree_one(self, F, x):
        self.assertAlmostEqual(F(x + 1.0), F(x) + 1.0, delta=1e-12)

    @hsettings(max_examples=40, deadline=None, derandomize=True)
    @given(lifts, st.floats(-5.0, 5.0), st.floats(1e-6, 0.999))
    def test_strictly_monotone(self, F, x, gap):
        self.assertLess(F(x), F(x + gap))

    def test_arnold_formula(self):
        F = Arnold(0.3, 0.8)
        x = 0.137
        self.assertAlmostEqual(F(x), x + 0.3 + 0.8 / (2 * math.pi) * math.sin(2 * math.pi * x), delta=1e-15)

    def test_arnold_rejects_large_K(self):
        with self.assertRaises(ValidationFailure):
            Arnold(0.3, 1.0)

    def test_samples_reject_non_monotone(self):
        with self.assertRaises(NonMonotoneLiftError):
            PiecewiseMonotone((0.0, 0.5), (0.2, 0.1))
        with self.assertRaises(NonMonotoneLiftError):
            PiecewiseMonotone((0.0, 0.5), (0.0, 1.2))

    def test_samples_interpolate_and_extend(self):
        F = PiecewiseMonotone((0.0, 0.5), (0.1, 0.4))
        self.assertAlmostEqual(F(0.25), 0.25, delta=1e-15)
        self.assertAlmostEqual(F(0.75), 0.75, delta=1e-15)
        self.assertAlmostEqual(F(2.25), 2.25, delta=1e-12)
        self.assertAlmostEqual(F.value(0.25), F(0.25), delta=1e-15)

    def test_composition_and_inverse_stay_monotone(self):
        G = Composition((Arnold(0.1, 0.5), sample_conjugator(), Inverse(Arnold(0.7, 0.3))))
        xs = np.linspace(-2.0, 2.0, 4001)
        self.assertTrue(np.all(np.diff(G(xs)) > 0))

    def test_factory(self):
        F = circle_lift_from_spec({"family": "arnold", "theta": 0.3, "K": 0.8, "shift": 2})
        self.assertEqual(F, Arnold(0.3, 0.8, shift=2))
        registry = {"a": F}
        inv = circle_lift_from_spec({"family": "inverse", "base": "a"}, registry.__getitem__)
        self.assertAlmostEqual(inv(F(0.3)), 0.3, delta=1e-12)


class IterateLiftTests(SimpleTestCase):
    def test_rotation_quarter(self):
        self.assertEqual(iterate_lift(Rotation(0.25), 4, 0.0), 1.0)

    def test_arnold_matches_direct_loop(self):
        x = 0.0
        for _ in range(10):
            x = x + 0.3 + 0.8 / (2 * math.pi) * math.sin(2 * math.pi * x)
        self.assertAlmostEqual(iterate_lift(Arnold(0.3, 0.8), 10, 0.0), x, delta=1e-12)

    @hsettings(max_examples=30, deadline=None, derandomize=True)
    @given(lifts, st.floats(-3.0, 3.0))
    def test_inverse_identity(self, F, x):
        self.assertAlmostEqual(iterate_lift(F, -1, iterate_lift(F, 1, x)), x, delta=1e-12)

    def test_inverse_of_samples(self):
        F = sample_conjugator()
        for x in (0.0, 0.3, 0.999, 4.2):
            self.assertAlmostEqual(iterate_lift(F, -3, iterate_lift(F, 3, x)), x, delta=1e-12)


class RotationEnclosureTests(SimpleTestCase):
    def test_quarter_rotation(self):
        enc = rotation_number_enclosure(Rotation(0.25), 100)
        self.assertAlmostEqual(enc.lo, 0.24, delta=1e-15)
        self.assertAlmostEqual(enc.hi, 0.26, delta=1e-15)
        self.assertTrue(enc.contains(0.25))

    def test_golden_rotation_soundness(self):
        enc = rotation_number_enclosure(Rotation(GOLDEN), 10**5)
        self.assertAlmostEqual(enc.width, 2e-5, delta=1e-15)
        self.assertTrue(enc.contains(GOLDEN))
        self.assertLessEqual(enc.lifted_lo, GOLDEN)
        self.assertLessEqual(GOLDEN, enc.lifted_hi)

    def test_lift_shift_law_is_exact(self):
        F = Arnold(0.3, 0.8)
        base = rotation_number_enclosure(F, 1000)
        for d in (-2, -1, 0, 1, 2):
            enc = rotation_number_enclosure(F.shifted(d), 1000)
            self.assertEqual(enc.lo, base.lo)
            self.assertEqual(enc.hi, base.hi)
            self.assertEqual(enc.offset, base.offset + d)

    def test_rejects_non_positive_n(self):
        with self.assertRaises(ValidationFailure):
            rotation_number_enclosure(Rotation(0.1), 0)

    def test_arnold_long_enclosure(self):
        rho = arnold_reference_rho()
        enc = _ARNOLD_RHO["enclosure"]
        self.assertAlmostEqual(enc.width, 2e-6, delta=1e-15)
        # nie jest zablokowane na wymiernej wartości
        self.assertTrue(0.27 < rho < 0.29)

    def test_nesting(self):
        F = Arnold(0.3, 0.8)
        coarse = rotation_number_enclosure(F, 50)
        for m in (100, 500, 5000):
            self.assertTrue(coarse.contains(rotation_number_enclosure(F, m).center))

    def test_conjugacy_invariance(self):
        F = Arnold(0.3, 0.8)
        G = conjugate_lift(F, sample_conjugator())
        for n in (10, 100, 1000):
            self.assertTrue(rotation_number_enclosure(G, n).overlaps(rotation_number_enclosure(F, n)))

    def test_basepoint_independence(self):
        F = Arnold(0.3, 0.8)
        n = 2000
        enc = rotation_number_enclosure(F, n)
        for x in (0.2, 0.55, 0.9):
            self.assertLessEqual(abs((iterate_lift(F, n, x) - x) / n - enc.lifted_center), 2.0 / n)


class ConjugacyTests(SimpleTestCase):
    def test_irrational_rotation_gives_near_identity(self):
        h, rho = conjugacy_to_rotation(Rotation(GOLDEN), 4 * 64 * 64, 64)
        self.assertAlmostEqual(rho, GOLDEN, delta=1e-4)
        self.assertLess(np.max(np.abs(h.values - h.knots)), 2e-3)

    def test_output_is_monotone_degree_one(self):
        h, _ = conjugacy_to_rotation(Arnold(0.3, 0.8), 4 * 128 * 128, 128)
        self.assertTrue(h.is_monotone())
        self.assertEqual(h.values[0], 0.0)
        self.assertEqual(h.values[-1], 1.0)
        self.assertTrue(h.is_degree_one())

    def test_arnold_residual_and_decrease(self):
        h6, rho6 = conjugacy_to_rotation(Arnold(0.3, 0.8), 10**6, 1024)
        self.assertLessEqual(h6.residual, 5e-3)
        self.assertAlmostEqual(rho6, arnold_reference_rho(), delta=2e-6)
        h7, _ = conjugacy_to_rotation(Arnold(0.3, 0.8), 10**7, 1024)
        self.assertLess(h7.residual, h6.residual)
        # sprzężenie z dłuższej orbity służy za wyrocznię dla krótszej
        self.assertLess(np.max(np.abs(h6.values - h7.values)), 5e-3)

    def test_interpolated_residual_is_small(self):
        F = Arnold(0.3, 0.8)
        h, rho = conjugacy_to_rotation(F, 4 * 256 * 256, 256)
        self.assertLess(conjugacy_residual(F, h, rho), 5e-3)

    def test_rational_rotation_is_rejected(self):
        with self.assertRaises(NonMinimalError):
            conjugacy_to_rotation(Rotation(0.5), 64, 8)

    def test_requires_long_orbit(self):
        with self.assertRaises(ValidationFailure):
            conjugacy_to_rotation(Rotation(GOLDEN), 100, 64)


class MinimalityTests(SimpleTestCase):
    def test_period_two(self):
        gap, ok = minimality_density(Rotation(0.5), 0.0, 10, 0.4)
        self.assertEqual(gap, 0.5)
        self.assertFalse(ok)

    def test_golden_rotation(self):
        gap, ok = minimality_density(Rotation(GOLDEN), 0.0, 10**4, 1e-3)
        self.assertTrue(ok)
        self.assertLess(gap, 1e-3)

    def test_arnold(self):
        _, ok = minimality_density(Arnold(0.3, 0.8), 0.0, 10**5, 1e-3)
        self.assertTrue(ok)
