import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings as hsettings, strategies as st

from circle.lifts import Arnold, PiecewiseMonotone, Rotation
from circle.services import conjugate_lift, rotation_number_enclosure
from core.exceptions import InconclusiveCycleError, ValidationFailure
from foliation.foliations import Linear, Pushforward, SuspensionH
from foliation.geometry import HalfLine, Section
from foliation.grid import dehn_twist_map, shear_map
from foliation.services import grid_compose

from .cycles import CLOSING_BOUND, IntMatrix
from .services import (
    act_on_halfline,
    act_on_pair,
    asymptotic_cycle,
    continued_fraction,
    cycle_basepoint_spread,
    induced_h1,
    lemma_check,
    naturality_check,
    slope_expansion,
)

SILVER = math.sqrt(2.0) - 1.0
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
ARNOLD = Arnold(0.3, 0.8)

unimodular = st.sampled_from(
    [IntMatrix(1, 0, 0, 1), IntMatrix(1, 1, 0, 1), IntMatrix(2, 1, 1, 1), IntMatrix(0, -1, 1, 0), IntMatrix(1, 0, 0, -1)]
)


class AsymptoticCycleTests(SimpleTestCase):
    def test_linear_direction_exact(self):
        l = HalfLine(1.0, SILVER)
        est = asymptotic_cycle(Linear(l), (0.4, 0.1), 50.0)
        self.assertLess(est.direction.angle_to(l), 1e-12)
        norm = math.hypot(*est.displacement)
        self.assertAlmostEqual(est.bound, math.asin(CLOSING_BOUND / norm), delta=1e-15)
        self.assertIn("quarter", est.intermediate)

    def test_short_budget_inconclusive(self):
        with self.assertRaises(InconclusiveCycleError):
            asymptotic_cycle(Linear(HalfLine(1.0, 0.0)), (0.0, 0.0), 5.0)

    def test_bound_shrinks_with_length(self):
        F = Linear(HalfLine(1.0, SILVER))
        short = asymptotic_cycle(F, (0.0, 0.0), 20.0)
        long = asymptotic_cycle(F, (0.0, 0.0), 80.0)
        self.assertAlmostEqual(long.bound * 4.0, short.bound, delta=1e-3 * short.bound)

    def test_suspension_follows_rotation_number(self):
        tau = rotation_number_enclosure(ARNOLD, 10**5).lifted_center
        est = asymptotic_cycle(SuspensionH(ARNOLD), (0.0, 0.2), 200.0)
        self.assertLessEqual(est.direction.angle_to(HalfLine(1.0, tau)), est.bound + 1e-4)

    def test_basepoints_agree(self):
        spread = cycle_basepoint_spread(SuspensionH(ARNOLD), [(0.0, 0.0), (0.3, 0.7), (0.8, 0.45)], 100.0, threads=2)
        self.assertTrue(spread["all_agree"])
        self.assertEqual(len(spread["estimates"]), 3)

    def test_long_linear_budget_meets_bound(self):
        l = HalfLine(1.0, SILVER)
        est = asymptotic_cycle(Linear(l), (0.0, 0.0), 1000.0)
        self.assertLessEqual(est.bound, 1e-3)
        self.assertLessEqual(est.direction.angle_to(l), est.bound)

    def test_random_basepoints_agree(self):
        points = np.random.default_rng(0).random((5, 2))
        spread = cycle_basepoint_spread(SuspensionH(ARNOLD), points, 300.0)
        self.assertTrue(spread["all_agree"])
        self.assertEqual(len(spread["estimates"]), 5)
        bounds = [e["bound"] for e in spread["estimates"]]
        self.assertLessEqual(spread["max_pairwise_angle"], 2 * max(bounds))


class HomologyActionTests(SimpleTestCase):
    def test_periodic_map_acts_trivially(self):
        self.assertTrue(induced_h1(shear_map(16, 0.08)).is_identity())

    def test_dehn_twist_matrix(self):
        self.assertEqual(induced_h1(dehn_twist_map(16)).as_list(), [[1, 1], [0, 1]])

    def test_composition_multiplies(self):
        f = dehn_twist_map(16)
        self.assertEqual(induced_h1(grid_compose(f, f)).as_list(), [[1, 2], [0, 1]])

    def test_twist_on_vertical(self):
        out = act_on_halfline(IntMatrix(1, 1, 0, 1), HalfLine(0.0, 1.0))
        self.assertLess(out.angle_to(HalfLine(1.0, 1.0)), 1e-15)

    @hsettings(max_examples=30, deadline=None, derandomize=True)
    @given(unimodular, st.floats(0.0, 2 * math.pi))
    def test_action_then_inverse(self, A, psi):
        l = HalfLine.from_angle(psi)
        back = act_on_halfline(A.inverse(), act_on_halfline(A, l))
        self.assertLess(back.angle_to(l), 1e-12)

    def test_pair_action_is_diagonal(self):
        A = IntMatrix(2, 1, 1, 1)
        pair = (HalfLine(1.0, SILVER), HalfLine(1.0, -1.0))
        out = act_on_pair(A, pair)
        self.assertLess(out[1].angle_to(act_on_halfline(A, pair[1])), 1e-15)

    def test_non_unimodular_rejected(self):
        with self.assertRaises(ValidationFailure):
            IntMatrix(2, 0, 0, 1)

    def test_twist_changes_cycle(self):
        report = naturality_check(Linear(HalfLine(0.0, 1.0)), dehn_twist_map(64), (0.1, 0.0), 100.0)
        self.assertTrue(report["agrees"])
        pushed = HalfLine(report["pushed"]["direction"]["c"], report["pushed"]["direction"]["s"])
        self.assertLess(pushed.angle_to(HalfLine(1.0, 1.0)), report["pushed"]["bound"])
        self.assertGreater(pushed.angle_to(HalfLine(0.0, 1.0)), 0.5)


class ContinuedFractionTests(SimpleTestCase):
    def test_golden(self):
        cf = continued_fraction(GOLDEN, 10)
        self.assertEqual(cf.coefficients, (1,) * 10)
        self.assertFalse(cf.terminating)

    def test_silver(self):
        self.assertEqual(continued_fraction(SILVER, 8).coefficients, (2,) * 8)

    def test_rational_terminates(self):
        cf = continued_fraction(1.0 / 3.0, 10)
        self.assertEqual(cf.coefficients, (3,))
        self.assertTrue(cf.terminating)

    def test_depth_validated(self):
        with self.assertRaises(ValidationFailure):
            continued_fraction(0.5, 0)

    def test_slope_expansion(self):
        self.assertEqual(slope_expansion(HalfLine(1.0, SILVER), 4).coefficients, (2, 2, 2, 2))
        self.assertTrue(slope_expansion(HalfLine(0.0, 1.0)).terminating)


class SectionLemmaTests(SimpleTestCase):
    def test_rotation_tuned_to_arnold(self):
        enc = rotation_number_enclosure(ARNOLD, 10**6)
        tuned = Rotation(enc.lifted_center)
        self.assertLessEqual(abs(rotation_number_enclosure(tuned, 10**6).lifted_center - enc.lifted_center), 1e-6)
        a = asymptotic_cycle(SuspensionH(ARNOLD), (0.0, 0.0), 1000.0)
        b = asymptotic_cycle(SuspensionH(tuned), (0.0, 0.0), 1000.0)
        self.assertTrue(a.agrees_with(b))
        self.assertLessEqual(a.bound + b.bound, 2e-3)
        check = lemma_check(SuspensionH(ARNOLD), SuspensionH(tuned), Section("x", 0.0), 1000, 200.0, samples=128)
        self.assertTrue(check.rotation_overlap)
        self.assertTrue(check.cycles_agree)

    def test_conjugate_suspensions_agree(self):
        xs = np.linspace(0.0, 1.0, 17)[:-1]
        g = PiecewiseMonotone(tuple(xs), tuple(xs + 0.05 * np.sin(2 * np.pi * xs) + 0.02))
        check = lemma_check(
            SuspensionH(ARNOLD), SuspensionH(conjugate_lift(ARNOLD, g)), Section("x", 0.0), 200, 100.0, samples=128
        )
        self.assertTrue(check.rotation_overlap)
        self.assertTrue(check.cycles_agree)
        self.assertTrue(check.consistent)

    def test_different_rotations_differ(self):
        check = lemma_check(
            SuspensionH(Rotation(0.2)), SuspensionH(Rotation(0.3)), Section("x", 0.0), 200, 100.0, samples=32
        )
        self.assertFalse(check.rotation_overlap)
        self.assertFalse(check.cycles_agree)
        self.assertTrue(check.consistent)
