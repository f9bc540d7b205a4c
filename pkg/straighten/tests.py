import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings as hsettings, strategies as st

from circle.lifts import Arnold, Rotation
from circle.services import rotation_number_enclosure
from core.exceptions import (
    CoverageError,
    NonMinimalError,
    NotHandledError,
    TransversalityError,
    ValidationFailure,
)
from foliation.foliations import BiFoliation, Linear, Pushforward, SuspensionH, SuspensionV
from foliation.geometry import HalfLine
from foliation.grid import identity_map, shear_map, slide_map
from foliation.services import grid_invert

from .params import StraighteningParams
from .services import (
    check_minimal,
    compare_grid_maps,
    leaf_straightness,
    oblique_projection,
    refinement_study,
    simultaneous_straighten,
    straighten_pipeline,
    straighten_suspension_beta,
    verify_conjugacy,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
D_ALPHA = HalfLine(1.0, math.sqrt(2.0) - 1.0)
D_BETA = HalfLine(1.0, -(math.sqrt(3.0) - 1.0))

points = st.tuples(st.floats(-20.0, 20.0), st.floats(-20.0, 20.0))


def small_params(**overrides):
    base = dict(resolution=32, budget=50.0, epsilon=0.05, verify_samples=8)
    base.update(overrides)
    return StraighteningParams(**base)


def slide_pair(N=256):
    psi = slide_map(N, D_BETA, 0.08)
    return psi, BiFoliation(Pushforward(Linear(D_ALPHA), psi), Linear(D_BETA))


def sheared_pair(N=256):
    psi = shear_map(N, 0.08)
    return psi, BiFoliation(Pushforward(Linear(D_ALPHA), psi), Pushforward(Linear(D_BETA), psi))


class ObliqueProjectionTests(SimpleTestCase):
    def test_vertical_projection(self):
        out = oblique_projection((0.0, 0.0), HalfLine(1.0, 0.0), HalfLine(0.0, 1.0), (0.3, 1.7))
        self.assertLess(np.max(np.abs(out - [0.3, 0.0])), 1e-15)

    def test_point_on_line_is_fixed(self):
        x = np.array([0.2, 0.1]) + 3.5 * D_ALPHA.vector
        out = oblique_projection((0.2, 0.1), D_ALPHA, D_BETA, x)
        self.assertLess(np.max(np.abs(out - x)), 1e-13)

    @hsettings(max_examples=30, deadline=None, derandomize=True)
    @given(points)
    def test_matches_linear_solve(self, x):
        p = np.array([0.1, -0.3])
        out = oblique_projection(p, D_ALPHA, D_BETA, x)
        # p + a·dα0 = x + b·dβ
        a, _ = np.linalg.solve(np.column_stack([D_ALPHA.vector, -D_BETA.vector]), np.asarray(x) - p)
        self.assertLess(np.max(np.abs(out - (p + a * D_ALPHA.vector))), 1e-13)

    @hsettings(max_examples=30, deadline=None, derandomize=True)
    @given(points)
    def test_idempotent_and_moves_along_beta(self, x):
        once = oblique_projection((0.0, 0.0), D_ALPHA, D_BETA, x)
        twice = oblique_projection((0.0, 0.0), D_ALPHA, D_BETA, once)
        self.assertLess(np.max(np.abs(once - twice)), 1e-12)
        shift = once - np.asarray(x)
        self.assertLess(abs(shift[0] * D_BETA.s - shift[1] * D_BETA.c), 1e-12)

    def test_parallel_directions_rejected(self):
        with self.assertRaises(TransversalityError):
            oblique_projection((0.0, 0.0), D_ALPHA, D_ALPHA.reversed(), (1.0, 1.0))


class ParamsTests(SimpleTestCase):
    def test_defaults_from_settings(self):
        params = StraighteningParams()
        self.assertEqual(params.resolution, 256)
        self.assertEqual(params.budget, 2000.0)
        self.assertAlmostEqual(params.trace_step, 1.0 / 1024, delta=1e-18)
        self.assertTrue(params.coverage_guard_ok())

    def test_coverage_guard(self):
        self.assertFalse(small_params(epsilon=1e-3, budget=1000.0).coverage_guard_ok())

    def test_invalid_orientations(self):
        with self.assertRaises(ValidationFailure):
            small_params(leaf_orientations=(1, 2))

    def test_refined_doubles(self):
        fine = small_params().refined()
        self.assertEqual((fine.resolution, fine.budget), (64, 100.0))
        self.assertTrue(fine.coverage_guard_ok())


class SimultaneousStraightenTests(SimpleTestCase):
    def test_linear_pair_gives_identity(self):
        result = simultaneous_straighten(BiFoliation(Linear(D_ALPHA), Linear(D_BETA)), small_params())
        self.assertLess(result.phi.max_displacement(), 1e-10)
        self.assertLess(result.targets[0].angle_to(D_ALPHA), 1e-12)
        self.assertTrue(result.induced_h1_identity)

    def test_requires_linear_beta(self):
        with self.assertRaises(ValidationFailure):
            simultaneous_straighten(BiFoliation(Linear(D_ALPHA), SuspensionV(Rotation(GOLDEN))), small_params())

    def test_parallel_pair_rejected(self):
        with self.assertRaises(TransversalityError):
            simultaneous_straighten(BiFoliation(Linear(D_ALPHA), Linear(D_ALPHA)), small_params())

    def test_short_budget_refused(self):
        with self.assertRaises(CoverageError):
            simultaneous_straighten(
                BiFoliation(Linear(D_ALPHA), Linear(D_BETA)), small_params(budget=20.0, epsilon=1e-4)
            )

    def test_recovers_inverse_slide(self):
        psi, pair = slide_pair()
        result = simultaneous_straighten(pair, StraighteningParams(resolution=256, budget=2000.0))
        self.assertLessEqual(compare_grid_maps(result.phi, grid_invert(psi)), 5e-3)
        self.assertLessEqual(result.basepoint_residual, 1e-9)
        self.assertTrue(result.induced_h1_identity)

    def test_orientations_agree(self):
        _, pair = slide_pair()
        fwd = simultaneous_straighten(pair, StraighteningParams(resolution=128, budget=1000.0, leaf_orientations=(1,)))
        back = simultaneous_straighten(pair, StraighteningParams(resolution=128, budget=1000.0, leaf_orientations=(-1,)))
        self.assertLessEqual(compare_grid_maps(fwd.phi, back.phi), 1e-2)


class BetaStraighteningTests(SimpleTestCase):
    def test_rotation_suspension_is_nearly_identity(self):
        phi = straighten_suspension_beta(SuspensionV(Rotation(GOLDEN)), small_params(resolution=64))
        self.assertLess(phi.max_displacement(), 2e-3)

    def test_arnold_suspension_leaves_become_straight(self):
        beta = SuspensionV(Arnold(0.3, 0.8))
        phi = straighten_suspension_beta(beta, StraighteningParams(resolution=256))
        rho = rotation_number_enclosure(Arnold(0.3, 0.8), 10**5).lifted_center
        seeds = np.random.default_rng(0).random((16, 2))
        report = leaf_straightness(phi, beta, HalfLine(rho, 1.0), seeds)
        self.assertLessEqual(report["max_perpendicular"], 5e-3)
        self.assertLessEqual(report["max_angle"], 1e-2)
        self.assertEqual(phi.matrix.tolist(), [[1, 0], [0, 1]])

    def test_nearly_horizontal_leaves_not_handled(self):
        with self.assertRaises(NotHandledError):
            straighten_suspension_beta(Linear(HalfLine(1.0, 0.01)), small_params())

    def test_rational_return_map_rejected(self):
        with self.assertRaises(NonMinimalError):
            straighten_suspension_beta(SuspensionV(Rotation(0.25)), small_params())


class MinimalityCheckTests(SimpleTestCase):
    def test_irrational_suspension_passes(self):
        diag = check_minimal(SuspensionH(Rotation(GOLDEN)), small_params())
        self.assertEqual(diag["section"], "x")
        self.assertLessEqual(diag["gap"], 1e-3)

    def test_closed_vertical_leaves_fail_on_horizontal_section(self):
        with self.assertRaises(NonMinimalError) as ctx:
            check_minimal(Linear(HalfLine(0.0, 1.0)), small_params())
        self.assertEqual(ctx.exception.context["section"], "y")
        self.assertAlmostEqual(ctx.exception.context["gap"], 1.0, delta=1e-12)


class PipelineTests(SimpleTestCase):
    def test_linear_pair_identity(self):
        result = straighten_pipeline(BiFoliation(Linear(D_ALPHA), Linear(D_BETA)), small_params())
        self.assertLess(result.phi.max_displacement(), 1e-9)
        self.assertTrue(result.verification["passed"])
        self.assertLess(result.verification["alpha"]["max_perpendicular"], 1e-12)

    def test_stage_tag_on_failure(self):
        pair = BiFoliation(Linear(D_ALPHA), SuspensionV(Rotation(0.25)))
        with self.assertRaises(NonMinimalError) as ctx:
            straighten_pipeline(pair, small_params())
        self.assertEqual(ctx.exception.stage, "beta")
        self.assertTrue(str(ctx.exception).startswith("[beta]"))

    def test_rational_linear_alpha_rejected(self):
        pair = BiFoliation(Linear(HalfLine(1.0, 0.5)), Linear(D_BETA))
        with self.assertRaises(NonMinimalError) as ctx:
            straighten_pipeline(pair, small_params())
        self.assertEqual(ctx.exception.stage, "alpha")
        self.assertAlmostEqual(ctx.exception.context["gap"], 0.5, delta=1e-12)

    def test_rational_linear_beta_rejected(self):
        pair = BiFoliation(Linear(D_ALPHA), Linear(HalfLine(1.0, -0.25)))
        with self.assertRaises(NonMinimalError) as ctx:
            straighten_pipeline(pair, small_params())
        self.assertEqual(ctx.exception.stage, "beta")

    def test_minimality_recorded_in_stages(self):
        result = straighten_pipeline(BiFoliation(Linear(D_ALPHA), Linear(D_BETA)), small_params())
        minimality = result.stages["minimality"]
        self.assertEqual(minimality["alpha"]["section"], "x")
        self.assertLessEqual(minimality["beta"]["gap"], 1e-3)

    def test_sheared_pair_reproduces_inverse_shear(self):
        psi, pair = sheared_pair()
        result = straighten_pipeline(pair, StraighteningParams(resolution=256, budget=2000.0))
        self.assertLessEqual(compare_grid_maps(result.phi, grid_invert(psi)), 5e-3)
        self.assertTrue(result.verification["passed"])
        self.assertLessEqual(result.basepoint_residual, 1e-9)

    def test_suspension_alpha_with_pushed_beta(self):
        psi = shear_map(256, 0.08)
        beta = Pushforward(Linear(HalfLine(math.sqrt(2.0) - 1.0, 1.0)), psi)
        pair = BiFoliation(SuspensionH(Arnold(0.3, 0.8)), beta)
        result = straighten_pipeline(pair, StraighteningParams(resolution=256, budget=2000.0))
        v = result.verification
        for key in ("alpha", "beta"):
            self.assertLessEqual(v[key]["max_perpendicular"], 1e-2)
            self.assertLessEqual(v[key]["max_angle"], 1e-2)

    def test_refinement_does_not_worsen(self):
        _, pair = slide_pair()
        study = refinement_study(pair, StraighteningParams(resolution=128, budget=1000.0, epsilon=4e-3), levels=2)
        self.assertTrue(study["non_increasing"])
        self.assertEqual([row["resolution"] for row in study["levels"]], [128, 256])


class VerificationTests(SimpleTestCase):
    def test_identity_on_linear_pair(self):
        pair = BiFoliation(Linear(D_ALPHA), Linear(D_BETA))
        report = verify_conjugacy(identity_map(16), pair, (D_ALPHA, D_BETA), 8)
        self.assertTrue(report["passed"])
        self.assertLess(report["beta"]["max_angle"], 1e-12)

    def test_identity_on_sheared_pair_fails(self):
        _, pair = sheared_pair(64)
        report = verify_conjugacy(identity_map(64), pair, (D_ALPHA, D_BETA), 32)
        self.assertFalse(report["passed"])
        self.assertGreaterEqual(max(report["alpha"]["max_angle"], report["beta"]["max_angle"]), 1e-2)
