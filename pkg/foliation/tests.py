import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings as hsettings, strategies as st

from circle.lifts import Arnold
from circle.services import iterate_lift, rotation_number_enclosure
from core.exceptions import GridFileError, NonSectionError, NotInvertibleError, ValidationFailure
from core.utils import circular_distance

from .foliations import Linear, Pushforward, SuspensionH, SuspensionV
from .geometry import HalfLine, Section
from .grid import (
    GridHomeomorphism,
    dehn_twist_map,
    horizontal_shear_map,
    identity_map,
    shear_map,
    slide_map,
    translation_map,
)
from .gridio import decode_binary, decode_csv, encode_binary, encode_csv
from .services import (
    first_return,
    first_return_with_copy,
    grid_compose,
    grid_invert,
    leaves_keep_order,
    section_crossings,
    trace_leaf,
    trace_leaves,
    transversality_margin,
)

SILVER = math.sqrt(2.0) - 1.0
ARNOLD = Arnold(0.3, 0.8)


class HalfLineTests(SimpleTestCase):
    def test_normalized(self):
        h = HalfLine(3.0, 4.0)
        self.assertAlmostEqual(h.c, 0.6, delta=1e-15)
        self.assertAlmostEqual(h.s, 0.8, delta=1e-15)

    def test_zero_vector_rejected(self):
        with self.assertRaises(ValidationFailure):
            HalfLine(0.0, 0.0)

    def test_angle_to_opposite(self):
        h = HalfLine(1.0, SILVER)
        self.assertAlmostEqual(h.angle_to(h.reversed()), math.pi, delta=1e-12)
        self.assertAlmostEqual(h.angle_to(h), 0.0, delta=1e-12)


class LinearTraceTests(SimpleTestCase):
    @hsettings(max_examples=25, deadline=None, derandomize=True)
    @given(st.floats(0.0, 2 * math.pi), st.floats(0.5, 40.0))
    def test_displacement_follows_direction(self, psi, T):
        F = Linear(HalfLine.from_angle(psi))
        poly = trace_leaf(F, (0.3, -0.2), T)
        self.assertGreaterEqual(poly.length, T - 1e-9)
        d = poly.displacement / np.linalg.norm(poly.displacement)
        self.assertLess(np.max(np.abs(d - F.direction.vector)), 1e-12)

    def test_orientation_and_sign_reverse(self):
        F = Linear(HalfLine(1.0, SILVER), orientation=-1)
        fwd = trace_leaf(F, (0.0, 0.0), 3.0)
        back = trace_leaf(F, (0.0, 0.0), 3.0, sign=-1)
        self.assertLess(np.max(np.abs(fwd.displacement + back.displacement)), 1e-12)
        self.assertLess(fwd.displacement[0], 0.0)

    def test_batch_shapes(self):
        pts, arc = trace_leaves(Linear(HalfLine(0.0, 1.0)), np.zeros((5, 2)), 1.0)
        self.assertEqual(pts.shape[0], 5)
        self.assertEqual(pts.shape[:2], arc.shape)

    def test_arclength_is_additive(self):
        F = Linear(HalfLine(1.0, SILVER))
        first = trace_leaf(F, (0.2, 0.1), 2.5)
        second = trace_leaf(F, first.end, 4.0)
        total = np.linalg.norm(second.end - first.start)
        self.assertAlmostEqual(total, first.length + second.length, delta=1e-12)
        for G in (SuspensionH(ARNOLD), Pushforward(F, shear_map(32, 0.08))):
            poly = trace_leaf(G, (0.0, 0.3), 5.0)
            seg = np.linalg.norm(np.diff(poly.points, axis=0), axis=1)
            self.assertLess(np.max(np.abs(np.diff(poly.arclength) - seg)), 1e-12)
            self.assertEqual(poly.arclength[0], 0.0)

    def test_negative_length_rejected(self):
        with self.assertRaises(ValidationFailure):
            trace_leaf(Linear(HalfLine(1.0, 0.0)), (0.0, 0.0), -1.0)


class SuspensionTraceTests(SimpleTestCase):
    def test_integer_columns_follow_orbit(self):
        F = SuspensionH(ARNOLD)
        poly = trace_leaf(F, (0.0, 0.2), 6.0)
        for k in range(1, int(poly.end[0]) + 1):
            idx = np.flatnonzero(poly.points[:, 0] == float(k))
            self.assertEqual(idx.size, 1)
            self.assertAlmostEqual(poly.points[idx[0], 1], iterate_lift(ARNOLD, k, 0.2), delta=1e-10)

    def test_backward_trace_uses_inverse(self):
        F = SuspensionH(ARNOLD)
        poly = trace_leaf(F, (0.0, 0.2), 3.0, sign=-1)
        idx = np.flatnonzero(poly.points[:, 0] == -1.0)[0]
        self.assertAlmostEqual(ARNOLD(poly.points[idx, 1]), 0.2, delta=1e-12)

    def test_vertical_suspension_swaps_axes(self):
        F = SuspensionV(ARNOLD)
        poly = trace_leaf(F, (0.2, 0.0), 3.0)
        self.assertGreater(poly.end[1], 1.0)
        idx = np.flatnonzero(poly.points[:, 1] == 1.0)[0]
        self.assertAlmostEqual(poly.points[idx, 0], ARNOLD(0.2), delta=1e-12)

    def test_tangent_at_section(self):
        F = SuspensionH(ARNOLD)
        y = np.array([0.1, 0.6])
        t = F.tangent(np.stack([np.zeros(2), y], -1))
        expected = np.stack([np.ones(2), ARNOLD(y) - y], -1)
        expected /= np.linalg.norm(expected, axis=1, keepdims=True)
        self.assertLess(np.max(np.abs(t - expected)), 1e-12)

    def test_leaves_do_not_cross(self):
        self.assertTrue(leaves_keep_order(SuspensionH(ARNOLD), [0.1, 0.45, 0.8], Section("x", 0.0)))


class PushforwardTraceTests(SimpleTestCase):
    def test_leaf_is_image_of_base_leaf(self):
        psi = shear_map(64, 0.08)
        F = Pushforward(Linear(HalfLine(1.0, 0.0)), psi)
        poly = trace_leaf(F, (0.0, 0.0), 4.0)
        self.assertGreaterEqual(poly.length, 4.0 - 1e-9)
        self.assertLess(np.max(np.abs(psi.evaluate(poly.source) - poly.points)), 1e-12)
        self.assertLess(np.max(np.abs(poly.source[:, 1])), 1e-10)

    def test_transversality_survives_small_shear(self):
        vertical = Linear(HalfLine(0.0, 1.0))
        other = Linear(HalfLine(1.0, SILVER))
        base = transversality_margin(vertical, other)
        pushed = Pushforward(vertical, horizontal_shear_map(64, 0.1 / (2 * math.pi)))
        self.assertGreaterEqual(transversality_margin(pushed, other, grid=16), base - 0.25)

    def test_margin_of_axis_foliations(self):
        h, v = Linear(HalfLine(1.0, 0.0)), Linear(HalfLine(0.0, 1.0))
        self.assertAlmostEqual(transversality_margin(h, v), 1.0, delta=1e-15)
        self.assertAlmostEqual(transversality_margin(h, h), 0.0, delta=1e-15)


class FirstReturnTests(SimpleTestCase):
    def test_suspension_returns_generator(self):
        F = SuspensionH(ARNOLD)
        lift, copy = first_return_with_copy(F, Section("x", 0.0), samples=64)
        self.assertEqual(copy, 1)
        t = np.arange(64) / 64
        self.assertLess(np.max(np.abs(lift(t) - ARNOLD(t))), 1e-10)

    def test_reversed_suspension_returns_inverse(self):
        F = SuspensionH(ARNOLD, orientation=-1)
        lift, copy = first_return_with_copy(F, Section("x", 0.0), samples=32)
        self.assertEqual(copy, -1)
        t = np.arange(32) / 32
        self.assertLess(np.max(np.abs(ARNOLD(lift(t)) - t)), 1e-10)

    def test_linear_return_is_rotation(self):
        lift = first_return(Linear(HalfLine(1.0, SILVER)), Section("x", 0.0), samples=32)
        t = np.arange(32) / 32
        self.assertLess(np.max(np.abs(lift(t) - t - SILVER)), 1e-12)

    def test_parallel_leaves_are_not_a_section(self):
        with self.assertRaises(NonSectionError):
            first_return(Linear(HalfLine(1.0, 0.0)), Section("y", 0.0), samples=16)

    def test_crossings_report_copy_and_arclength(self):
        F = Linear(HalfLine(1.0, 1.0))
        res = section_crossings(F, [[0.25, 0.0]], Section("y", 0.0))
        self.assertTrue(res.found[0])
        self.assertEqual(res.copies[0], 1)
        self.assertAlmostEqual(res.arclength[0], math.sqrt(2.0), delta=1e-12)
        self.assertLess(np.max(np.abs(res.points[0] - [1.25, 1.0])), 1e-12)

    def test_dehn_twist_keeps_section_rotation(self):
        base = Linear(HalfLine(0.0, 1.0))
        twisted = Pushforward(base, dehn_twist_map(64))
        lift = first_return(twisted, Section("y", 0.0), samples=16)
        enc = rotation_number_enclosure(lift, 100)
        self.assertLess(float(circular_distance(enc.center)), 1e-6)


    def test_pushforward_keeps_rotation_number(self):
        F = Pushforward(SuspensionH(ARNOLD), shear_map(64, 0.03))
        lift = first_return(F, Section("x", 0.0), samples=128)
        self.assertTrue(rotation_number_enclosure(lift, 200).overlaps(rotation_number_enclosure(ARNOLD, 200)))


class GridMapTests(SimpleTestCase):
    def test_identity_evaluates_exactly(self):
        p = np.array([[0.3, -1.7], [2.5, 0.25]])
        self.assertTrue(np.array_equal(identity_map(8).evaluate(p), p))

    def test_folded_interpolant_rejected(self):
        u = np.zeros((4, 4, 2))
        u[1, 0, 0] = -0.5
        with self.assertRaises(NotInvertibleError):
            GridHomeomorphism(u)

    def test_non_unimodular_matrix_rejected(self):
        with self.assertRaises(ValidationFailure):
            GridHomeomorphism(np.zeros((4, 4, 2)), np.array([[2, 0], [0, 1]]))

    def test_solve_inverts_evaluate(self):
        psi = shear_map(32, 0.08)
        targets = np.array([[0.1, 0.2], [3.7, -2.4], [0.999, 0.001]])
        self.assertLess(np.max(np.abs(psi.evaluate(psi.solve(targets)) - targets)), 1e-10)

    def test_invert_then_compose_is_identity_on_nodes(self):
        psi = shear_map(32, 0.08)
        ident = grid_compose(psi, grid_invert(psi))
        self.assertLess(ident.max_displacement(), 1e-9)
        other = grid_compose(grid_invert(psi), psi)
        self.assertLess(other.max_displacement(), 5e-3)

    def test_invert_translation_negates_vector(self):
        inv = grid_invert(translation_map(16, (0.1, -0.2)))
        self.assertLess(np.max(np.abs(inv.displacement - [-0.1, 0.2])), 1e-12)

    def test_invert_fine_grid_residual(self):
        psi = shear_map(256, 0.08)
        nodes = psi.nodes().reshape(-1, 2)
        back = grid_invert(psi).evaluate(nodes)
        self.assertLessEqual(np.max(np.abs(psi.evaluate(back) - nodes)), 1e-9)

    def test_invert_dehn_twist_matrix(self):
        inv = grid_invert(dehn_twist_map(32))
        self.assertEqual(inv.matrix.tolist(), [[1, -1], [0, 1]])
        self.assertEqual(grid_compose(dehn_twist_map(32), inv).matrix.tolist(), [[1, 0], [0, 1]])

    def test_slide_preserves_its_direction(self):
        d = HalfLine(1.0, 1.0 - math.sqrt(3.0))
        F = Linear(d)
        pushed = Pushforward(F, slide_map(32, d, 0.08))
        pts = np.array([[0.1, 0.3], [0.55, 0.7]])
        t = pushed.tangent(pts)
        self.assertLess(np.max(np.abs(t - d.vector)), 1e-9)


class GridFileTests(SimpleTestCase):
    def test_binary_and_csv_preserve_map(self):
        psi = dehn_twist_map(8)
        for decoded in (decode_binary(encode_binary(psi)), decode_csv(encode_csv(psi))):
            self.assertTrue(np.array_equal(decoded.displacement, psi.displacement))
            self.assertTrue(np.array_equal(decoded.matrix, psi.matrix))

    def test_bad_magic(self):
        data = b"XXXX" + encode_binary(identity_map(4))[4:]
        with self.assertRaises(GridFileError):
            decode_binary(data)

    def test_truncated_binary(self):
        with self.assertRaises(GridFileError):
            decode_binary(encode_binary(identity_map(4))[:-8])

    def test_csv_missing_node(self):
        text = encode_csv(identity_map(4)).splitlines()
        with self.assertRaises(GridFileError):
            decode_csv("\n".join(text[:-1]))
