import json
import math
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from core.exceptions import GridFileError, UsageError, ValidationFailure
from foliation.grid import dehn_twist_map, identity_map, shear_map

from .builders import ObjectRegistry
from .export import export_grid, grid_format, import_grid
from .serializers import RunConfigSerializer
from .services import run_command

D_ALPHA = [1.0, math.sqrt(2.0) - 1.0]
D_BETA = [1.0, -(math.sqrt(3.0) - 1.0)]


def linear_config(**commands):
    return {
        "schema_version": 1,
        "seed": 0,
        "foliations": {
            "alpha": {"variant": "linear", "direction": D_ALPHA},
            "beta": {"variant": "linear", "direction": D_BETA},
        },
        "bifoliations": {"pair": {"alpha": "alpha", "beta": "beta"}},
        "commands": commands,
    }


def validated(raw):
    s = RunConfigSerializer(data=raw)
    s.is_valid(raise_exception=True)
    return s.validated_data


class CommandRunMixin:
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def run_task(self, task, config, *extra):
        path = self.tmp / "config.json"
        path.write_text(json.dumps(config), encoding="utf-8")
        out, err = StringIO(), StringIO()
        call_command("run", task, "--config", str(path), "--out", str(self.tmp / "out"), *extra, stdout=out, stderr=err)
        return json.loads(out.getvalue())


class RunConfigSerializerTests(SimpleTestCase):
    def test_minimal_config(self):
        data = validated({"schema_version": 1})
        self.assertEqual(data["commands"], {})
        self.assertEqual(data["output"]["formats"], ["binary"])

    def test_schema_version_checked(self):
        s = RunConfigSerializer(data={"schema_version": 2})
        self.assertFalse(s.is_valid())
        self.assertIn("schema_version", s.errors)

    def test_unknown_reference(self):
        raw = {
            "schema_version": 1,
            "foliations": {"f": {"variant": "suspension_h", "map": "missing"}},
        }
        self.assertFalse(RunConfigSerializer(data=raw).is_valid())

    def test_reference_cycle(self):
        raw = {
            "schema_version": 1,
            "circle_maps": {
                "a": {"family": "composition", "parts": ["b"]},
                "b": {"family": "inverse", "base": "a"},
            },
        }
        s = RunConfigSerializer(data=raw)
        self.assertFalse(s.is_valid())
        self.assertIn("Cykl", json.dumps(s.errors, ensure_ascii=False))

    def test_family_fields_required(self):
        raw = {"schema_version": 1, "circle_maps": {"f": {"family": "arnold", "theta": 0.3}}}
        self.assertFalse(RunConfigSerializer(data=raw).is_valid())

    def test_arnold_monotonicity_range(self):
        raw = {"schema_version": 1, "circle_maps": {"f": {"family": "arnold", "theta": 0.3, "K": 1.2}}}
        self.assertFalse(RunConfigSerializer(data=raw).is_valid())

    def test_command_params_validated(self):
        raw = {
            "schema_version": 1,
            "circle_maps": {"r": {"family": "rotation", "theta": 0.25}},
            "commands": {"rotnum": {"map": "r", "n": 0}},
        }
        self.assertFalse(RunConfigSerializer(data=raw).is_valid())

    def test_seed_range(self):
        self.assertTrue(RunConfigSerializer(data={"schema_version": 1, "seed": 2**64 - 1}).is_valid())
        self.assertFalse(RunConfigSerializer(data={"schema_version": 1, "seed": 2**64}).is_valid())


class ObjectRegistryTests(SimpleTestCase):
    def test_builds_and_caches(self):
        config = validated({
            "schema_version": 1,
            "circle_maps": {
                "r": {"family": "rotation", "theta": 0.25},
                "inv": {"family": "inverse", "base": "r"},
            },
            "grid_maps": {"twist": {"kind": "dehn_twist", "resolution": 16}},
            "foliations": {
                "s": {"variant": "suspension_h", "map": "inv"},
                "pushed": {"variant": "pushforward", "base": "s", "map": "twist"},
            },
        })
        registry = ObjectRegistry(config)
        self.assertAlmostEqual(registry.circle_map("inv").value(0.5), 0.25, places=12)
        self.assertIs(registry.foliation("pushed"), registry.foliation("pushed"))
        self.assertIs(registry.foliation("pushed").base, registry.foliation("s"))
        self.assertEqual(registry.grid_map("twist").matrix.tolist(), [[1, 1], [0, 1]])

    def test_inverse_grid_map(self):
        config = validated({
            "schema_version": 1,
            "grid_maps": {
                "twist": {"kind": "dehn_twist", "resolution": 16},
                "untwist": {"kind": "inverse", "base": "twist"},
            },
        })
        self.assertEqual(ObjectRegistry(config).grid_map("untwist").matrix.tolist(), [[1, -1], [0, 1]])

    def test_grid_file_relative_to_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            export_grid(shear_map(8, 0.05), Path(tmp) / "psi.tgrd")
            config = validated({"schema_version": 1, "grid_maps": {"psi": {"kind": "file", "path": "psi.tgrd"}}})
            phi = ObjectRegistry(config, base_dir=Path(tmp)).grid_map("psi")
        self.assertEqual(phi.resolution, 8)


class RunCommandTests(SimpleTestCase):
    def test_rotnum_enclosure(self):
        config = validated({
            "schema_version": 1,
            "circle_maps": {"r": {"family": "rotation", "theta": 0.25}},
            "commands": {"rotnum": {"map": "r", "n": 100}},
        })
        report = run_command(config, "rotnum")
        enc = report.result["enclosure"]
        self.assertAlmostEqual(enc["lo"], 0.24, places=12)
        self.assertAlmostEqual(enc["hi"], 0.26, places=12)
        self.assertEqual(report.status, "ok")

    def test_unknown_command(self):
        with self.assertRaises(UsageError):
            run_command(validated({"schema_version": 1}), "bogus")

    def test_missing_command_section(self):
        with self.assertRaises(ValidationFailure):
            run_command(validated({"schema_version": 1}), "rotnum")

    def test_rigidity_report_carries_tolerance(self):
        config = validated({
            "schema_version": 1,
            "commands": {"rigidity": {"delta": 0.5, "delta_prime": -2.0, "a": 2.0, "a_prime": 2.0}},
        })
        result = run_command(config, "rigidity").result
        self.assertFalse(result["verdict"]["is_identity"])
        self.assertEqual(result["verdict"]["tolerance"], 1e-12)
        self.assertLessEqual(max(result["eigen_residuals"]), 1e-12)

    def test_symmetries_golden(self):
        golden = (math.sqrt(5.0) - 1.0) / 2.0
        config = validated({
            "schema_version": 1,
            "commands": {"symmetries": {"delta": golden, "delta_prime": -1.0 / golden, "entry_bound": 3}},
        })
        matrices = run_command(config, "symmetries").result["matrices"]
        self.assertIn([[2, 1], [1, 1]], matrices)

    def test_first_return_of_linear_foliation(self):
        config = validated(linear_config(**{
            "first-return": {"foliation": "alpha", "section": {"axis": "x"}, "samples": 64, "n": 1000},
        }))
        result = run_command(config, "first-return").result
        self.assertEqual(result["section_copy"], 1)
        self.assertAlmostEqual(result["enclosure"]["center"], math.sqrt(2.0) - 1.0, delta=2e-3)

    def test_cycle_base_points_agree(self):
        config = validated(linear_config(cycle={
            "foliation": "alpha", "T_max": 100.0, "basepoints": [[0.3, 0.1], [0.7, 0.9]],
        }))
        report = run_command(config, "cycle", threads=2)
        self.assertTrue(report.result["basepoint_spread"]["all_agree"])
        self.assertEqual(report.quality_flags, [])


class RunManagementCommandTests(CommandRunMixin, SimpleTestCase):
    def test_rotnum(self):
        config = {
            "schema_version": 1,
            "circle_maps": {"r": {"family": "rotation", "theta": 0.25}},
            "commands": {"rotnum": {"map": "r", "n": 100}},
        }
        report = self.run_task("rotnum", config)
        self.assertEqual(report["command"], "rotnum")
        self.assertAlmostEqual(report["result"]["enclosure"]["lo"], 0.24, places=12)
        self.assertAlmostEqual(report["result"]["enclosure"]["hi"], 0.26, places=12)
        self.assertTrue((self.tmp / "out" / "rotnum.json").exists())

    def test_straighten_linear_pair_is_identity(self):
        config = linear_config(straighten={
            "bifoliation": "pair", "resolution": 32, "budget": 50.0, "epsilon": 0.05, "verify_samples": 8,
        })
        report = self.run_task("straighten", config)
        self.assertTrue(report["result"]["is_identity"])
        self.assertLessEqual(report["result"]["identity_distance"], 1e-9)
        self.assertEqual(report["status"], "ok")
        exported = import_grid(self.tmp / "out" / "straighten_phi.tgrd")
        self.assertEqual(exported.resolution, 32)

    def test_short_cycle_is_inconclusive(self):
        config = linear_config(cycle={"foliation": "alpha", "T_max": 5.0})
        with self.assertRaises(CommandError) as ctx:
            self.run_task("cycle", config)
        self.assertEqual(ctx.exception.returncode, 3)

    def test_unknown_command(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_task("bogus", linear_config())
        self.assertEqual(ctx.exception.returncode, 64)

    def test_missing_command_section(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_task("rotnum", linear_config())
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn("commands.rotnum", str(ctx.exception))

    def test_rational_alpha_rejected_by_straighten(self):
        config = linear_config(straighten={
            "bifoliation": "pair", "resolution": 32, "budget": 50.0, "epsilon": 0.05, "verify_samples": 8,
        })
        config["foliations"]["alpha"]["direction"] = [1.0, 0.5]
        with self.assertRaises(CommandError) as ctx:
            self.run_task("straighten", config)
        self.assertEqual(ctx.exception.returncode, 3)
        self.assertTrue(str(ctx.exception).startswith("[alpha]"))

    def test_bad_schema(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_task("rotnum", {"schema_version": 7})
        self.assertEqual(ctx.exception.returncode, 2)

    def test_invalid_json(self):
        path = self.tmp / "broken.json"
        path.write_text("{schema_version: 1", encoding="utf-8")
        with self.assertRaises(CommandError) as ctx:
            call_command("run", "rotnum", "--config", str(path), stdout=StringIO(), stderr=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)

    def test_domain_validation_failure(self):
        config = linear_config(rigidity={"delta": 0.5, "delta_prime": 0.5})
        with self.assertRaises(CommandError) as ctx:
            self.run_task("rigidity", config)
        self.assertEqual(ctx.exception.returncode, 2)

    def _negative_control(self):
        config = linear_config(verify={
            "bifoliation": "sheared", "grid_map": "id", "targets": [D_ALPHA, D_BETA], "n_samples": 32,
        })
        config["grid_maps"] = {
            "psi": {"kind": "shear", "resolution": 64, "amplitude": 0.08},
            "id": {"kind": "identity", "resolution": 64},
        }
        config["foliations"].update({
            "alpha_s": {"variant": "pushforward", "base": "alpha", "map": "psi"},
            "beta_s": {"variant": "pushforward", "base": "beta", "map": "psi"},
        })
        config["bifoliations"]["sheared"] = {"alpha": "alpha_s", "beta": "beta_s"}
        return config

    def test_verification_failure_is_a_quality_flag(self):
        report = self.run_task("verify", self._negative_control())
        self.assertEqual(report["status"], "degraded")
        self.assertIn("verification_failed", report["quality_flags"])
        v = report["result"]["verification"]
        self.assertGreaterEqual(max(v["alpha"]["max_angle"], v["beta"]["max_angle"]), 1e-2)

    def test_strict_turns_flags_into_exit_4(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_task("verify", self._negative_control(), "--strict")
        self.assertEqual(ctx.exception.returncode, 4)
        self.assertTrue((self.tmp / "out" / "verify.json").exists())

    def test_seed_flag_overrides_config(self):
        config = linear_config(rigidity={"delta": 0.5, "delta_prime": -2.0})
        report = self.run_task("rigidity", config, "--seed", "12345")
        self.assertEqual(report["seed"], 12345)
        self.assertTrue(report["result"]["verdict"]["is_identity"])


class DeterminismTests(CommandRunMixin, SimpleTestCase):
    def test_repeated_straighten_payloads_identical(self):
        config = linear_config(straighten={
            "bifoliation": "slid", "resolution": 64, "budget": 300.0, "epsilon": 0.01, "export": False,
        })
        config["grid_maps"] = {"slide": {"kind": "slide", "resolution": 64, "direction": D_BETA, "amplitude": 0.08}}
        config["foliations"]["alpha_s"] = {"variant": "pushforward", "base": "alpha", "map": "slide"}
        config["bifoliations"]["slid"] = {"alpha": "alpha_s", "beta": "beta"}

        first = self.run_task("straighten", config)
        second = self.run_task("straighten", config)
        first.pop("timing")
        second.pop("timing")
        self.assertEqual(
            json.dumps(first, sort_keys=True), json.dumps(second, sort_keys=True)
        )
        self.assertEqual(first["input_digest"], second["input_digest"])


class ExportGridTests(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def test_identity_round_trip(self):
        phi = identity_map(8)
        back = import_grid(export_grid(phi, self.tmp / "id.tgrd"))
        self.assertTrue(np.array_equal(back.displacement, phi.displacement))

    def test_binary_round_trip_bit_exact(self):
        phi = shear_map(32, 0.08)
        back = import_grid(export_grid(phi, self.tmp / "psi.tgrd"))
        self.assertEqual(back.displacement.tobytes(), phi.displacement.tobytes())
        self.assertTrue(np.array_equal(back.matrix, phi.matrix))

    def test_csv_round_trip(self):
        phi = dehn_twist_map(16)
        back = import_grid(export_grid(phi, self.tmp / "twist.csv"))
        self.assertLessEqual(float(np.max(np.abs(back.displacement - phi.displacement))), 1e-15)
        self.assertEqual(back.matrix.tolist(), [[1, 1], [0, 1]])

    def test_format_from_suffix(self):
        self.assertEqual(grid_format("a/b.CSV"), "csv")
        self.assertEqual(grid_format("a/b.txt", "binary"), "binary")
        with self.assertRaises(ValidationFailure):
            grid_format("a/b.txt")

    def test_write_failure_carries_path(self):
        blocker = self.tmp / "file"
        blocker.write_text("x")
        target = blocker / "sub" / "phi.tgrd"
        with self.assertRaises(GridFileError) as ctx:
            export_grid(identity_map(4), target)
        self.assertEqual(ctx.exception.context["path"], str(target))

    def test_missing_file(self):
        with self.assertRaises(GridFileError):
            import_grid(self.tmp / "missing.tgrd")

    def test_conversion_command(self):
        src = export_grid(shear_map(16, 0.05), self.tmp / "psi.tgrd")
        dst = self.tmp / "psi.csv"
        call_command("export_grid", str(src), str(dst), stdout=StringIO())
        self.assertLessEqual(
            float(np.max(np.abs(import_grid(dst).displacement - import_grid(src).displacement))), 1e-15
        )
