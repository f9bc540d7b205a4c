# cli/serializers.py
"""
Schemat pliku konfiguracji (JSON, schema_version = 1) i raportu.
"""
from __future__ import annotations

from django.conf import settings
from rest_framework import serializers

SCHEMA_VERSION = 1
SEED_LIMIT = 2**64 - 1
COMMANDS = ("rotnum", "cycle", "first-return", "straighten", "verify", "rigidity", "symmetries")
GRID_FORMATS = ("binary", "csv")


def _point(**kwargs):
    return serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2, **kwargs)


def _default_resolution():
    return settings.TORUS_GRID_RESOLUTION


def _default_budget():
    return settings.TORUS_LEAF_BUDGET


# ---- Obiekty ----

class CircleMapSerializer(serializers.Serializer):
    family = serializers.ChoiceField(choices=["rotation", "arnold", "samples", "composition", "inverse"])
    theta = serializers.FloatField(required=False, min_value=0.0)
    K = serializers.FloatField(required=False)
    shift = serializers.IntegerField(required=False, default=0)
    knots_x = serializers.ListField(child=serializers.FloatField(), required=False)
    knots_y = serializers.ListField(child=serializers.FloatField(), required=False)
    parts = serializers.ListField(child=serializers.CharField(), required=False, min_length=1)
    base = serializers.CharField(required=False)

    _required = {
        "rotation": ("theta",),
        "arnold": ("theta", "K"),
        "samples": ("knots_x", "knots_y"),
        "composition": ("parts",),
        "inverse": ("base",),
    }

    def validate(self, attrs):
        missing = [k for k in self._required[attrs["family"]] if k not in attrs]
        if missing:
            raise serializers.ValidationError(f"Rodzina {attrs['family']} wymaga pól: {', '.join(missing)}.")
        if attrs["family"] == "arnold" and not abs(attrs["K"]) < 1.0:
            raise serializers.ValidationError("Rodzina arnold wymaga |K| < 1.")
        if "theta" in attrs and attrs["theta"] >= 1.0:
            raise serializers.ValidationError("theta musi leżeć w [0, 1).")
        return attrs


class GridMapSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(
        choices=["identity", "translation", "shear", "horizontal_shear", "slide", "dehn_twist", "file", "inverse"]
    )
    resolution = serializers.IntegerField(required=False, min_value=4, default=_default_resolution)
    amplitude = serializers.FloatField(required=False)
    vector = _point(required=False)
    direction = _point(required=False)
    path = serializers.CharField(required=False)
    format = serializers.ChoiceField(choices=GRID_FORMATS, required=False)
    base = serializers.CharField(required=False)

    _required = {
        "translation": ("vector",),
        "shear": ("amplitude",),
        "horizontal_shear": ("amplitude",),
        "slide": ("direction", "amplitude"),
        "file": ("path",),
        "inverse": ("base",),
    }

    def validate(self, attrs):
        missing = [k for k in self._required.get(attrs["kind"], ()) if k not in attrs]
        if missing:
            raise serializers.ValidationError(f"Odwzorowanie {attrs['kind']} wymaga pól: {', '.join(missing)}.")
        return attrs


class FoliationSerializer(serializers.Serializer):
    variant = serializers.ChoiceField(choices=["linear", "suspension_h", "suspension_v", "pushforward"])
    direction = _point(required=False)
    map = serializers.CharField(required=False)
    base = serializers.CharField(required=False)
    orientation = serializers.ChoiceField(choices=[1, -1], required=False, default=1)

    _required = {
        "linear": ("direction",),
        "suspension_h": ("map",),
        "suspension_v": ("map",),
        "pushforward": ("base", "map"),
    }

    def validate(self, attrs):
        missing = [k for k in self._required[attrs["variant"]] if k not in attrs]
        if missing:
            raise serializers.ValidationError(f"Wariant {attrs['variant']} wymaga pól: {', '.join(missing)}.")
        if "direction" in attrs and attrs["direction"] == [0.0, 0.0]:
            raise serializers.ValidationError("Kierunek foliacji liniowej nie może być zerowy.")
        return attrs


class BiFoliationSerializer(serializers.Serializer):
    alpha = serializers.CharField()
    beta = serializers.CharField()


class OutputSerializer(serializers.Serializer):
    dir = serializers.CharField(required=False, allow_null=True, default=None)
    formats = serializers.ListField(
        child=serializers.ChoiceField(choices=GRID_FORMATS), required=False, default=lambda: ["binary"]
    )


# ---- Parametry komend ----

class RotnumParamsSerializer(serializers.Serializer):
    map = serializers.CharField()
    n = serializers.IntegerField(min_value=1)


class CycleParamsSerializer(serializers.Serializer):
    foliation = serializers.CharField()
    T_max = serializers.FloatField()
    basepoint = _point(required=False, default=lambda: [0.0, 0.0])
    basepoints = serializers.ListField(child=_point(), required=False, default=list)
    continued_fraction_depth = serializers.IntegerField(required=False, min_value=1, default=12)


class SectionSerializer(serializers.Serializer):
    axis = serializers.ChoiceField(choices=["x", "y"])
    value = serializers.FloatField(required=False, default=0.0)


class FirstReturnParamsSerializer(serializers.Serializer):
    foliation = serializers.CharField()
    section = SectionSerializer()
    samples = serializers.IntegerField(required=False, min_value=2, default=256)
    n = serializers.IntegerField(required=False, min_value=1, default=10_000)
    budget = serializers.FloatField(required=False, min_value=0.1, default=8.0)


class StraightenParamsSerializer(serializers.Serializer):
    bifoliation = serializers.CharField()
    basepoint = _point(required=False, default=lambda: [0.0, 0.0])
    budget = serializers.FloatField(required=False, min_value=10.0, default=_default_budget)
    resolution = serializers.IntegerField(required=False, min_value=4, default=_default_resolution)
    epsilon = serializers.FloatField(required=False, min_value=0.0, default=2e-3)
    transversality_threshold = serializers.FloatField(required=False, min_value=0.0, max_value=1.0)
    step = serializers.FloatField(required=False, min_value=0.0, allow_null=True, default=None)
    leaf_orientations = serializers.ListField(
        child=serializers.ChoiceField(choices=[1, -1]), required=False, min_length=1, max_length=2
    )
    section_samples = serializers.IntegerField(required=False, min_value=2, allow_null=True, default=None)
    orbit_factor = serializers.IntegerField(required=False, min_value=1, default=4)
    crossing_step = serializers.FloatField(required=False, min_value=0.0, default=1.0 / 64)
    crossing_budget = serializers.FloatField(required=False, min_value=0.1, default=8.0)
    verify_samples = serializers.IntegerField(required=False, min_value=1, default=32)
    verify_arc = serializers.FloatField(required=False, min_value=0.0, default=0.5)
    verify_tolerance = serializers.FloatField(required=False, min_value=0.0, default=1e-2)
    refinement_levels = serializers.IntegerField(required=False, min_value=0, default=0)
    reference_map = serializers.CharField(required=False, allow_null=True, default=None)
    export = serializers.BooleanField(required=False, default=True)


class VerifyParamsSerializer(serializers.Serializer):
    bifoliation = serializers.CharField()
    grid_map = serializers.CharField()
    targets = serializers.ListField(child=_point(), required=False, min_length=2, max_length=2)
    T_max = serializers.FloatField(required=False, default=_default_budget)
    n_samples = serializers.IntegerField(required=False, min_value=1, default=32)
    arc = serializers.FloatField(required=False, min_value=0.0, default=0.5)
    tolerance = serializers.FloatField(required=False, min_value=0.0, default=1e-2)
    basepoint = _point(required=False, default=lambda: [0.0, 0.0])


class SweepSerializer(serializers.Serializer):
    a_min = serializers.FloatField()
    a_max = serializers.FloatField()
    steps = serializers.IntegerField(min_value=1, max_value=1001)


class RigidityParamsSerializer(serializers.Serializer):
    delta = serializers.FloatField()
    delta_prime = serializers.FloatField()
    a = serializers.FloatField(required=False, default=1.0)
    a_prime = serializers.FloatField(required=False, default=1.0)
    b = serializers.FloatField(required=False, default=0.0)
    b_prime = serializers.FloatField(required=False, default=0.0)
    require_origin_fixed = serializers.BooleanField(required=False, default=True)
    sweep = SweepSerializer(required=False)


class SymmetriesParamsSerializer(serializers.Serializer):
    delta = serializers.FloatField()
    delta_prime = serializers.FloatField()
    entry_bound = serializers.IntegerField(min_value=1, max_value=12)


COMMAND_PARAMS = {
    "rotnum": RotnumParamsSerializer,
    "cycle": CycleParamsSerializer,
    "first-return": FirstReturnParamsSerializer,
    "straighten": StraightenParamsSerializer,
    "verify": VerifyParamsSerializer,
    "rigidity": RigidityParamsSerializer,
    "symmetries": SymmetriesParamsSerializer,
}


# ---- Konfiguracja ----

class RunConfigSerializer(serializers.Serializer):
    schema_version = serializers.IntegerField()
    seed = serializers.IntegerField(required=False, min_value=0, max_value=SEED_LIMIT)
    threads = serializers.IntegerField(required=False, min_value=1)
    circle_maps = serializers.DictField(child=CircleMapSerializer(), required=False, default=dict)
    grid_maps = serializers.DictField(child=GridMapSerializer(), required=False, default=dict)
    foliations = serializers.DictField(child=FoliationSerializer(), required=False, default=dict)
    bifoliations = serializers.DictField(child=BiFoliationSerializer(), required=False, default=dict)
    commands = serializers.DictField(child=serializers.DictField(), required=False, default=dict)
    output = OutputSerializer(required=False)

    def validate_schema_version(self, value):
        if value != SCHEMA_VERSION:
            raise serializers.ValidationError(f"Obsługiwana wersja schematu: {SCHEMA_VERSION}.")
        return value

    def validate_commands(self, value):
        out = {}
        for name, params in value.items():
            if name not in COMMAND_PARAMS:
                raise serializers.ValidationError(f"Nieznana komenda w konfiguracji: {name!r}.")
            s = COMMAND_PARAMS[name](data=params)
            if not s.is_valid():
                raise serializers.ValidationError({name: s.errors})
            out[name] = s.validated_data
        return out

    def validate(self, attrs):
        circles = attrs.get("circle_maps", {})
        grids = attrs.get("grid_maps", {})
        fols = attrs.get("foliations", {})
        bifols = attrs.get("bifoliations", {})

        def need(name, table, label):
            if name not in table:
                raise serializers.ValidationError(f"Nieznana referencja {label}: {name!r}.")

        circle_edges = {}
        for name, spec in circles.items():
            refs = list(spec.get("parts", [])) + ([spec["base"]] if "base" in spec else [])
            for r in refs:
                need(r, circles, "odwzorowania okręgu")
            circle_edges[name] = refs
        grid_edges = {}
        for name, spec in grids.items():
            refs = [spec["base"]] if spec["kind"] == "inverse" else []
            for r in refs:
                need(r, grids, "odwzorowania siatkowego")
            grid_edges[name] = refs
        fol_edges = {}
        for name, spec in fols.items():
            refs = []
            if spec["variant"] in ("suspension_h", "suspension_v"):
                need(spec["map"], circles, "odwzorowania okręgu")
            elif spec["variant"] == "pushforward":
                need(spec["map"], grids, "odwzorowania siatkowego")
                need(spec["base"], fols, "foliacji")
                refs.append(spec["base"])
            fol_edges[name] = refs
        for name, spec in bifols.items():
            need(spec["alpha"], fols, "foliacji")
            need(spec["beta"], fols, "foliacji")
        _check_acyclic(circle_edges, "odwzorowań okręgu")
        _check_acyclic(grid_edges, "odwzorowań siatkowych")
        _check_acyclic(fol_edges, "foliacji")

        for cmd, params in attrs.get("commands", {}).items():
            for key, table, label in (
                ("map", circles, "odwzorowania okręgu"),
                ("foliation", fols, "foliacji"),
                ("bifoliation", bifols, "pary foliacji"),
                ("grid_map", grids, "odwzorowania siatkowego"),
                ("reference_map", grids, "odwzorowania siatkowego"),
            ):
                if params.get(key) is not None:
                    need(params[key], table, label)
        if "output" not in attrs:
            attrs["output"] = {"dir": None, "formats": ["binary"]}
        return attrs


def _check_acyclic(edges: dict, label: str) -> None:
    """DFS z kolorowaniem; cykl referencji → błąd walidacji."""
    state = {}

    def visit(node, path):
        if state.get(node) == "done":
            return
        if state.get(node) == "open":
            cycle = " → ".join(path + [node])
            raise serializers.ValidationError(f"Cykl referencji {label}: {cycle}.")
        state[node] = "open"
        for nxt in edges.get(node, ()):
            visit(nxt, path + [node])
        state[node] = "done"

    for node in edges:
        visit(node, [])


# ---- Raport ----

class ReportSerializer(serializers.Serializer):
    schema_version = serializers.IntegerField()
    command = serializers.CharField()
    input_digest = serializers.CharField()
    seed = serializers.IntegerField()
    result = serializers.DictField()
    quality_flags = serializers.ListField(child=serializers.CharField())
    status = serializers.ChoiceField(choices=["ok", "degraded"])
    timing = serializers.DictField(required=False)
