# cli/builders.py
"""
Budowa obiektów dziedzinowych z zwalidowanej konfiguracji, z pamięcią podręczną
(każda nazwa budowana raz, referencje rozwiązywane leniwie).
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable, Dict, Mapping, Optional

from circle.lifts import CircleLift
from circle.services import circle_lift_from_spec
from core.exceptions import ValidationFailure
from foliation.foliations import BiFoliation, Foliation, Linear, Pushforward, SuspensionH, SuspensionV
from foliation.geometry import HalfLine
from foliation.grid import (
    GridHomeomorphism,
    dehn_twist_map,
    horizontal_shear_map,
    identity_map,
    shear_map,
    slide_map,
    translation_map,
)
from foliation.services import grid_invert

from .export import import_grid

logger = logging.getLogger(__name__)


class ObjectRegistry:
    def __init__(self, config: Mapping, base_dir: Optional[Path] = None):
        self.config = config
        self.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        self._cache: Dict[tuple, object] = {}

    def _cached(self, kind: str, name: str, build: Callable[[Mapping], object]):
        key = (kind, name)
        if key not in self._cache:
            table = self.config.get(kind, {})
            if name not in table:
                raise ValidationFailure(f"Brak definicji {kind}.{name} w konfiguracji.")
            self._cache[key] = build(table[name])
            logger.debug("Zbudowano %s.%s", kind, name)
        return self._cache[key]

    # --- typy ---

    def circle_map(self, name: str) -> CircleLift:
        return self._cached("circle_maps", name, lambda spec: circle_lift_from_spec(spec, resolve=self.circle_map))

    def grid_map(self, name: str) -> GridHomeomorphism:
        return self._cached("grid_maps", name, self._build_grid)

    def foliation(self, name: str) -> Foliation:
        return self._cached("foliations", name, self._build_foliation)

    def bifoliation(self, name: str) -> BiFoliation:
        return self._cached(
            "bifoliations", name, lambda spec: BiFoliation(self.foliation(spec["alpha"]), self.foliation(spec["beta"]))
        )

    # --- budowniczowie ---

    def _build_grid(self, spec: Mapping) -> GridHomeomorphism:
        kind = spec["kind"]
        N = spec.get("resolution")
        if kind == "identity":
            return identity_map(N)
        if kind == "translation":
            return translation_map(N, spec["vector"])
        if kind == "shear":
            return shear_map(N, spec["amplitude"])
        if kind == "horizontal_shear":
            return horizontal_shear_map(N, spec["amplitude"])
        if kind == "slide":
            return slide_map(N, HalfLine.from_vector(spec["direction"]), spec["amplitude"])
        if kind == "dehn_twist":
            return dehn_twist_map(N)
        if kind == "file":
            path = Path(spec["path"])
            if not path.is_absolute():
                path = self.base_dir / path
            return import_grid(path, spec.get("format"))
        if kind == "inverse":
            return grid_invert(self.grid_map(spec["base"]))
        raise ValidationFailure(f"Nieznany rodzaj odwzorowania siatkowego: {kind!r}.")

    def _build_foliation(self, spec: Mapping) -> Foliation:
        variant = spec["variant"]
        orientation = spec.get("orientation", 1)
        if variant == "linear":
            return Linear(HalfLine.from_vector(spec["direction"]), orientation)
        if variant == "suspension_h":
            return SuspensionH(self.circle_map(spec["map"]), orientation)
        if variant == "suspension_v":
            return SuspensionV(self.circle_map(spec["map"]), orientation)
        if variant == "pushforward":
            return Pushforward(self.foliation(spec["base"]), self.grid_map(spec["map"]), orientation)
        raise ValidationFailure(f"Nieznany wariant foliacji: {variant!r}.")
