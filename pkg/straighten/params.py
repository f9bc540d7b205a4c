# straighten/params.py
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

from django.conf import settings

from core.exceptions import ValidationFailure
from foliation.geometry import HalfLine
from foliation.grid import GridHomeomorphism


@dataclass(frozen=True)
class StraighteningParams:
    """Parametry prostowania pary foliacji (budżety, rozdzielczość, tolerancje)."""

    basepoint: Tuple[float, float] = (0.0, 0.0)
    budget: float = field(default_factory=lambda: float(settings.TORUS_LEAF_BUDGET))
    resolution: int = field(default_factory=lambda: int(settings.TORUS_GRID_RESOLUTION))
    epsilon: float = 2e-3
    transversality_threshold: float = field(
        default_factory=lambda: float(settings.TORUS_TRANSVERSALITY_THRESHOLD)
    )
    # krok śledzenia; None → 1/(4N)
    step: Optional[float] = None
    leaf_orientations: Tuple[int, ...] = (1, -1)

    # --- etap β ---
    section_samples: Optional[int] = None
    orbit_factor: int = 4
    crossing_step: float = 1.0 / 64
    crossing_budget: float = 8.0
    crossing_block: int = 4096
    minimality_orbit: int = 100_000
    minimality_eps: float = 1e-3

    # --- weryfikacja ---
    verify_samples: int = 32
    verify_arc: float = 0.5
    verify_tolerance: float = 1e-2

    seed: int = field(default_factory=lambda: int(settings.TORUS_DEFAULT_SEED))
    threads: int = field(default_factory=lambda: int(settings.TORUS_THREADS))

    def __post_init__(self):
        object.__setattr__(self, "basepoint", (float(self.basepoint[0]), float(self.basepoint[1])))
        object.__setattr__(self, "leaf_orientations", tuple(int(o) for o in self.leaf_orientations))
        self.validate()

    def validate(self) -> None:
        if self.resolution < 4:
            raise ValidationFailure(f"Rozdzielczość siatki musi być ≥ 4 (N={self.resolution}).")
        if not (math.isfinite(self.budget) and self.budget > 10.0):
            raise ValidationFailure(f"Budżet śledzenia L musi być > 10 (L={self.budget}).")
        if not self.epsilon > 0.0:
            raise ValidationFailure("Promień ε musi być dodatni.")
        if not 0.0 < self.transversality_threshold < 1.0:
            raise ValidationFailure("Próg transwersalności musi leżeć w (0, 1).")
        if not self.leaf_orientations or any(o not in (1, -1) for o in self.leaf_orientations):
            raise ValidationFailure("Orientacje liścia bazowego: niepusty podzbiór {+1, -1}.")
        if len(set(self.leaf_orientations)) != len(self.leaf_orientations):
            raise ValidationFailure("Orientacje liścia bazowego nie mogą się powtarzać.")
        if self.step is not None and not self.step > 0.0:
            raise ValidationFailure("Krok śledzenia musi być dodatni.")
        if self.orbit_factor < 1 or self.crossing_block < 1 or self.verify_samples < 1:
            raise ValidationFailure("Parametry liczności muszą być dodatnie.")
        if not (self.crossing_step > 0.0 and self.crossing_budget > 0.0 and self.verify_arc > 0.0):
            raise ValidationFailure("Krok, budżet przecięć i długość łuku weryfikacji muszą być dodatnie.")
        if not 0 <= self.seed < 2**64:
            raise ValidationFailure(f"Ziarno poza zakresem [0, 2^64): {self.seed}.")
        if self.threads < 1:
            raise ValidationFailure("Liczba wątków musi być ≥ 1.")

    @property
    def trace_step(self) -> float:
        return self.step if self.step is not None else 1.0 / (4 * self.resolution)

    @property
    def samples(self) -> int:
        return self.section_samples or self.resolution

    def coverage_guard_ok(self) -> bool:
        """ε ≥ 2/L: heurystyka gęstości śledzenia; naruszenie obniża jakość wyniku."""
        return self.epsilon >= 2.0 / self.budget

    def refined(self, factor: int = 2) -> "StraighteningParams":
        return replace(
            self,
            resolution=self.resolution * factor,
            budget=self.budget * factor,
            epsilon=self.epsilon / factor,
            step=None if self.step is None else self.step / factor,
        )

    def as_dict(self) -> dict:
        return {
            "basepoint": list(self.basepoint),
            "budget": self.budget,
            "resolution": self.resolution,
            "epsilon": self.epsilon,
            "transversality_threshold": self.transversality_threshold,
            "step": self.trace_step,
            "leaf_orientations": list(self.leaf_orientations),
            "section_samples": self.samples,
            "orbit_factor": self.orbit_factor,
            "seed": self.seed,
        }


@dataclass(frozen=True, eq=False)
class StraighteningResult:
    phi: GridHomeomorphism
    targets: Tuple[HalfLine, HalfLine]
    max_extension_gap: float = 0.0
    basepoint_residual: float = 0.0
    induced_h1_identity: bool = True
    flags: Tuple[str, ...] = ()
    cycles: Dict[str, dict] = field(default_factory=dict)
    verification: Optional[dict] = None
    stages: Dict[str, dict] = field(default_factory=dict)

    @property
    def degraded(self) -> bool:
        return bool(self.flags)

    def quality(self) -> dict:
        return {
            "max_extension_gap": self.max_extension_gap,
            "basepoint_residual": self.basepoint_residual,
            "induced_h1_identity": self.induced_h1_identity,
            "flags": list(self.flags),
            "verification": self.verification,
        }

    def as_dict(self) -> dict:
        return {
            "targets": {"alpha": self.targets[0].as_dict(), "beta": self.targets[1].as_dict()},
            "quality": self.quality(),
            "cycles": self.cycles,
            "stages": self.stages,
            "map": self.phi.describe(),
        }
