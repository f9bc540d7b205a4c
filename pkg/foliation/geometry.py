# foliation/geometry.py
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from core.exceptions import ValidationFailure


@dataclass(frozen=True)
class HalfLine:
    """Element P⁺(R²): kierunek zorientowany, (c, s) o normie 1."""

    c: float
    s: float

    def __post_init__(self):
        n = math.hypot(self.c, self.s)
        if not math.isfinite(n) or n == 0.0:
            raise ValidationFailure("Półprosta wymaga niezerowego, skończonego wektora.")
        object.__setattr__(self, "c", float(self.c) / n)
        object.__setattr__(self, "s", float(self.s) / n)

    @classmethod
    def from_vector(cls, v) -> "HalfLine":
        return cls(float(v[0]), float(v[1]))

    @classmethod
    def from_angle(cls, psi: float) -> "HalfLine":
        return cls(math.cos(psi), math.sin(psi))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.c, self.s])

    @property
    def angle(self) -> float:
        return math.atan2(self.s, self.c) % (2.0 * math.pi)

    @property
    def slope(self) -> float:
        return self.s / self.c if self.c != 0.0 else math.inf

    def reversed(self) -> "HalfLine":
        return HalfLine(-self.c, -self.s)

    def angle_to(self, other: "HalfLine") -> float:
        """Kąt (bez znaku, w [0, π]) między półprostymi."""
        cross = self.c * other.s - self.s * other.c
        dot = self.c * other.c + self.s * other.s
        return math.atan2(abs(cross), dot)

    def as_dict(self) -> dict:
        return {"c": self.c, "s": self.s, "angle": self.angle}


@dataclass(frozen=True, eq=False)
class LiftedPolyline:
    """Łamana w pokryciu uniwersalnym z długością łuku w każdym wierzchołku."""

    points: np.ndarray
    arclength: np.ndarray
    # wierzchołki liścia bazowego, jeśli łamana jest obrazem przez odwzorowanie
    source: np.ndarray | None = None

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    @property
    def length(self) -> float:
        return float(self.arclength[-1])

    @property
    def displacement(self) -> np.ndarray:
        return self.points[-1] - self.points[0]

    def truncated(self, T: float) -> "LiftedPolyline":
        """Obcina do pierwszego wierzchołka o długości łuku ≥ T."""
        idx = int(np.searchsorted(self.arclength, T, side="left"))
        idx = min(idx, self.points.shape[0] - 1)
        src = None if self.source is None else self.source[: idx + 1]
        return LiftedPolyline(self.points[: idx + 1], self.arclength[: idx + 1], src)

    def vertex_at(self, T: float) -> np.ndarray:
        return self.truncated(T).end


@dataclass(frozen=True)
class Section:
    """Zamknięta krzywa x = value (axis='x') albo y = value (axis='y') na T²."""

    axis: Literal["x", "y"]
    value: float = 0.0

    def __post_init__(self):
        if self.axis not in ("x", "y"):
            raise ValidationFailure(f"Nieznana oś sekcji: {self.axis!r}.")

    @property
    def normal_index(self) -> int:
        return 0 if self.axis == "x" else 1

    @property
    def along_index(self) -> int:
        return 1 - self.normal_index

    def points(self, t: np.ndarray) -> np.ndarray:
        """Punkty sekcji o parametrze t (współrzędna wzdłuż sekcji)."""
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape + (2,))
        out[..., self.normal_index] = self.value
        out[..., self.along_index] = t
        return out
