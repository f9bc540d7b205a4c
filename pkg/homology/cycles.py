# homology/cycles.py
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from core.exceptions import ValidationFailure
from foliation.geometry import HalfLine

# połowa średnicy płaskiego T²: odcinek domykający łuk liścia
CLOSING_BOUND = math.sqrt(2.0) / 2.0


@dataclass(frozen=True)
class CycleEstimate:
    """Kierunek cyklu asymptotycznego z rygorystycznym ograniczeniem kąta."""

    direction: HalfLine
    length: float
    bound: float
    displacement: Tuple[float, float] = (0.0, 0.0)
    basepoint: Tuple[float, float] = (0.0, 0.0)
    # kierunki przy T/4 i T/2: diagnostyka zbieżności
    intermediate: Dict[str, HalfLine] = field(default_factory=dict, compare=False)

    def angle_to(self, other: "CycleEstimate") -> float:
        return self.direction.angle_to(other.direction)

    def agrees_with(self, other: "CycleEstimate") -> bool:
        return self.angle_to(other) <= self.bound + other.bound

    def agrees_with_direction(self, direction: HalfLine, slack: float = 0.0) -> bool:
        return self.direction.angle_to(direction) <= self.bound + slack

    def as_dict(self) -> dict:
        return {
            "direction": self.direction.as_dict(),
            "length": self.length,
            "bound": self.bound,
            "displacement": list(self.displacement),
            "basepoint": list(self.basepoint),
            "intermediate": {k: v.as_dict() for k, v in self.intermediate.items()},
        }


@dataclass(frozen=True)
class IntMatrix:
    """Macierz [[a, b], [c, d]] z GL₂(Z)."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            v = getattr(self, name)
            if int(v) != v:
                raise ValidationFailure(f"Wpis {name}={v} nie jest całkowity.")
            object.__setattr__(self, name, int(v))
        if abs(self.det) != 1:
            raise ValidationFailure(f"Macierz musi mieć |det| = 1 (det = {self.det}).")

    @classmethod
    def from_array(cls, arr) -> "IntMatrix":
        m = np.asarray(arr).reshape(2, 2)
        return cls(int(m[0, 0]), int(m[0, 1]), int(m[1, 0]), int(m[1, 1]))

    @classmethod
    def identity(cls) -> "IntMatrix":
        return cls(1, 0, 0, 1)

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=np.int64)

    def inverse(self) -> "IntMatrix":
        s = self.det
        return IntMatrix(s * self.d, -s * self.b, -s * self.c, s * self.a)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        return IntMatrix.from_array(self.as_array() @ other.as_array())

    def is_identity(self) -> bool:
        return (self.a, self.b, self.c, self.d) == (1, 0, 0, 1)

    def as_list(self) -> list:
        return [[self.a, self.b], [self.c, self.d]]


@dataclass(frozen=True)
class ContinuedFraction:
    coefficients: Tuple[int, ...]
    # reszta prawie całkowita: liczba wymierna w granicach precyzji
    terminating: bool

    def as_dict(self) -> dict:
        return {"coefficients": list(self.coefficients), "terminating": self.terminating}
