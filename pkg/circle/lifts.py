# circle/lifts.py
"""
Podniesienia homeomorfizmów okręgu zachowujących orientację.

Każde podniesienie F: R -> R spełnia F(x+1) = F(x)+1 i jest ściśle rosnące.
Pole `shift` to całkowite przesunięcie d: podniesienie F + d.
"""
from __future__ import annotations

import bisect
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import ClassVar, Optional, Tuple

import numpy as np

from core.exceptions import NonMonotoneLiftError, ValidationFailure

TWO_PI = 2.0 * math.pi
INVERSION_TOL = 1e-14
_ARRAY_BISECTION_STEPS = 64


class CircleLift(ABC):
    family: ClassVar[str] = ""
    shift: int

    # --- do zaimplementowania w rodzinach ---

    @abstractmethod
    def base_value(self, x: float) -> float:
        """Wartość podniesienia bez przesunięcia całkowitego."""

    @abstractmethod
    def base_array(self, x: np.ndarray) -> np.ndarray:
        """Wektorowa wersja base_value."""

    @abstractmethod
    def params(self) -> dict:
        """Parametry do raportów."""

    # --- wspólne ---

    def value(self, x: float) -> float:
        return self.base_value(x) + self.shift

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        out = self.base_array(arr) + self.shift
        if out.ndim == 0:
            return float(out)
        return out

    def shifted(self, d: int) -> "CircleLift":
        return replace(self, shift=self.shift + int(d))

    def inverse_value(self, x: float) -> float:
        # F(y) - y ma oscylację < 1, więc rozwiązanie leży w [2x-F(x)-1, 2x-F(x)+1]
        g = self.value(x) - x
        lo, hi = x - g - 1.0, x - g + 1.0
        while hi - lo > INVERSION_TOL:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if self.value(mid) < x:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def inverse_array(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return bisect_monotone(lambda y: self(y), x)

    def describe(self) -> dict:
        return {"family": self.family, "shift": self.shift, **self.params()}


def bisect_monotone(fn, targets: np.ndarray) -> np.ndarray:
    """
    Rozwiązuje fn(y) = targets dla ściśle rosnącej funkcji stopnia jeden
    (fn(y) - y o oscylacji < 1), wektorowo.
    """
    targets = np.asarray(targets, dtype=float)
    g = fn(targets) - targets
    lo = targets - g - 1.0
    hi = targets - g + 1.0
    for _ in range(_ARRAY_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        below = fn(mid) < targets
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


# ===== Rodziny =====

@dataclass(frozen=True)
class Rotation(CircleLift):
    family: ClassVar[str] = "rotation"
    theta: float
    shift: int = 0

    def __post_init__(self):
        if not (0.0 <= self.theta < 1.0):
            raise ValidationFailure(f"Kąt obrotu θ={self.theta} spoza [0, 1).")

    def base_value(self, x: float) -> float:
        return x + self.theta

    def base_array(self, x: np.ndarray) -> np.ndarray:
        return x + self.theta

    def params(self) -> dict:
        return {"theta": self.theta}


@dataclass(frozen=True)
class Arnold(CircleLift):
    """F(x) = x + θ + (K/2π)·sin(2πx); |K| < 1 gwarantuje monotoniczność."""

    family: ClassVar[str] = "arnold"
    theta: float
    K: float
    shift: int = 0
    _amp: float = field(init=False, repr=False)

    def __post_init__(self):
        if not (0.0 <= self.theta < 1.0):
            raise ValidationFailure(f"Parametr θ={self.theta} spoza [0, 1).")
        if not abs(self.K) < 1.0:
            raise ValidationFailure(f"Rodzina Arnolda wymaga |K| < 1 (K={self.K}).")
        object.__setattr__(self, "_amp", self.K / TWO_PI)

    def base_value(self, x: float) -> float:
        return x + self.theta + self._amp * math.sin(TWO_PI * x)

    def base_array(self, x: np.ndarray) -> np.ndarray:
        return x + self.theta + self._amp * np.sin(TWO_PI * x)

    def params(self) -> dict:
        return {"theta": self.theta, "K": self.K}


@dataclass(frozen=True, eq=False)
class PiecewiseMonotone(CircleLift):
    """
    Podniesienie zadane próbkami: węzły xs ⊂ [0, 1) rosnące, wartości ys
    ściśle rosnące z ys[-1] < ys[0] + 1; między węzłami interpolacja liniowa,
    poza okresem rozszerzenie F(x+1) = F(x)+1.
    """

    family: ClassVar[str] = "samples"
    xs: Tuple[float, ...]
    ys: Tuple[float, ...]
    shift: int = 0
    _ext_x: np.ndarray = field(init=False, repr=False)
    _ext_y: np.ndarray = field(init=False, repr=False)
    _ext_x_list: list = field(init=False, repr=False)
    _ext_y_list: list = field(init=False, repr=False)

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 1:
            raise ValidationFailure("Węzły i wartości muszą być niepustymi wektorami tej samej długości.")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValidationFailure("Próbki podniesienia muszą być skończone.")
        if xs[0] < 0.0 or xs[-1] >= 1.0 or np.any(np.diff(xs) <= 0):
            raise NonMonotoneLiftError("Węzły muszą być ściśle rosnące w [0, 1).")
        if np.any(np.diff(ys) <= 0) or not ys[-1] < ys[0] + 1.0:
            raise NonMonotoneLiftError(
                "Wartości próbek nie wyznaczają ściśle rosnącego podniesienia stopnia jeden."
            )
        ext_x = np.concatenate([[xs[-1] - 1.0], xs, [xs[0] + 1.0]])
        ext_y = np.concatenate([[ys[-1] - 1.0], ys, [ys[0] + 1.0]])
        object.__setattr__(self, "xs", tuple(float(v) for v in xs))
        object.__setattr__(self, "ys", tuple(float(v) for v in ys))
        object.__setattr__(self, "_ext_x", ext_x)
        object.__setattr__(self, "_ext_y", ext_y)
        object.__setattr__(self, "_ext_x_list", ext_x.tolist())
        object.__setattr__(self, "_ext_y_list", ext_y.tolist())

    def base_value(self, x: float) -> float:
        k = math.floor(x)
        t = x - k
        ex, ey = self._ext_x_list, self._ext_y_list
        i = bisect.bisect_right(ex, t) - 1
        if i >= len(ex) - 1:
            i = len(ex) - 2
        w = (t - ex[i]) / (ex[i + 1] - ex[i])
        return k + ey[i] + w * (ey[i + 1] - ey[i])

    def base_array(self, x: np.ndarray) -> np.ndarray:
        k = np.floor(x)
        return k + np.interp(x - k, self._ext_x, self._ext_y)

    def params(self) -> dict:
        return {"knots": len(self.xs)}


@dataclass(frozen=True, eq=False)
class Composition(CircleLift):
    """Złożenie podniesień stosowanych w podanej kolejności (parts[0] pierwsze)."""

    family: ClassVar[str] = "composition"
    parts: Tuple[CircleLift, ...]
    shift: int = 0

    def __post_init__(self):
        if not self.parts:
            raise ValidationFailure("Złożenie wymaga co najmniej jednego podniesienia.")
        object.__setattr__(self, "parts", tuple(self.parts))

    def base_value(self, x: float) -> float:
        for p in self.parts:
            x = p.value(x)
        return x

    def base_array(self, x: np.ndarray) -> np.ndarray:
        for p in self.parts:
            x = p.base_array(x) + p.shift
        return x

    def params(self) -> dict:
        return {"parts": [p.describe() for p in self.parts]}


@dataclass(frozen=True, eq=False)
class Inverse(CircleLift):
    family: ClassVar[str] = "inverse"
    base: CircleLift
    shift: int = 0

    def base_value(self, x: float) -> float:
        return self.base.inverse_value(x)

    def base_array(self, x: np.ndarray) -> np.ndarray:
        return self.base.inverse_array(x)

    def params(self) -> dict:
        return {"base": self.base.describe()}


# ===== Wyniki =====

@dataclass(frozen=True)
class RotationEnclosure:
    """
    Przedział [lo, hi] zawierający liczbę obrotu zredukowaną o całkowity
    `offset`; podniesiona liczba obrotu τ(F) leży w [offset+lo, offset+hi].
    """

    lo: float
    hi: float
    iterations: int
    offset: int = 0

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def lifted_lo(self) -> float:
        return self.offset + self.lo

    @property
    def lifted_hi(self) -> float:
        return self.offset + self.hi

    @property
    def lifted_center(self) -> float:
        return self.offset + self.center

    def contains(self, value: float, *, circular: bool = True) -> bool:
        if circular:
            d = (value - self.center + 0.5) % 1.0 - 0.5
            return abs(d) <= 0.5 * self.width + 1e-15
        return self.lifted_lo <= value <= self.lifted_hi

    def overlaps(self, other: "RotationEnclosure", *, circular: bool = True) -> bool:
        if circular:
            d = (self.center - other.center + 0.5) % 1.0 - 0.5
            return abs(d) <= 0.5 * (self.width + other.width) + 1e-15
        return self.lifted_lo <= other.lifted_hi and other.lifted_lo <= self.lifted_hi

    def as_dict(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "center": self.center,
            "width": self.width,
            "iterations": self.iterations,
            "offset": self.offset,
        }


@dataclass(frozen=True, eq=False)
class MonotoneCircleMap:
    """
    Próbkowane monotoniczne odwzorowanie stopnia jeden: values[j] = h(j/res),
    j = 0..res, z values[res] = values[0] + 1.
    """

    values: np.ndarray
    rotation: Optional[RotationEnclosure] = None
    residual: Optional[float] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise ValidationFailure("Odwzorowanie wymaga co najmniej dwóch przedziałów.")
        object.__setattr__(self, "values", v)

    @property
    def resolution(self) -> int:
        return self.values.size - 1

    @property
    def knots(self) -> np.ndarray:
        return np.arange(self.resolution + 1) / self.resolution

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0.0))

    def is_degree_one(self, tol: float = 1e-12) -> bool:
        return abs(self.values[-1] - self.values[0] - 1.0) <= tol

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        out = k + np.interp(x - k, self.knots, self.values)
        return float(out) if out.ndim == 0 else out

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        v0 = self.values[0]
        k = np.floor(y - v0)
        out = k + np.interp(y - k, self.values, self.knots)
        return float(out) if out.ndim == 0 else out

    def as_lift(self) -> PiecewiseMonotone:
        return PiecewiseMonotone(tuple(self.knots[:-1]), tuple(self.values[:-1]))
