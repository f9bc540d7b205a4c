# foliation/foliations.py
"""
Zorientowane foliacje T² dostępne wyłącznie przez wyrocznię śledzenia liści.

Warianty: Linear(l), SuspensionH(T), SuspensionV(S), Pushforward(F, f).
Orientacja jest jedną globalną flagą ±1.
"""
from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import ClassVar, Optional, Tuple

import numpy as np

from circle.lifts import CircleLift, bisect_monotone
from core.exceptions import ValidationFailure

from .geometry import HalfLine
from .grid import GridHomeomorphism

logger = logging.getLogger(__name__)

# maksymalny krok śledzenia w pokryciu: 1/(4N) dla N = 256
DEFAULT_STEP = 1.0 / 1024
_PROBE_LENGTH = 10.0
_MAX_RETRACES = 6

Trace = Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]


def _arclength(points: np.ndarray) -> np.ndarray:
    seg = np.hypot(*np.moveaxis(np.diff(points, axis=-2), -1, 0))
    out = np.zeros(points.shape[:-1])
    np.cumsum(seg, axis=-1, out=out[..., 1:])
    return out


def _check_orientation(value: int) -> int:
    if value not in (1, -1):
        raise ValidationFailure(f"Orientacja musi być ±1 (otrzymano {value}).")
    return int(value)


class Foliation(ABC):
    variant: ClassVar[str] = ""
    orientation: int

    @abstractmethod
    def trace_many(self, seeds: np.ndarray, T: float, sign: int = 1, step: float = DEFAULT_STEP) -> Trace:
        """
        Śledzi liście z punktów `seeds` (S, 2) na długość łuku ≥ T.
        Zwraca (punkty (S, V, 2), długość łuku (S, V), wierzchołki źródłowe albo None).
        """

    @abstractmethod
    def tangent(self, points: np.ndarray) -> np.ndarray:
        """Jednostkowe, zorientowane wektory styczne liści w punktach (P, 2)."""

    @abstractmethod
    def describe(self) -> dict:
        ...

    def reversed(self) -> "Foliation":
        return replace(self, orientation=-self.orientation)


@dataclass(frozen=True)
class Linear(Foliation):
    variant: ClassVar[str] = "linear"
    direction: HalfLine
    orientation: int = 1

    def __post_init__(self):
        object.__setattr__(self, "orientation", _check_orientation(self.orientation))

    @property
    def oriented_direction(self) -> HalfLine:
        return self.direction if self.orientation > 0 else self.direction.reversed()

    def trace_many(self, seeds, T, sign=1, step=DEFAULT_STEP) -> Trace:
        seeds = np.asarray(seeds, dtype=float).reshape(-1, 2)
        n = max(1, math.ceil(T / step))
        h = (T if T > 0 else step) / n
        s = np.arange(n + 1) * h
        d = sign * self.oriented_direction.vector
        points = seeds[:, None, :] + s[None, :, None] * d
        return points, np.broadcast_to(s, points.shape[:2]).copy(), None

    def tangent(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.broadcast_to(self.oriented_direction.vector, pts.shape).copy()

    def describe(self) -> dict:
        return {"variant": self.variant, "direction": self.direction.as_dict(), "orientation": self.orientation}


@dataclass(frozen=True, eq=False)
class SuspensionH(Foliation):
    """
    Liść przez (k, Y) na pasie x ∈ [k, k+1]: y = (1−t)·Y + t·T̃(Y), x = k + t.
    Domyślna orientacja: rosnące x.
    """

    variant: ClassVar[str] = "suspension_h"
    _swap: ClassVar[bool] = False
    lift: CircleLift
    orientation: int = 1
    _slope_bound: float = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "orientation", _check_orientation(self.orientation))
        ys = np.linspace(0.0, 1.0, 4097)
        bound = float(np.max(np.abs(self.lift(ys) - ys))) * 1.05 + 1e-3
        object.__setattr__(self, "_slope_bound", bound)

    # --- współrzędne wewnętrzne (a wzdłuż pasów, b w poprzek) ---

    def _to_internal(self, p: np.ndarray) -> np.ndarray:
        return p[..., ::-1] if self._swap else p

    _from_internal = _to_internal

    def _strip_start(self, a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Dla punktu (a, b) zwraca (k, Y): pas i wysokość liścia na jego lewym brzegu."""
        k = np.floor(a)
        t = a - k
        T = self.lift
        Y = bisect_monotone(lambda v: (1.0 - t) * v + t * T(v), b)
        Y = np.where(t == 0.0, b, Y)
        return k, Y

    def trace_many(self, seeds, T, sign=1, step=DEFAULT_STEP) -> Trace:
        seeds = np.asarray(seeds, dtype=float).reshape(-1, 2)
        internal = self._to_internal(seeds)
        a0, b0 = internal[:, 0], internal[:, 1]
        e = sign * self.orientation
        m = max(1, math.ceil(math.hypot(1.0, self._slope_bound) / step))
        J = math.ceil(max(T, 0.0) * m) + 1

        offsets = np.arange(1, J + 1, dtype=np.int64)
        if e > 0:
            idx = np.floor(a0 * m).astype(np.int64)[:, None] + offsets
        else:
            idx = np.ceil(a0 * m).astype(np.int64)[:, None] - offsets
        k_seed, Y_seed = self._strip_start(a0, b0)
        k_seed = k_seed.astype(np.int64)

        strips = J // m + 3
        qlo, qhi = (0, strips) if e > 0 else (-strips, 1)
        Bs = np.empty((seeds.shape[0], qhi - qlo + 1))
        Bs[:, -qlo] = Y_seed
        for q in range(1, qhi + 1):
            Bs[:, q - qlo] = self.lift(Bs[:, q - 1 - qlo])
        for q in range(-1, qlo - 1, -1):
            Bs[:, q - qlo] = self.lift.inverse_array(Bs[:, q + 1 - qlo])

        k = idx // m
        t = (idx - k * m) / m
        q = k - k_seed[:, None]
        rows = np.arange(seeds.shape[0])[:, None]
        B_lo = Bs[rows, q - qlo]
        B_hi = Bs[rows, q + 1 - qlo]
        a = idx / m
        b = (1.0 - t) * B_lo + t * B_hi

        pts = np.empty((seeds.shape[0], J + 1, 2))
        pts[:, 0, :] = internal
        pts[:, 1:, 0] = a
        pts[:, 1:, 1] = b
        pts = self._from_internal(pts)
        return pts, _arclength(pts), None

    def tangent(self, points) -> np.ndarray:
        pts = self._to_internal(np.asarray(points, dtype=float).reshape(-1, 2))
        _, Y = self._strip_start(pts[:, 0], pts[:, 1])
        slope = self.lift(Y) - Y
        t = np.stack([np.ones_like(slope), slope], -1) * self.orientation
        t /= np.linalg.norm(t, axis=1, keepdims=True)
        return self._from_internal(t)

    def describe(self) -> dict:
        return {"variant": self.variant, "lift": self.lift.describe(), "orientation": self.orientation}


@dataclass(frozen=True, eq=False)
class SuspensionV(SuspensionH):
    """Zawieszenie z zamienionymi współrzędnymi; domyślnie liście idą w górę."""

    variant: ClassVar[str] = "suspension_v"
    _swap: ClassVar[bool] = True


@dataclass(frozen=True, eq=False)
class Pushforward(Foliation):
    """Obraz foliacji bazowej przez odwzorowanie siatkowe; liście = obrazy liści."""

    variant: ClassVar[str] = "pushforward"
    base: Foliation
    grid_map: GridHomeomorphism
    orientation: int = 1

    def __post_init__(self):
        object.__setattr__(self, "orientation", _check_orientation(self.orientation))

    def _trace_base(self, base_seeds, Tb, sign, base_step):
        bp, _, _ = self.base.trace_many(base_seeds, Tb, sign, base_step)
        mapped = self.grid_map.evaluate(bp)
        return mapped, _arclength(mapped), bp

    def trace_many(self, seeds, T, sign=1, step=DEFAULT_STEP) -> Trace:
        seeds = np.asarray(seeds, dtype=float).reshape(-1, 2)
        e = sign * self.orientation
        base_seeds = self.grid_map.solve(seeds)
        base_step = step / self.grid_map.sigma_max

        if T <= _PROBE_LENGTH:
            Tb = T / self.grid_map.sigma_min * 1.05
        else:
            _, arc, _ = self._trace_base(base_seeds, _PROBE_LENGTH, e, base_step)
            stretch = float(np.min(arc[:, -1])) / _PROBE_LENGTH
            Tb = T / max(stretch, 1e-6) * 1.1

        for _ in range(_MAX_RETRACES):
            mapped, arc, bp = self._trace_base(base_seeds, Tb, e, base_step)
            reached = float(np.min(arc[:, -1]))
            if reached >= T:
                break
            Tb *= 1.5 * T / max(reached, 1e-9)
        else:
            logger.warning("Śledzenie obrazu liścia nie osiągnęło długości %.3g (%.3g).", T, reached)
        return mapped, arc, bp

    def tangent(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        base_pts = self.grid_map.solve(pts)
        tb = self.base.tangent(base_pts)
        t = np.einsum("pij,pj->pi", self.grid_map.jacobian(base_pts), tb) * self.orientation
        return t / np.linalg.norm(t, axis=1, keepdims=True)

    def describe(self) -> dict:
        return {
            "variant": self.variant,
            "base": self.base.describe(),
            "map": self.grid_map.describe(),
            "orientation": self.orientation,
        }


@dataclass(frozen=True, eq=False)
class BiFoliation:
    """Para transwersalnych foliacji (α, β)."""

    alpha: Foliation
    beta: Foliation

    def describe(self) -> dict:
        return {"alpha": self.alpha.describe(), "beta": self.beta.describe()}
