# circle/services.py
"""
Operacje na podniesieniach: iteracja, otoczki liczby obrotu, sprzężenie
z obrotem (przez empiryczną dystrybuantę orbity) i diagnostyka minimalności.
"""
from __future__ import annotations

import logging
import math
from typing import Callable, Mapping, Optional, Tuple

import numpy as np

from core.exceptions import NonMinimalError, ValidationFailure
from core.utils import circular_distance

from .lifts import (
    Arnold,
    CircleLift,
    Composition,
    Inverse,
    MonotoneCircleMap,
    PiecewiseMonotone,
    Rotation,
    RotationEnclosure,
)

logger = logging.getLogger(__name__)


# --- orbita ------------------------------------------------------------------

def _orbit(F: CircleLift, n: int, y0: float = 0.0, record: bool = False):
    """
    n kroków orbity punktu y0 ∈ [0, 1). Część całkowita jest akumulowana
    osobno (int), więc F^n(y0) = m + y bez utraty precyzji przy dużych n.
    Zwraca (m, y, punkty orbity mod 1 albo None).
    """
    value = F.base_value
    shift = F.shift
    floor = math.floor
    m = 0
    y = float(y0)
    rec = np.empty(n, dtype=float) if record else None
    for k in range(n):
        if record:
            rec[k] = y
        z = value(y)
        j = floor(z)
        m += j + shift
        y = z - j
    return m, y, rec


def _enclosure(m: int, y: float, n: int) -> RotationEnclosure:
    q, r = divmod(m, n)
    center = (r + y) / n
    return RotationEnclosure(lo=center - 1.0 / n, hi=center + 1.0 / n, iterations=n, offset=q)


# --- operacje ----------------------------------------------------------------

def iterate_lift(F: CircleLift, n: int, x: float) -> float:
    """F^n(x); dla n < 0 odwracanie bisekcją z tolerancją 1e-14."""
    x = float(x)
    if n >= 0:
        for _ in range(n):
            x = F.value(x)
    else:
        for _ in range(-n):
            x = F.inverse_value(x)
    return x


def rotation_number_enclosure(F: CircleLift, n: int) -> RotationEnclosure:
    """
    Otoczka [(F^n(0)-1)/n, (F^n(0)+1)/n] zredukowana mod 1;
    część całkowita trafia do `offset`, więc τ(F+d) = τ(F)+d dokładnie.
    """
    if n < 1:
        raise ValidationFailure(f"Liczba iteracji musi być ≥ 1 (n={n}).")
    m, y, _ = _orbit(F, n)
    enc = _enclosure(m, y, n)
    logger.debug("Otoczka τ: n=%d offset=%d centrum=%.15g", n, enc.offset, enc.center)
    return enc


def conjugacy_to_rotation(F: CircleLift, N: int, resolution: int) -> Tuple[MonotoneCircleMap, float]:
    """
    h(x) = (1/N)·#{0 ≤ k < N : F^k(0) mod 1 ∈ [0, x)} w węzłach j/resolution,
    ρ = środek otoczki z tej samej orbity.
    Residuum sup|h(f(x)) - h(x) - ρ| (mod 1) liczone jest dokładną dystrybuantą
    empiryczną i zapisywane w h.residual.
    """
    if resolution < 2:
        raise ValidationFailure("Rozdzielczość sprzężenia musi być ≥ 2.")
    if N < resolution * resolution:
        raise ValidationFailure(
            f"Długość orbity N={N} mniejsza niż resolution²={resolution * resolution}."
        )
    m, y, orbit = _orbit(F, N, record=True)
    enclosure = _enclosure(m, y, N)
    rho = enclosure.center

    points = np.sort(orbit)
    knots = np.arange(resolution + 1) / resolution
    counts = np.searchsorted(points, knots, side="left")
    if np.any(np.diff(counts) == 0):
        empty = int(np.sum(np.diff(counts) == 0))
        raise NonMinimalError(
            f"Miara empiryczna znika na {empty} z {resolution} przedziałów.",
            empty_intervals=empty,
        )
    values = counts / N

    # residuum sprzężenia na węzłach
    fx = F(knots[:-1])
    k = np.floor(fx)
    h_fx = k + np.searchsorted(points, fx - k, side="left") / N
    residual = float(np.max(circular_distance(h_fx - values[:-1] - rho)))

    h = MonotoneCircleMap(values=values, rotation=enclosure, residual=residual)
    logger.info(
        "Sprzężenie z obrotem: N=%d, res=%d, ρ=%.12f, residuum=%.3e", N, resolution, rho, residual
    )
    return h, rho


def conjugacy_residual(F: CircleLift, h: MonotoneCircleMap, rho: float) -> float:
    """sup po węzłach h odległości okręgowej |h(F(x)) - h(x) - ρ|, h interpolowane."""
    knots = h.knots[:-1]
    return float(np.max(circular_distance(h(F(knots)) - h(knots) - rho)))


def conjugate_lift(F: CircleLift, g: CircleLift) -> CircleLift:
    """g∘F∘g⁻¹."""
    return Composition((Inverse(g), F, g))


def minimality_density(F: CircleLift, x0: float, N: int, eps: float) -> Tuple[float, bool]:
    """Największa luka okręgowa między N pierwszymi punktami orbity x0."""
    if N < 2:
        raise ValidationFailure("Diagnostyka minimalności wymaga N ≥ 2.")
    y0 = float(x0) - math.floor(x0)
    _, _, orbit = _orbit(F, N, y0=y0, record=True)
    pts = np.sort(orbit)
    gaps = np.diff(pts)
    wrap = pts[0] + 1.0 - pts[-1]
    max_gap = float(max(wrap, gaps.max() if gaps.size else 0.0))
    return max_gap, bool(max_gap <= eps)


# --- budowa z opisu ----------------------------------------------------------

def circle_lift_from_spec(
    spec: Mapping, resolve: Optional[Callable[[str], CircleLift]] = None
) -> CircleLift:
    """
    Buduje podniesienie z opisu konfiguracyjnego
    (family: rotation | arnold | samples | composition | inverse).
    """
    family = spec.get("family")
    shift = int(spec.get("shift", 0))
    if family == "rotation":
        return Rotation(theta=float(spec["theta"]), shift=shift)
    if family == "arnold":
        return Arnold(theta=float(spec["theta"]), K=float(spec["K"]), shift=shift)
    if family == "samples":
        return PiecewiseMonotone(tuple(spec["knots_x"]), tuple(spec["knots_y"]), shift=shift)
    if family in ("composition", "inverse"):
        if resolve is None:
            raise ValidationFailure(f"Rodzina {family} wymaga rozwiązywania referencji.")
        if family == "composition":
            return Composition(tuple(resolve(name) for name in spec["parts"]), shift=shift)
        return Inverse(resolve(spec["base"]), shift=shift)
    raise ValidationFailure(f"Nieznana rodzina odwzorowań okręgu: {family!r}.")
