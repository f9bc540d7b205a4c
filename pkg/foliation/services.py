# foliation/services.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from circle.lifts import PiecewiseMonotone
from core.exceptions import (
    NonMonotoneLiftError,
    NonSectionError,
    NotInvertibleError,
    TransversalityError,
    ValidationFailure,
)
from core.utils import cross2

from .foliations import DEFAULT_STEP, Foliation
from .geometry import LiftedPolyline, Section
from .grid import GridHomeomorphism, grid_nodes

logger = logging.getLogger(__name__)

DEFAULT_SECTION_SAMPLES = 256
DEFAULT_RETURN_BUDGET = 8.0
_CROSSING_CHUNK = 2.0
INVERSE_CHECK_TOL = 1e-9


# --- śledzenie liści ---------------------------------------------------------

def trace_leaves(F: Foliation, seeds, T: float, sign: int = 1, step: float = DEFAULT_STEP):
    """Wsadowe śledzenie: (punkty (S, V, 2), długość łuku (S, V))."""
    if not math.isfinite(T) or T < 0:
        raise ValidationFailure(f"Długość śledzenia musi być skończona i ≥ 0 (T={T}).")
    points, arclength, _ = F.trace_many(np.asarray(seeds, dtype=float).reshape(-1, 2), T, sign, step)
    return points, arclength


def trace_leaf(F: Foliation, q, T: float, sign: int = 1, step: float = DEFAULT_STEP) -> LiftedPolyline:
    """Łamana od podniesienia q wzdłuż zorientowanego liścia, długość łuku ≥ T."""
    if not math.isfinite(T) or T < 0:
        raise ValidationFailure(f"Długość śledzenia musi być skończona i ≥ 0 (T={T}).")
    seed = np.asarray(q, dtype=float).reshape(1, 2)
    points, arclength, source = F.trace_many(seed, T, sign, step)
    poly = LiftedPolyline(points[0], arclength[0], None if source is None else source[0])
    return poly.truncated(T)


def leaf_tangent(F: Foliation, points) -> np.ndarray:
    return F.tangent(np.asarray(points, dtype=float).reshape(-1, 2))


# --- przecięcia z sekcją ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Crossings:
    points: np.ndarray      # (S, 2) punkt przecięcia w pokryciu
    copies: np.ndarray      # (S,) numer kopii sekcji (przesunięcie całkowite)
    arclength: np.ndarray   # (S,) długość łuku od ziarna
    found: np.ndarray       # (S,) czy przecięcie znaleziono w budżecie


def section_crossings(
    F: Foliation,
    seeds,
    section: Section,
    sign: int = 1,
    budget: float = DEFAULT_RETURN_BUDGET,
    step: float = DEFAULT_STEP,
    chunk: float = _CROSSING_CHUNK,
) -> Crossings:
    """
    Pierwsze przecięcie każdego liścia z podniesioną sekcją {coord = value + n},
    z pominięciem punktu startowego. Śledzenie odcinkami długości `chunk`.
    """
    seeds = np.asarray(seeds, dtype=float).reshape(-1, 2)
    S = seeds.shape[0]
    ni = section.normal_index
    out_pts = np.full((S, 2), np.nan)
    out_copy = np.zeros(S, dtype=np.int64)
    out_arc = np.full(S, np.nan)
    found = np.zeros(S, dtype=bool)

    active = np.arange(S)
    starts = seeds.copy()
    offset = np.zeros(S)
    for _ in range(max(1, math.ceil(budget / chunk))):
        if active.size == 0:
            break
        pts, arc, _ = F.trace_many(starts[active], chunk, sign, step)
        vals = pts[..., ni] - section.value
        a, b = vals[:, :-1], vals[:, 1:]
        up = b > a
        n_up = np.floor(a) + 1.0
        n_dn = np.ceil(a) - 1.0
        hit = np.where(up, b >= n_up, b <= n_dn) & (a != b)
        has = hit.any(axis=1)

        rows = np.flatnonzero(has)
        if rows.size:
            j = np.argmax(hit[rows], axis=1)
            aj, bj = a[rows, j], b[rows, j]
            n = np.where(up[rows, j], n_up[rows, j], n_dn[rows, j])
            w = (n - aj) / (bj - aj)
            p0, p1 = pts[rows, j], pts[rows, j + 1]
            s0, s1 = arc[rows, j], arc[rows, j + 1]
            dst = active[rows]
            out_pts[dst] = p0 + w[:, None] * (p1 - p0)
            out_pts[dst, ni] = section.value + n
            out_copy[dst] = n.astype(np.int64)
            out_arc[dst] = offset[dst] + s0 + w * (s1 - s0)
            found[dst] = True

        rest = np.flatnonzero(~has)
        src = active[rest]
        starts[src] = pts[rest, -1]
        offset[src] += arc[rest, -1]
        active = src[offset[src] < budget]

    return Crossings(out_pts, out_copy, out_arc, found)


def first_return_with_copy(
    F: Foliation,
    section: Section,
    samples: int = DEFAULT_SECTION_SAMPLES,
    budget: float = DEFAULT_RETURN_BUDGET,
    step: float = DEFAULT_STEP,
) -> Tuple[PiecewiseMonotone, int]:
    """Jak first_return; dodatkowo zwraca numer kopii sekcji (±1), do której wracają liście."""
    if samples < 2:
        raise ValidationFailure("Sekcja wymaga co najmniej dwóch próbek.")
    t = np.arange(samples) / samples
    seeds = section.points(t)
    res = section_crossings(F, seeds, section, 1, budget, step)
    if not res.found.all():
        missing = int((~res.found).sum())
        raise NonSectionError(
            f"{missing} z {samples} liści nie wróciło do sekcji {section.axis}={section.value} "
            f"w budżecie {budget}.",
            missing=missing,
        )
    copies = np.unique(res.copies)
    if copies.size != 1:
        raise TransversalityError(
            "Liście wracają do różnych kopii sekcji: sekcja nie jest transwersalna.",
            copies=copies.tolist(),
        )
    ys = res.points[:, section.along_index]
    try:
        lift = PiecewiseMonotone(tuple(t), tuple(ys))
    except NonMonotoneLiftError as exc:
        raise TransversalityError(f"Odwzorowanie pierwszego powrotu nie jest monotoniczne: {exc.message}") from exc
    logger.debug("Pierwszy powrót na %s=%.3g: %d próbek, kopia %d", section.axis, section.value, samples, copies[0])
    return lift, int(copies[0])


def first_return(
    F: Foliation,
    section: Section,
    samples: int = DEFAULT_SECTION_SAMPLES,
    budget: float = DEFAULT_RETURN_BUDGET,
    step: float = DEFAULT_STEP,
) -> PiecewiseMonotone:
    """Odwzorowanie pierwszego powrotu na sekcję jako próbkowane podniesienie."""
    lift, _ = first_return_with_copy(F, section, samples, budget, step)
    return lift


def crossing_heights(
    F: Foliation, seeds, section: Section, count: int, budget: float = DEFAULT_RETURN_BUDGET,
    step: float = DEFAULT_STEP,
) -> np.ndarray:
    """Współrzędne wzdłuż sekcji w `count` kolejnych przecięciach (S, count)."""
    pts = np.asarray(seeds, dtype=float).reshape(-1, 2)
    out = np.empty((pts.shape[0], count))
    for c in range(count):
        res = section_crossings(F, pts, section, 1, budget, step)
        if not res.found.all():
            raise NonSectionError("Liść nie przeciął ponownie sekcji.")
        out[:, c] = res.points[:, section.along_index]
        pts = res.points
    return out


def leaves_keep_order(F: Foliation, heights, section: Section, count: int = 5) -> bool:
    """Liście startujące z różnych punktów tej samej sekcji nie przecinają się."""
    h = np.asarray(heights, dtype=float)
    seeds = section.points(h)
    cross = crossing_heights(F, seeds, section, count)
    order = np.argsort(h)
    return bool(np.all(np.diff(cross[order], axis=0) > 0))


# --- transwersalność ---------------------------------------------------------

def transversality_margin(Fa: Foliation, Fb: Foliation, grid: int = 64) -> float:
    """min po środkach komórek siatki |sin kąta| między stycznymi liści."""
    pts = (grid_nodes(grid) + 0.5 / grid).reshape(-1, 2)
    ta = Fa.tangent(pts)
    tb = Fb.tangent(pts)
    return float(np.min(np.abs(cross2(ta, tb))))


# --- odwzorowania siatkowe ---------------------------------------------------

def grid_invert(psi: GridHomeomorphism) -> GridHomeomorphism:
    """ψ⁻¹ próbkowane w węzłach przez rozwiązanie Φ(x) = węzeł."""
    nodes = psi.nodes()
    x = psi.solve(nodes)
    residual = float(np.max(np.abs(psi.evaluate(x) - nodes)))
    if residual > INVERSE_CHECK_TOL:
        raise NotInvertibleError(
            f"Residuum odwrotności {residual:.2e} przekracza {INVERSE_CHECK_TOL:g}.",
            resolution=psi.resolution,
        )
    Ainv = psi.inverse_matrix
    v = x - nodes @ Ainv.T.astype(float)
    logger.debug("Odwrócono odwzorowanie N=%d, residuum %.2e", psi.resolution, residual)
    return GridHomeomorphism(v, Ainv)


def grid_compose(phi2: GridHomeomorphism, phi1: GridHomeomorphism) -> GridHomeomorphism:
    """
    φ₂∘φ₁ próbkowane w węzłach drobniejszej siatki; części liniowe A₂·A₁.
    Błąd interpolacji O(N⁻²) dla gładkich danych.
    """
    N = max(phi1.resolution, phi2.resolution)
    nodes = grid_nodes(N)
    w = phi2.evaluate(phi1.evaluate(nodes))
    A = phi2.matrix @ phi1.matrix
    return GridHomeomorphism(w - nodes @ A.T.astype(float), A)
