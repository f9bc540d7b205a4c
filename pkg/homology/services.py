# homology/services.py
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from circle.services import rotation_number_enclosure
from core.exceptions import InconclusiveCycleError, ValidationFailure
from core.utils import parallel_map
from foliation.foliations import DEFAULT_STEP, Foliation, Pushforward
from foliation.geometry import HalfLine, LiftedPolyline, Section
from foliation.grid import GridHomeomorphism
from foliation.services import DEFAULT_SECTION_SAMPLES, first_return, trace_leaf

from .cycles import CLOSING_BOUND, ContinuedFraction, CycleEstimate, IntMatrix

logger = logging.getLogger(__name__)

MIN_CYCLE_LENGTH = 10.0
_NEAR_INTEGER = 1e-12


# --- cykle asymptotyczne -----------------------------------------------------

def asymptotic_cycle(F: Foliation, q, T_max: float, step: float = DEFAULT_STEP) -> CycleEstimate:
    """
    Kierunek przemieszczenia podniesionego łuku liścia od q po długości T_max.
    Łuk domyka odcinek długości ≤ D = √2/2, stąd kąt błędu ≤ asin(D/|v|).
    """
    if not T_max > MIN_CYCLE_LENGTH:
        raise InconclusiveCycleError(
            f"Budżet T_max={T_max} ≤ {MIN_CYCLE_LENGTH:g}: ograniczenie błędu byłoby puste.",
            T_max=T_max,
        )
    poly = trace_leaf(F, q, T_max, step=step)
    return estimate_from_polyline(poly, T_max)


def estimate_from_polyline(poly: LiftedPolyline, T_max: float) -> CycleEstimate:
    """Oszacowanie cyklu z gotowego łuku liścia (długość łuku ≥ T_max)."""
    v = poly.displacement
    q = poly.start
    norm = float(np.hypot(v[0], v[1]))
    if norm < 2.0 * CLOSING_BOUND:
        raise InconclusiveCycleError(
            f"Przemieszczenie |v|={norm:.3g} < 2D po długości {T_max}: liść nie ucieka liniowo.",
            displacement=norm,
        )
    intermediate = {}
    for label, frac_ in (("quarter", 0.25), ("half", 0.5)):
        w = poly.vertex_at(frac_ * T_max) - poly.start
        if np.hypot(w[0], w[1]) > 0.0:
            intermediate[label] = HalfLine.from_vector(w)
    est = CycleEstimate(
        direction=HalfLine.from_vector(v),
        length=float(T_max),
        bound=math.asin(CLOSING_BOUND / norm),
        displacement=(float(v[0]), float(v[1])),
        basepoint=(float(q[0]), float(q[1])),
        intermediate=intermediate,
    )
    logger.debug("Cykl asymptotyczny z %s: kąt %.12f ± %.2e", est.basepoint, est.direction.angle, est.bound)
    return est


def cycle_basepoint_spread(F: Foliation, points: Sequence, T_max: float, threads: int = 1) -> dict:
    """Oszacowania z kilku punktów bazowych i ich wzajemna zgodność."""
    estimates = parallel_map(lambda p: asymptotic_cycle(F, p, T_max), [tuple(p) for p in points], threads)
    worst = 0.0
    agree = True
    for e1, e2 in itertools.combinations(estimates, 2):
        worst = max(worst, e1.angle_to(e2))
        agree = agree and e1.agrees_with(e2)
    return {
        "estimates": [e.as_dict() for e in estimates],
        "max_pairwise_angle": worst,
        "all_agree": agree,
    }


# --- działanie na H₁ ---------------------------------------------------------

def induced_h1(f: GridHomeomorphism) -> IntMatrix:
    """Część całkowita podniesienia: Φ(x + e_k) − Φ(x) = A·e_k."""
    return IntMatrix.from_array(f.matrix)


def act_on_halfline(A: IntMatrix, l: HalfLine) -> HalfLine:
    return HalfLine.from_vector(A.as_array().astype(float) @ l.vector)


def act_on_pair(A: IntMatrix, pair: Tuple[HalfLine, HalfLine]) -> Tuple[HalfLine, HalfLine]:
    """Diagonalne działanie na parach półprostych."""
    return act_on_halfline(A, pair[0]), act_on_halfline(A, pair[1])


def naturality_check(F: Foliation, f: GridHomeomorphism, q, T_max: float) -> dict:
    """
    Porównuje cykl obrazu foliacji z obrazem cyklu przez induced_h1(f).
    Kąt przeniesiony przez A rośnie co najwyżej o współczynnik uwarunkowania.
    """
    base = asymptotic_cycle(F, q, T_max)
    pushed = asymptotic_cycle(Pushforward(F, f), f.evaluate(np.asarray(q, dtype=float)), T_max)
    A = induced_h1(f)
    predicted = act_on_halfline(A, base.direction)
    sv = np.linalg.svd(A.as_array().astype(float), compute_uv=False)
    slack = float(sv[0] / sv[1]) * base.bound
    angle = pushed.direction.angle_to(predicted)
    return {
        "matrix": A.as_list(),
        "base": base.as_dict(),
        "pushed": pushed.as_dict(),
        "predicted": predicted.as_dict(),
        "angle": angle,
        "agrees": angle <= pushed.bound + slack,
    }


# --- ułamki łańcuchowe -------------------------------------------------------

def continued_fraction(x: float, depth: int) -> ContinuedFraction:
    """Współczynniki [a₁, a₂, …] rozwinięcia x ∈ (0, 1)."""
    if depth < 1:
        raise ValidationFailure(f"Głębokość rozwinięcia musi być ≥ 1 (depth={depth}).")
    if not 0.0 < x < 1.0:
        raise ValidationFailure(f"Rozwijana liczba musi leżeć w (0, 1) (x={x}).")
    coeffs: List[int] = []
    r = float(x)
    for _ in range(depth):
        inv = 1.0 / r
        a = math.floor(inv)
        rest = inv - a
        if rest < _NEAR_INTEGER:
            coeffs.append(a)
            return ContinuedFraction(tuple(coeffs), True)
        if 1.0 - rest < _NEAR_INTEGER:
            coeffs.append(a + 1)
            return ContinuedFraction(tuple(coeffs), True)
        coeffs.append(a)
        r = rest
    return ContinuedFraction(tuple(coeffs), False)


def slope_expansion(direction: HalfLine, depth: int = 12) -> ContinuedFraction:
    """Rozwinięcie stosunku min(|c|,|s|)/max(|c|,|s|); diagnostyka wymierności kierunku."""
    lo, hi = sorted((abs(direction.c), abs(direction.s)))
    ratio = lo / hi
    if ratio < _NEAR_INTEGER:
        return ContinuedFraction((), True)
    if ratio > 1.0 - _NEAR_INTEGER:
        return ContinuedFraction((1,), True)
    return continued_fraction(ratio, depth)


# --- lemat o sekcjach --------------------------------------------------------

@dataclass(frozen=True)
class LemmaCheck:
    rotation_overlap: bool
    cycles_agree: bool
    enclosures: tuple
    cycles: tuple

    @property
    def consistent(self) -> bool:
        # równe liczby obrotu na wspólnej sekcji wymuszają zgodne cykle
        return self.cycles_agree or not self.rotation_overlap

    def as_dict(self) -> dict:
        return {
            "rotation_overlap": self.rotation_overlap,
            "cycles_agree": self.cycles_agree,
            "consistent": self.consistent,
            "enclosures": [e.as_dict() for e in self.enclosures],
            "cycles": [c.as_dict() for c in self.cycles],
        }


def lemma_check(
    F1: Foliation,
    F2: Foliation,
    section: Section,
    n: int,
    T_max: float,
    samples: int = DEFAULT_SECTION_SAMPLES,
) -> LemmaCheck:
    """Otoczki liczby obrotu odwzorowań powrotu vs zgodność cykli asymptotycznych."""
    encs = tuple(rotation_number_enclosure(first_return(F, section, samples), n) for F in (F1, F2))
    q = section.points(np.array(0.0))
    cycles = tuple(asymptotic_cycle(F, q, T_max) for F in (F1, F2))
    result = LemmaCheck(
        rotation_overlap=encs[0].overlaps(encs[1], circular=False),
        cycles_agree=cycles[0].agrees_with(cycles[1]),
        enclosures=encs,
        cycles=cycles,
    )
    logger.info(
        "Lemat o sekcji: nakładanie otoczek=%s, zgodność cykli=%s", result.rotation_overlap, result.cycles_agree
    )
    return result
