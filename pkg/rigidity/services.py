# rigidity/services.py
from __future__ import annotations

import logging
from typing import List, Sequence

import numpy as np

from core.exceptions import DegeneratePairError, ValidationFailure
from homology.cycles import IntMatrix

from .affine import DEGENERACY_TOL, AffineBiFolAutomorphism, RigidityVerdict

logger = logging.getLogger(__name__)

RIGIDITY_TOL = 1e-12
EIGEN_TOL = 1e-9
MAX_ENTRY_BOUND = 12


def affine_from_slope_data(delta, delta_prime, a, a_prime, b, b_prime) -> AffineBiFolAutomorphism:
    return AffineBiFolAutomorphism(float(delta), float(delta_prime), float(a), float(a_prime), float(b), float(b_prime))


def rigidity_identity_check(
    auto: AffineBiFolAutomorphism, require_origin_fixed: bool = True, tol: float = RIGIDITY_TOL
) -> RigidityVerdict:
    """F = id ⇔ M = I i zerowa translacja."""
    M = auto.matrix
    deviation = float(np.max(np.abs(M - np.eye(2))))
    m_identity = deviation <= tol
    translation_zero = float(np.max(np.abs(auto.translation))) <= tol
    rounded = np.rint(M)
    integral = bool(np.max(np.abs(M - rounded)) <= tol)
    descends = integral and abs(round(float(np.linalg.det(rounded)))) == 1

    forced = None
    if require_origin_fixed and m_identity:
        # M = I ma wartości własne a′, a na (1, δ), (1, δ′): obie muszą być 1
        forced = abs(auto.a - 1.0) <= tol and abs(auto.a_prime - 1.0) <= tol
    verdict = RigidityVerdict(
        is_identity=m_identity and translation_zero,
        m_is_identity=m_identity,
        translation_vanishes=translation_zero,
        descends_to_torus=descends,
        forced_unit_eigenvalues=forced,
        deviation=deviation,
        tolerance=tol,
    )
    logger.debug("Sztywność: %s", verdict)
    return verdict


def rigidity_sweep(
    delta: float,
    delta_prime: float,
    a_values: Sequence[float],
    a_prime_values: Sequence[float],
    b: float = 0.0,
    b_prime: float = 0.0,
) -> dict:
    """Werdykt identyczności na siatce (a, a′)."""
    hits = []
    total = 0
    for a in a_values:
        for ap in a_prime_values:
            total += 1
            verdict = rigidity_identity_check(affine_from_slope_data(delta, delta_prime, a, ap, b, b_prime))
            if verdict.is_identity:
                hits.append([float(a), float(ap)])
    return {"delta": delta, "delta_prime": delta_prime, "points": total, "identity_at": hits}


def find_affine_symmetries(delta: float, delta_prime: float, entry_bound: int) -> List[IntMatrix]:
    """Macierze z GL₂(Z), |wpisy| ≤ bound, mające (1, δ) i (1, δ′) za kierunki własne."""
    if abs(delta - delta_prime) < DEGENERACY_TOL:
        raise DegeneratePairError("Nachylenia δ i δ′ muszą być różne.")
    if not 1 <= entry_bound <= MAX_ENTRY_BOUND:
        raise ValidationFailure(f"Ograniczenie wpisów musi leżeć w [1, {MAX_ENTRY_BOUND}].")
    r = np.arange(-entry_bound, entry_bound + 1, dtype=np.int64)
    a, b, c, d = (m.ravel() for m in np.meshgrid(r, r, r, r, indexing="ij"))
    unimodular = np.abs(a * d - b * c) == 1
    a, b, c, d = a[unimodular], b[unimodular], c[unimodular], d[unimodular]

    keep = np.ones(a.size, dtype=bool)
    for s in (delta, delta_prime):
        v = np.array([1.0, s]) / np.hypot(1.0, s)
        ax = a * v[0] + b * v[1]
        ay = c * v[0] + d * v[1]
        # |sin| kąta między A·v a v
        keep &= np.abs(ax * v[1] - ay * v[0]) <= EIGEN_TOL * np.hypot(ax, ay)
    found = [IntMatrix(int(w), int(x), int(y), int(z)) for w, x, y, z in zip(a[keep], b[keep], c[keep], d[keep])]
    logger.info("Symetrie afiniczne dla δ=%.12g, δ′=%.12g: %d macierzy", delta, delta_prime, len(found))
    return found
