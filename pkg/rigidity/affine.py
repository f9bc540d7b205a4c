# rigidity/affine.py
"""
Afiniczne automorfizmy liniowej pary foliacji o nachyleniach δ ≠ δ′.

F = (F₁, F₂) zachowuje obie rodziny prostych:
    F₂ − δ·F₁  = a (y − δx)  + b
    F₂ − δ′·F₁ = a′(y − δ′x) + b′
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import DegeneratePairError, ValidationFailure

# δ − δ′ poniżej tej wartości: para zdegenerowana
DEGENERACY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class AffineBiFolAutomorphism:
    delta: float
    delta_prime: float
    a: float = 1.0
    a_prime: float = 1.0
    b: float = 0.0
    b_prime: float = 0.0
    matrix: np.ndarray = field(init=False, repr=False)
    translation: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        values = (self.delta, self.delta_prime, self.a, self.a_prime, self.b, self.b_prime)
        if not all(math.isfinite(v) for v in values):
            raise ValidationFailure("Parametry automorfizmu muszą być skończone.")
        dd = self.delta - self.delta_prime
        if abs(dd) < DEGENERACY_TOL:
            raise DegeneratePairError(f"Nachylenia δ = δ′ = {self.delta}: para zdegenerowana.")
        if self.a == 0.0 or self.a_prime == 0.0:
            raise ValidationFailure("Współczynniki a, a′ muszą być niezerowe.")
        d, dp, a, ap = self.delta, self.delta_prime, self.a, self.a_prime
        M = np.array([[a * d - ap * dp, ap - a], [d * dp * (a - ap), d * ap - dp * a]]) / dd
        t = np.array([self.b_prime - self.b, d * self.b_prime - dp * self.b]) / dd
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "translation", t)

    # wiersze (współczynnik x, współczynnik y, wyraz wolny)
    @property
    def f1_row(self) -> np.ndarray:
        return np.array([self.matrix[0, 0], self.matrix[0, 1], self.translation[0]])

    @property
    def f2_row(self) -> np.ndarray:
        return np.array([self.matrix[1, 0], self.matrix[1, 1], self.translation[1]])

    def evaluate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.matrix.T + self.translation

    __call__ = evaluate

    def compose(self, other: "AffineBiFolAutomorphism") -> "AffineBiFolAutomorphism":
        """self∘other dla tej samej pary nachyleń."""
        if (self.delta, self.delta_prime) != (other.delta, other.delta_prime):
            raise ValidationFailure("Złożenie wymaga tych samych nachyleń δ, δ′.")
        return AffineBiFolAutomorphism(
            self.delta,
            self.delta_prime,
            self.a * other.a,
            self.a_prime * other.a_prime,
            self.a * other.b + self.b,
            self.a_prime * other.b_prime + self.b_prime,
        )

    def coefficient_residuals(self, points) -> tuple:
        """Residua obu tożsamości definiujących w podanych punktach."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        x, y = pts[:, 0], pts[:, 1]
        F = self.evaluate(pts)
        r1 = F[:, 1] - self.delta * F[:, 0] - (self.a * (y - self.delta * x) + self.b)
        r2 = F[:, 1] - self.delta_prime * F[:, 0] - (self.a_prime * (y - self.delta_prime * x) + self.b_prime)
        return float(np.max(np.abs(r1))), float(np.max(np.abs(r2)))

    def eigen_residuals(self) -> tuple:
        """
        (1, δ) jest wektorem własnym M z wartością a′, a (1, δ′) z wartością a:
        prosta kierunku (1, δ) skaluje się jak współrzędna y − δ′x.
        """
        v = np.array([1.0, self.delta])
        w = np.array([1.0, self.delta_prime])
        r1 = float(np.max(np.abs(self.matrix @ v - self.a_prime * v)))
        r2 = float(np.max(np.abs(self.matrix @ w - self.a * w)))
        return r1, r2

    def as_dict(self) -> dict:
        return {
            "delta": self.delta,
            "delta_prime": self.delta_prime,
            "a": self.a,
            "a_prime": self.a_prime,
            "b": self.b,
            "b_prime": self.b_prime,
            "matrix": self.matrix.tolist(),
            "translation": self.translation.tolist(),
        }


@dataclass(frozen=True)
class RigidityVerdict:
    is_identity: bool
    m_is_identity: bool
    translation_vanishes: bool
    descends_to_torus: bool
    # M = id przy ustalonym początku wymusza (a, a′) = (1, 1); None gdy nie sprawdzano
    forced_unit_eigenvalues: bool | None
    deviation: float
    tolerance: float

    def as_dict(self) -> dict:
        return {
            "is_identity": self.is_identity,
            "m_is_identity": self.m_is_identity,
            "translation_vanishes": self.translation_vanishes,
            "descends_to_torus": self.descends_to_torus,
            "forced_unit_eigenvalues": self.forced_unit_eigenvalues,
            "deviation": self.deviation,
            "tolerance": self.tolerance,
        }
