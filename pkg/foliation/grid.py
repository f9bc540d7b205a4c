# foliation/grid.py
"""
Homeomorfizmy torusa zadane na siatce N×N.

Podniesienie: Φ(x) = A·x + u(x), gdzie A ∈ GL₂(Z) (|det| = 1), a u jest
Z²-okresowe, próbkowane w węzłach (i/N, j/N) i interpolowane dwuliniowo.
Tablica `displacement` ma kształt (N, N, 2) i indeks [i, j] ↔ (x, y).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from core.exceptions import NotInvertibleError, ValidationFailure
from core.utils import frac

from .geometry import HalfLine

logger = logging.getLogger(__name__)

IDENTITY = np.eye(2, dtype=np.int64)
SOLVE_TOL = 1e-12
SOLVE_FAIL_TOL = 1e-10
_SOLVE_MAX_ITER = 60
_SOLVE_HALVINGS = 12


def grid_nodes(N: int) -> np.ndarray:
    t = np.arange(N) / N
    xx, yy = np.meshgrid(t, t, indexing="ij")
    return np.stack([xx, yy], axis=-1)


@dataclass(frozen=True, eq=False)
class GridHomeomorphism:
    displacement: np.ndarray
    matrix: np.ndarray = field(default_factory=lambda: IDENTITY.copy())
    # wyliczane przy konstrukcji
    _edges: tuple = field(init=False, repr=False)
    _sigma: tuple = field(init=False, repr=False)

    def __post_init__(self):
        u = np.ascontiguousarray(self.displacement, dtype=float)
        if u.ndim != 3 or u.shape[0] != u.shape[1] or u.shape[2] != 2 or u.shape[0] < 2:
            raise ValidationFailure(f"Oczekiwano próbek (N, N, 2), otrzymano {u.shape}.")
        if not np.all(np.isfinite(u)):
            raise ValidationFailure("Przemieszczenia muszą być skończone.")
        A_raw = np.asarray(self.matrix)
        A = np.rint(A_raw).astype(np.int64)
        if A.shape != (2, 2) or np.any(A != A_raw):
            raise ValidationFailure("Część liniowa musi być całkowitą macierzą 2×2.")
        det = int(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])
        if abs(det) != 1:
            raise ValidationFailure(f"Część liniowa musi mieć |det| = 1 (det = {det}).")
        object.__setattr__(self, "displacement", u)
        object.__setattr__(self, "matrix", A)

        N = u.shape[0]
        u10 = np.roll(u, -1, axis=0)
        u01 = np.roll(u, -1, axis=1)
        u11 = np.roll(u10, -1, axis=1)
        # pochodne cząstkowe u na krawędziach komórki (bottom/top, left/right)
        ex0, ex1 = N * (u10 - u), N * (u11 - u01)
        ey0, ey1 = N * (u01 - u), N * (u11 - u10)
        object.__setattr__(self, "_edges", (ex0, ex1, ey0, ey1))

        # det jakobianu jest dwuliniowy w (s, t) na komórce: wystarczą narożniki
        Af = A.astype(float)
        corners = []
        for ex in (ex0, ex1):
            for ey in (ey0, ey1):
                J = np.empty(ex.shape[:2] + (2, 2))
                J[..., :, 0] = Af[:, 0] + ex
                J[..., :, 1] = Af[:, 1] + ey
                corners.append(J)
        Js = np.stack(corners).reshape(-1, 2, 2)
        dets = Js[:, 0, 0] * Js[:, 1, 1] - Js[:, 0, 1] * Js[:, 1, 0]
        if not (np.all(dets * det > 0)):
            bad = int(np.sum(dets * det <= 0))
            raise NotInvertibleError(
                f"Jakobian interpolantu zmienia znak lub znika ({bad} narożników komórek).",
                resolution=N,
            )
        sv = np.linalg.svd(Js, compute_uv=False)
        object.__setattr__(self, "_sigma", (float(sv[:, 1].min()), float(sv[:, 0].max())))

    # --- właściwości ---

    @property
    def resolution(self) -> int:
        return self.displacement.shape[0]

    @property
    def orientation(self) -> int:
        A = self.matrix
        return int(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])

    @property
    def sigma_min(self) -> float:
        return self._sigma[0]

    @property
    def sigma_max(self) -> float:
        return self._sigma[1]

    @property
    def inverse_matrix(self) -> np.ndarray:
        A = self.matrix
        adj = np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]], dtype=np.int64)
        return self.orientation * adj

    def nodes(self) -> np.ndarray:
        return grid_nodes(self.resolution)

    def max_displacement(self) -> float:
        return float(np.max(np.abs(self.displacement)))

    # --- ewaluacja ---

    def periodic_part(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, 2)
        coords = frac(flat).T * self.resolution
        out = np.empty_like(flat)
        for k in range(2):
            out[:, k] = ndimage.map_coordinates(
                self.displacement[..., k], coords, order=1, mode="grid-wrap", prefilter=False
            )
        return out.reshape(pts.shape)

    def evaluate(self, points) -> np.ndarray:
        """Φ(x) = A·x + u(x) w pokryciu uniwersalnym."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.matrix.T.astype(float) + self.periodic_part(pts)

    __call__ = evaluate

    def jacobian(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        N = self.resolution
        scaled = frac(pts) * N
        cell = np.floor(scaled)
        s = (scaled[:, 0] - cell[:, 0])[:, None]
        t = (scaled[:, 1] - cell[:, 1])[:, None]
        i = cell[:, 0].astype(np.int64) % N
        j = cell[:, 1].astype(np.int64) % N
        ex0, ex1, ey0, ey1 = self._edges
        dx = (1.0 - t) * ex0[i, j] + t * ex1[i, j]
        dy = (1.0 - s) * ey0[i, j] + s * ey1[i, j]
        Af = self.matrix.astype(float)
        J = np.empty((pts.shape[0], 2, 2))
        J[:, :, 0] = Af[:, 0] + dx
        J[:, :, 1] = Af[:, 1] + dy
        return J

    def solve(self, targets, tol: float = SOLVE_TOL) -> np.ndarray:
        """
        Punkty x z Φ(x) = targets (tłumiona metoda Newtona na interpolancie).
        Cele sprowadzane są najpierw o całkowity wektor, by residuum było
        mierzone przy małych współrzędnych.
        """
        tg = np.asarray(targets, dtype=float)
        y = tg.reshape(-1, 2)
        A = self.matrix.astype(float)
        Ainv = self.inverse_matrix.astype(float)
        k = np.floor(y @ Ainv.T)
        y_red = y - k @ A.T

        x0 = y_red @ Ainv.T
        x = (y_red - self.periodic_part(x0)) @ Ainv.T
        r = self.evaluate(x) - y_red
        nr = np.max(np.abs(r), axis=1)
        done = nr <= tol

        for _ in range(_SOLVE_MAX_ITER):
            idx = np.flatnonzero(~done)
            if idx.size == 0:
                break
            J = self.jacobian(x[idx])
            dx = np.linalg.solve(J, r[idx][..., None])[..., 0]
            xa, ra, na = x[idx], r[idx], nr[idx]
            lam = np.ones(idx.size)
            accepted = np.zeros(idx.size, dtype=bool)
            for _ in range(_SOLVE_HALVINGS):
                trial = xa - lam[:, None] * dx
                rt = self.evaluate(trial) - y_red[idx]
                nt = np.max(np.abs(rt), axis=1)
                ok = (nt < na) & ~accepted
                xa[ok], ra[ok], na[ok] = trial[ok], rt[ok], nt[ok]
                accepted |= ok
                if accepted.all():
                    break
                lam = np.where(accepted, lam, 0.5 * lam)
            x[idx], r[idx], nr[idx] = xa, ra, na
            # punkty bez postępu nie poprawią się dalej
            done[idx] = (na <= tol) | ~accepted

        failed = nr > SOLVE_FAIL_TOL
        if np.any(failed):
            raise NotInvertibleError(
                f"Newton nie zbiegł dla {int(failed.sum())} punktów (max residuum {nr.max():.2e}).",
                resolution=self.resolution,
            )
        return (x + k).reshape(tg.shape)

    def describe(self) -> dict:
        return {
            "resolution": self.resolution,
            "matrix": self.matrix.tolist(),
            "max_displacement": self.max_displacement(),
            "sigma_min": self.sigma_min,
            "sigma_max": self.sigma_max,
        }


# ===== Fabryki =====

def from_function(
    N: int, fn: Callable[[np.ndarray], np.ndarray], matrix: Optional[np.ndarray] = None
) -> GridHomeomorphism:
    """Próbkuje podniesienie fn (zgodne z A) w węzłach siatki."""
    A = IDENTITY if matrix is None else np.asarray(matrix, dtype=np.int64)
    nodes = grid_nodes(N)
    u = np.asarray(fn(nodes), dtype=float) - nodes @ A.T.astype(float)
    return GridHomeomorphism(u, A)


def identity_map(N: int) -> GridHomeomorphism:
    return GridHomeomorphism(np.zeros((N, N, 2)))


def translation_map(N: int, vector) -> GridHomeomorphism:
    c = np.asarray(vector, dtype=float).reshape(2)
    return GridHomeomorphism(np.broadcast_to(c, (N, N, 2)).copy())


def shear_map(N: int, amplitude: float) -> GridHomeomorphism:
    """u = a/√2·(sin 2π(x+y), sin 2π(x−y)); sup|u| = a, początek ustalony."""
    a = amplitude / math.sqrt(2.0)

    def fn(p):
        x, y = p[..., 0], p[..., 1]
        return np.stack([x + a * np.sin(2 * np.pi * (x + y)), y + a * np.sin(2 * np.pi * (x - y))], -1)

    return from_function(N, fn)


def horizontal_shear_map(N: int, amplitude: float) -> GridHomeomorphism:
    """(x + a·sin 2πy, y)."""

    def fn(p):
        x, y = p[..., 0], p[..., 1]
        return np.stack([x + amplitude * np.sin(2 * np.pi * y), y], -1)

    return from_function(N, fn)


def slide_map(N: int, direction: HalfLine, amplitude: float) -> GridHomeomorphism:
    """x + a·sin 2π(x+y)·d: przesuwa punkty wzdłuż prostych kierunku d."""
    d = direction.vector

    def fn(p):
        w = amplitude * np.sin(2 * np.pi * (p[..., 0] + p[..., 1]))
        return p + w[..., None] * d

    return from_function(N, fn)


def twist_profile(y):
    """τ: gładko od 0 do 1 na (1/4, 3/4), τ(y+1) = τ(y) + 1."""
    y = np.asarray(y, dtype=float)
    k = np.floor(y)
    t = y - k
    rise = 0.5 * (1.0 - np.cos(np.pi * np.clip((t - 0.25) / 0.5, 0.0, 1.0)))
    return k + rise


def dehn_twist_map(N: int) -> GridHomeomorphism:
    """Skręt Dehna (x, y) ↦ (x + τ(y), y) wokół pierścienia 1/4 < y < 3/4; A = [[1,1],[0,1]]."""
    A = np.array([[1, 1], [0, 1]], dtype=np.int64)

    def fn(p):
        return np.stack([p[..., 0] + twist_profile(p[..., 1]), p[..., 1]], -1)

    return from_function(N, fn, A)
