# straighten/services.py
"""
Prostowanie pary transwersalnych, minimalnych foliacji T².

Etap β: foliacja β sprowadzana do liniowej (sprzężenie odwzorowania
pierwszego powrotu z obrotem). Etap α: przy liniowej β odwzorowanie φ
przesuwa punkty wzdłuż β na prostą p + R·dα0; poza śledzonym liściem φ
rozszerzane jest z najbliższej próbki z poprawką pierwszego rzędu.
"""
from __future__ import annotations

import logging
import time
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from circle.lifts import CircleLift, MonotoneCircleMap, bisect_monotone
from circle.services import conjugacy_to_rotation, minimality_density
from core.exceptions import (
    CoverageError,
    NonMinimalError,
    NonSectionError,
    NotHandledError,
    TorusError,
    TransversalityError,
    ValidationFailure,
)
from core.utils import chunks, cross2, frac, minimal_image, parallel_map, unit
from foliation.foliations import BiFoliation, Foliation, Linear, Pushforward, SuspensionV
from foliation.geometry import HalfLine, Section
from foliation.grid import GridHomeomorphism, grid_nodes
from foliation.services import (
    first_return_with_copy,
    grid_compose,
    section_crossings,
    trace_leaf,
    transversality_margin,
)
from homology.services import estimate_from_polyline, induced_h1

from .params import StraighteningParams, StraighteningResult

logger = logging.getLogger(__name__)

PARALLEL_TOL = 1e-12
BASEPOINT_TOL = 1e-9
_HORIZONTAL = Linear(HalfLine(1.0, 0.0))
_VERTICAL = Linear(HalfLine(0.0, 1.0))


# ===== Rzut ukośny =====

def oblique_projection(p, d_alpha0: HalfLine, d_beta: HalfLine, x) -> np.ndarray:
    """Punkt prostej p + R·dα0 osiągalny z x wzdłuż kierunku dβ."""
    denom = d_alpha0.c * d_beta.s - d_alpha0.s * d_beta.c
    if abs(denom) < PARALLEL_TOL:
        raise TransversalityError("Kierunki dα0 i dβ są równoległe.", denominator=denom)
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    a = cross2(x - p, d_beta.vector) / denom
    return p + np.multiply.outer(a, d_alpha0.vector)


def refine_direction(points: np.ndarray, estimate) -> Tuple[HalfLine, bool]:
    """
    Kierunek główny (najmniejsze kwadraty, wolny wyraz) próbek liścia.
    Przyjmowany tylko w granicy błędu oszacowania cyklu; inaczej zwraca oszacowanie.
    """
    centered = points - points.mean(axis=0)
    _, vecs = np.linalg.eigh(centered.T @ centered)
    d = vecs[:, -1]
    if d @ estimate.direction.vector < 0:
        d = -d
    refined = HalfLine.from_vector(d)
    if refined.angle_to(estimate.direction) <= estimate.bound:
        return refined, True
    logger.warning(
        "Kierunek z najmniejszych kwadratów poza granicą oszacowania (%.2e > %.2e).",
        refined.angle_to(estimate.direction),
        estimate.bound,
    )
    return estimate.direction, False


# ===== Etap α: liniowa β =====

def _trace_base_leaf(F: Foliation, params: StraighteningParams):
    """Liść przez p w zadanych orientacjach: próbki, styczne, oszacowanie cyklu."""
    points, tangents = [], []
    estimate = None
    for o in params.leaf_orientations:
        poly = trace_leaf(F, params.basepoint, params.budget, sign=o, step=params.trace_step)
        points.append(poly.points)
        tangents.append(unit(np.gradient(poly.points, axis=0)))
        if estimate is None:
            est = estimate_from_polyline(poly, params.budget)
            estimate = est if o > 0 else replace(est, direction=est.direction.reversed())
    return np.concatenate(points), np.concatenate(tangents), estimate


def simultaneous_straighten(biFol: BiFoliation, params: StraighteningParams) -> StraighteningResult:
    """φ z φ_*α = Linear(dα0) i φ_*β = β dla β = Linear(dβ); φ(p) = p."""
    alpha, beta = biFol.alpha, biFol.beta
    if not isinstance(beta, Linear):
        raise ValidationFailure("Etap α wymaga liniowej foliacji β.")
    started = time.monotonic()
    margin = transversality_margin(alpha, beta)
    if margin < params.transversality_threshold:
        raise TransversalityError(
            f"Margines transwersalności {margin:.3g} poniżej progu {params.transversality_threshold:g}.",
            margin=margin,
        )
    flags: List[str] = []
    if not params.coverage_guard_ok():
        flags.append("epsilon_below_coverage_guard")

    samples, tangents, estimate = _trace_base_leaf(alpha, params)
    d_alpha0, accepted = refine_direction(samples, estimate)
    if not accepted:
        flags.append("direction_refinement_rejected")
    d_beta = beta.oriented_direction
    p = np.asarray(params.basepoint)
    projected = oblique_projection(p, d_alpha0, d_beta, samples)
    logger.info("Etap α: %d próbek liścia, dα0 kąt %.12f", samples.shape[0], d_alpha0.angle)

    N = params.resolution
    nodes = grid_nodes(N).reshape(-1, 2)
    tree = cKDTree(frac(samples), boxsize=1.0)
    dist, idx = tree.query(nodes, k=1, workers=params.threads)
    gap = float(dist.max())
    if gap > 10.0 * params.epsilon:
        raise CoverageError(
            f"Luka rozszerzenia {gap:.3g} > 10ε = {10 * params.epsilon:.3g}: budżet L za mały.",
            gap=gap,
        )
    if gap > params.epsilon:
        flags.append("coverage_gap")
        logger.warning("Luka rozszerzenia %.3g przekracza ε = %.3g", gap, params.epsilon)

    x = samples[idx]
    d = minimal_image(nodes - frac(x))
    t = tangents[idx]
    dbv, dav = d_beta.vector, d_alpha0.vector
    # rozkład d = a·tα + b·dβ; przesunięcie wzdłuż β komutuje z φ
    b = cross2(t, d) / cross2(t, dbv)
    along = cross2(d, dbv) / cross2(dav, dbv)
    u = (projected[idx] - x) + np.multiply.outer(along, dav) + np.multiply.outer(b, dbv) - d

    phi = _pin_basepoint(GridHomeomorphism(u.reshape(N, N, 2)), p)
    result = StraighteningResult(
        phi=phi,
        targets=(d_alpha0, d_beta),
        max_extension_gap=gap,
        basepoint_residual=basepoint_residual(phi, p),
        induced_h1_identity=induced_h1(phi).is_identity(),
        flags=tuple(flags),
        cycles={"alpha": estimate.as_dict()},
        stages={"alpha": {"samples": int(samples.shape[0]), "margin": margin,
                          "seconds": time.monotonic() - started}},
    )
    logger.info("Etap α zakończony: luka %.3g, flagi %s", gap, list(flags) or "brak")
    return result


def _pin_basepoint(phi: GridHomeomorphism, p: np.ndarray) -> GridHomeomorphism:
    """Stałe przesunięcie części okresowej tak, by φ(p) = p."""
    r = phi.evaluate(p) - p
    if not np.any(r):
        return phi
    return GridHomeomorphism(phi.displacement - r, phi.matrix)


def basepoint_residual(phi: GridHomeomorphism, p) -> float:
    p = np.asarray(p, dtype=float)
    return float(np.max(np.abs(phi.evaluate(p) - p)))


# ===== Etap β =====

def _conjugacy(S: CircleLift, params: StraighteningParams) -> Tuple[MonotoneCircleMap, float]:
    M = params.samples
    h, _ = conjugacy_to_rotation(S, params.orbit_factor * M * M, M)
    gap, ok = minimality_density(S, 0.0, params.minimality_orbit, params.minimality_eps)
    if not ok:
        raise NonMinimalError(
            f"Orbita odwzorowania powrotu nie jest {params.minimality_eps:g}-gęsta (luka {gap:.3g}).",
            gap=gap,
        )
    return h, h.rotation.lifted_center


def check_minimal(F: Foliation, params: StraighteningParams) -> dict:
    """
    Diagnostyka minimalności foliacji: odwzorowanie pierwszego powrotu na x = 0
    albo y = 0 (bardziej transwersalną) i gęstość orbity 0 pod nim.
    """
    margins = {"x": transversality_margin(F, _VERTICAL), "y": transversality_margin(F, _HORIZONTAL)}
    axis = max(margins, key=margins.get)
    if margins[axis] < params.transversality_threshold:
        raise NotHandledError(
            f"Liście nie są transwersalne ani do x = 0, ani do y = 0 (margines {margins[axis]:.3g}).",
            margin=margins[axis],
        )
    S = first_return_with_copy(F, Section(axis, 0.0), params.samples, params.crossing_budget, params.trace_step)[0]
    gap, ok = minimality_density(S, 0.0, params.minimality_orbit, params.minimality_eps)
    if not ok:
        raise NonMinimalError(
            f"Orbita powrotu na {axis} = 0 nie jest {params.minimality_eps:g}-gęsta (luka {gap:.3g}).",
            gap=gap,
            section=axis,
        )
    return {"section": axis, "gap": gap}


def _straighten_beta(beta: Foliation, params: StraighteningParams) -> Tuple[GridHomeomorphism, HalfLine, dict]:
    N = params.resolution
    nodes = grid_nodes(N).reshape(-1, 2)

    if isinstance(beta, SuspensionV):
        S = beta.lift
        h, rho = _conjugacy(S, params)
        t = nodes[:, 1]
        x = bisect_monotone(lambda v: (1.0 - t) * v + t * S(v), nodes[:, 0])
        x = np.where(t == 0.0, nodes[:, 0], x)
        image = np.stack([h(x) + t * rho, t], -1)
        direction = HalfLine(rho * beta.orientation, float(beta.orientation))
        diagnostics = {"mode": "suspension", "rotation": rho}
    else:
        margin = transversality_margin(beta, _HORIZONTAL)
        if margin < params.transversality_threshold:
            raise NotHandledError(
                f"Liście β nie są transwersalne do poziomych okręgów (margines {margin:.3g}).",
                margin=margin,
            )
        section = Section("y", 0.0)
        S, n = first_return_with_copy(beta, section, params.samples, params.crossing_budget, params.trace_step)
        h, rho = _conjugacy(S, params)
        image = np.empty_like(nodes)
        on_section = nodes[:, 1] == 0.0
        image[on_section, 0] = h(nodes[on_section, 0])
        image[on_section, 1] = 0.0
        off = np.flatnonzero(~on_section)

        def run_block(block: slice) -> np.ndarray:
            q = nodes[off[block]]
            back = section_crossings(beta, q, section, -1, params.crossing_budget, params.crossing_step)
            fwd = section_crossings(beta, q, section, 1, params.crossing_budget, params.crossing_step)
            if not (back.found.all() and fwd.found.all()):
                raise NonSectionError("Liść β nie przeciął sekcji y = 0 w budżecie przecięć.")
            if np.any(fwd.copies != back.copies + n):
                raise TransversalityError("Liść β przecina sekcję niezgodnie z odwzorowaniem powrotu.")
            t = back.arclength / (back.arclength + fwd.arclength)
            return np.stack([h(back.points[:, 0]) + t * rho, back.copies + n * t], -1)

        blocks = chunks(off.size, params.crossing_block)
        for block, values in zip(blocks, parallel_map(run_block, blocks, params.threads)):
            image[off[block]] = values
        direction = HalfLine(rho, float(n))
        diagnostics = {"mode": "crossings", "rotation": rho, "section_copy": n, "margin": margin}

    phi = GridHomeomorphism((image - nodes).reshape(N, N, 2))
    diagnostics["conjugacy_residual"] = h.residual
    logger.info("Etap β: kierunek docelowy %.12f, ρ = %.12f", direction.angle, diagnostics["rotation"])
    return phi, direction, diagnostics


def straighten_suspension_beta(beta: Foliation, params: StraighteningParams) -> GridHomeomorphism:
    """φ₁ z φ₁_*β liniową o kierunku (ρ(S), 1)."""
    phi, _, _ = _straighten_beta(beta, params)
    return phi


# ===== Potok =====

def straighten_pipeline(biFol: BiFoliation, params: StraighteningParams) -> StraighteningResult:
    """φ = φ₂∘φ₁ sprzęga (α, β) z liniową parą (Linear(dα0), Linear(dβ))."""
    p = np.asarray(params.basepoint)
    stages = {}

    started = time.monotonic()
    try:
        minimality = {"alpha": check_minimal(biFol.alpha, params)}
    except TorusError as exc:
        raise exc.tagged("alpha")
    try:
        if isinstance(biFol.beta, Linear):
            minimality["beta"] = check_minimal(biFol.beta, params)
            phi1, d_beta, diag = None, biFol.beta.oriented_direction, {"mode": "linear"}
        else:
            phi1, d_beta, diag = _straighten_beta(biFol.beta, params)
    except TorusError as exc:
        raise exc.tagged("beta")
    stages["minimality"] = minimality
    stages["beta"] = dict(diag, seconds=time.monotonic() - started)

    try:
        alpha1 = biFol.alpha if phi1 is None else Pushforward(biFol.alpha, phi1)
        stage2 = simultaneous_straighten(BiFoliation(alpha1, Linear(d_beta)), params)
    except TorusError as exc:
        raise exc.tagged("alpha")
    stages.update(stage2.stages)

    try:
        phi = stage2.phi if phi1 is None else _pin_basepoint(grid_compose(stage2.phi, phi1), p)
    except TorusError as exc:
        raise exc.tagged("compose")

    targets = (stage2.targets[0], d_beta)
    try:
        verification = verify_conjugacy(
            phi,
            biFol,
            targets,
            params.verify_samples,
            seed=params.seed,
            arc=params.verify_arc,
            tolerance=params.verify_tolerance,
            basepoint=params.basepoint,
            threads=params.threads,
        )
    except TorusError as exc:
        raise exc.tagged("verify")

    flags = list(stage2.flags)
    if not verification["passed"]:
        flags.append("verification_failed")
    return replace(
        stage2,
        phi=phi,
        targets=targets,
        basepoint_residual=basepoint_residual(phi, p),
        induced_h1_identity=induced_h1(phi).is_identity(),
        flags=tuple(flags),
        verification=verification,
        stages=stages,
    )


# ===== Weryfikacja =====

def _fit_arc(points: np.ndarray, target: HalfLine) -> Tuple[float, float]:
    """Prosta najmniejszych kwadratów (TLS): max odchylenie prostopadłe i kąt do celu."""
    centered = points - points.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    v = vt[0]
    if v @ (points[-1] - points[0]) < 0:
        v = -v
    perp = float(np.max(np.abs(cross2(centered, v))))
    return perp, HalfLine.from_vector(v).angle_to(target)


def leaf_straightness(
    phi: GridHomeomorphism, F: Foliation, target: HalfLine, seeds: np.ndarray, arc: float = 0.5, threads: int = 1
) -> dict:
    """Łuki liści F z ziaren, przepchnięte przez φ, porównane z prostą o kierunku target."""

    def one(seed) -> Tuple[float, float]:
        poly = trace_leaf(F, seed, arc)
        return _fit_arc(phi.evaluate(poly.points), target)

    fits = parallel_map(one, [tuple(s) for s in seeds], threads)
    perps, angles = zip(*fits)
    return {"max_perpendicular": float(max(perps)), "max_angle": float(max(angles))}


def verify_conjugacy(
    phi: GridHomeomorphism,
    biFol: BiFoliation,
    targets: Tuple[HalfLine, HalfLine],
    n_samples: int,
    *,
    seed: int = 0,
    arc: float = 0.5,
    tolerance: float = 1e-2,
    basepoint: Sequence[float] = (0.0, 0.0),
    threads: int = 1,
) -> dict:
    """Raport obu połówek sprzężenia; niepowodzenia zapisywane w raporcie."""
    rng = np.random.default_rng(seed)
    seeds = rng.random((n_samples, 2))
    report = {
        "alpha": leaf_straightness(phi, biFol.alpha, targets[0], seeds, arc, threads),
        "beta": leaf_straightness(phi, biFol.beta, targets[1], seeds, arc, threads),
        "basepoint_residual": basepoint_residual(phi, basepoint),
        "induced_h1_identity": induced_h1(phi).is_identity(),
        "n_samples": n_samples,
        "arc": arc,
        "tolerance": tolerance,
    }
    within = all(
        report[k]["max_perpendicular"] <= tolerance and report[k]["max_angle"] <= tolerance for k in ("alpha", "beta")
    )
    report["passed"] = bool(
        within and report["basepoint_residual"] <= BASEPOINT_TOL and report["induced_h1_identity"]
    )
    logger.info(
        "Weryfikacja: α ⊥ %.2e ∠ %.2e, β ⊥ %.2e ∠ %.2e, wynik %s",
        report["alpha"]["max_perpendicular"],
        report["alpha"]["max_angle"],
        report["beta"]["max_perpendicular"],
        report["beta"]["max_angle"],
        "OK" if report["passed"] else "NIE",
    )
    return report


# ===== Studia =====

def compare_grid_maps(phi: GridHomeomorphism, psi: GridHomeomorphism) -> float:
    """sup odległości Φ(y) − Ψ(y) na węzłach drobniejszej siatki."""
    nodes = grid_nodes(max(phi.resolution, psi.resolution))
    return float(np.max(np.abs(phi.evaluate(nodes) - psi.evaluate(nodes))))


def refinement_study(biFol: BiFoliation, params: StraighteningParams, levels: int = 3) -> dict:
    """Potok przy kolejnych podwojeniach (N, L); trend residuów weryfikacji."""
    if levels < 2:
        raise ValidationFailure("Studium zbieżności wymaga co najmniej dwóch poziomów.")
    rows = []
    current: Optional[StraighteningParams] = params
    for _ in range(levels):
        result = straighten_pipeline(biFol, current)
        v = result.verification
        rows.append({
            "resolution": current.resolution,
            "budget": current.budget,
            "residual": max(v["alpha"]["max_perpendicular"], v["beta"]["max_perpendicular"]),
            "angle": max(v["alpha"]["max_angle"], v["beta"]["max_angle"]),
            "flags": list(result.flags),
        })
        current = current.refined()
    non_increasing = all(
        b["residual"] <= 1.2 * a["residual"] + 1e-12 for a, b in zip(rows, rows[1:])
    )
    return {"levels": rows, "non_increasing": non_increasing}
