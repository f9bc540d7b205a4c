# cli/services.py
"""
Wykonanie komend z konfiguracji: budowa obiektów, wywołanie operacji modułów,
złożenie raportu. Nic tu nie pisze na stdout; to robi komenda zarządzania.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
from django.conf import settings

from circle.services import rotation_number_enclosure
from core.exceptions import UsageError, ValidationFailure
from core.utils import sha256_digest
from foliation.geometry import HalfLine, Section
from foliation.grid import identity_map
from foliation.services import first_return_with_copy
from homology.services import asymptotic_cycle, cycle_basepoint_spread, slope_expansion
from rigidity.services import (
    affine_from_slope_data,
    find_affine_symmetries,
    rigidity_identity_check,
    rigidity_sweep,
)
from straighten.params import StraighteningParams
from straighten.services import compare_grid_maps, refinement_study, straighten_pipeline, verify_conjugacy

from .builders import ObjectRegistry
from .export import export_grid
from .reports import Report
from .serializers import COMMANDS

logger = logging.getLogger(__name__)

IDENTITY_TOL = 1e-9
GRID_SUFFIX = {"binary": "tgrd", "csv": "csv"}
_RESIDUAL_POINTS = 64

Outcome = Tuple[dict, List[str]]


@dataclass
class RunContext:
    registry: ObjectRegistry
    seed: int
    threads: int
    out_dir: Optional[Path] = None
    formats: Tuple[str, ...] = ("binary",)
    timing: Dict[str, float] = field(default_factory=dict)


def input_digest(config: Mapping, command: str) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return sha256_digest(canonical, "\0", command)


def run_command(
    config: Mapping,
    command: str,
    *,
    registry: Optional[ObjectRegistry] = None,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
    out_dir: Optional[Path] = None,
) -> Report:
    """Uruchamia jedną komendę na zwalidowanej konfiguracji i zwraca raport."""
    if command not in COMMANDS:
        raise UsageError(f"Nieznane polecenie {command!r}. Dostępne: {', '.join(COMMANDS)}.")
    params = config.get("commands", {}).get(command)
    if params is None:
        raise ValidationFailure(f"Konfiguracja nie zawiera sekcji commands.{command}.", section=f"commands.{command}")

    output = config.get("output") or {}
    if out_dir is None and output.get("dir"):
        out_dir = Path(output["dir"])
    ctx = RunContext(
        registry=registry or ObjectRegistry(config),
        seed=int(seed if seed is not None else config.get("seed", settings.TORUS_DEFAULT_SEED)),
        threads=int(threads if threads is not None else config.get("threads", settings.TORUS_THREADS)),
        out_dir=out_dir,
        formats=tuple(output.get("formats") or ("binary",)),
    )
    logger.info("Komenda %s: ziarno %d, wątki %d", command, ctx.seed, ctx.threads)

    started = time.monotonic()
    result, flags = HANDLERS[command](params, ctx)
    ctx.timing["total_seconds"] = time.monotonic() - started

    report = Report(
        command=command,
        input_digest=input_digest(config, command),
        seed=ctx.seed,
        result=result,
        quality_flags=sorted(set(flags)),
        timing=ctx.timing,
    )
    logger.info("Komenda %s zakończona: status %s", command, report.status)
    return report


# ======================= HELPERY =======================

def _split_seconds(stages: Mapping, timing: Dict[str, float]) -> dict:
    """Czasy etapów trafiają do `timing`, reszta diagnostyki zostaje w wyniku."""
    out = {}
    for name, diag in stages.items():
        diag = dict(diag)
        if "seconds" in diag:
            timing[f"{name}_seconds"] = diag.pop("seconds")
        out[name] = diag
    return out


def _straightening_params(p: Mapping, ctx: RunContext) -> StraighteningParams:
    keys = (
        "budget", "resolution", "epsilon", "step", "section_samples", "orbit_factor",
        "crossing_step", "crossing_budget", "verify_samples", "verify_arc", "verify_tolerance",
    )
    kwargs = {k: p[k] for k in keys if k in p}
    kwargs["basepoint"] = tuple(p.get("basepoint", (0.0, 0.0)))
    if p.get("transversality_threshold") is not None:
        kwargs["transversality_threshold"] = p["transversality_threshold"]
    if p.get("leaf_orientations"):
        kwargs["leaf_orientations"] = tuple(p["leaf_orientations"])
    return StraighteningParams(seed=ctx.seed, threads=ctx.threads, **kwargs)


# ======================= KOMENDY =======================

def _rotnum(p: Mapping, ctx: RunContext) -> Outcome:
    F = ctx.registry.circle_map(p["map"])
    enc = rotation_number_enclosure(F, p["n"])
    return {
        "map": F.describe(),
        "enclosure": enc.as_dict(),
        "lifted": {"lo": enc.lifted_lo, "hi": enc.lifted_hi, "center": enc.lifted_center},
        "tolerance": 0.5 * enc.width,
    }, []


def _cycle(p: Mapping, ctx: RunContext) -> Outcome:
    F = ctx.registry.foliation(p["foliation"])
    est = asymptotic_cycle(F, p["basepoint"], p["T_max"])
    result = {
        "foliation": F.describe(),
        "estimate": est.as_dict(),
        "slope_expansion": slope_expansion(est.direction, p["continued_fraction_depth"]).as_dict(),
    }
    flags = []
    if p.get("basepoints"):
        spread = cycle_basepoint_spread(F, [p["basepoint"], *p["basepoints"]], p["T_max"], ctx.threads)
        result["basepoint_spread"] = spread
        if not spread["all_agree"]:
            flags.append("basepoints_disagree")
    return result, flags


def _first_return(p: Mapping, ctx: RunContext) -> Outcome:
    F = ctx.registry.foliation(p["foliation"])
    section = Section(p["section"]["axis"], p["section"]["value"])
    lift, copy = first_return_with_copy(F, section, p["samples"], p["budget"])
    enc = rotation_number_enclosure(lift, p["n"])
    return {
        "foliation": F.describe(),
        "section": {"axis": section.axis, "value": section.value},
        "samples": p["samples"],
        "section_copy": copy,
        "enclosure": enc.as_dict(),
        "tolerance": 0.5 * enc.width,
    }, []


def _straighten(p: Mapping, ctx: RunContext) -> Outcome:
    biFol = ctx.registry.bifoliation(p["bifoliation"])
    params = _straightening_params(p, ctx)
    res = straighten_pipeline(biFol, params)
    result = res.as_dict()
    result["stages"] = _split_seconds(res.stages, ctx.timing)
    result["params"] = params.as_dict()
    distance = compare_grid_maps(res.phi, identity_map(params.resolution))
    result["identity_distance"] = distance
    result["is_identity"] = distance <= IDENTITY_TOL
    result["identity_tolerance"] = IDENTITY_TOL
    flags = list(res.flags)

    if p.get("reference_map"):
        result["reference_distance"] = compare_grid_maps(res.phi, ctx.registry.grid_map(p["reference_map"]))
    if p.get("refinement_levels", 0) >= 2:
        started = time.monotonic()
        study = refinement_study(biFol, params, p["refinement_levels"])
        ctx.timing["refinement_seconds"] = time.monotonic() - started
        result["refinement"] = study
        if not study["non_increasing"]:
            flags.append("refinement_not_converging")
    if p.get("export", True) and ctx.out_dir is not None:
        files = []
        for fmt in ctx.formats:
            path = export_grid(res.phi, ctx.out_dir / f"straighten_phi.{GRID_SUFFIX[fmt]}", fmt)
            files.append({"format": fmt, "file": path.name})
        result["exports"] = files
    return result, flags


def _verify(p: Mapping, ctx: RunContext) -> Outcome:
    biFol = ctx.registry.bifoliation(p["bifoliation"])
    phi = ctx.registry.grid_map(p["grid_map"])
    if p.get("targets"):
        targets = tuple(HalfLine.from_vector(t) for t in p["targets"])
        source = "config"
    else:
        targets = tuple(
            asymptotic_cycle(F, p["basepoint"], p["T_max"]).direction for F in (biFol.alpha, biFol.beta)
        )
        source = "asymptotic_cycles"
    report = verify_conjugacy(
        phi,
        biFol,
        targets,
        p["n_samples"],
        seed=ctx.seed,
        arc=p["arc"],
        tolerance=p["tolerance"],
        basepoint=p["basepoint"],
        threads=ctx.threads,
    )
    result = {
        "targets": {"alpha": targets[0].as_dict(), "beta": targets[1].as_dict(), "source": source},
        "verification": report,
    }
    return result, ([] if report["passed"] else ["verification_failed"])


def _rigidity(p: Mapping, ctx: RunContext) -> Outcome:
    auto = affine_from_slope_data(p["delta"], p["delta_prime"], p["a"], p["a_prime"], p["b"], p["b_prime"])
    verdict = rigidity_identity_check(auto, p["require_origin_fixed"])
    pts = np.random.default_rng(ctx.seed).uniform(-10.0, 10.0, (_RESIDUAL_POINTS, 2))
    result = {
        "automorphism": auto.as_dict(),
        "verdict": verdict.as_dict(),
        "coefficient_residuals": list(auto.coefficient_residuals(pts)),
        "eigen_residuals": list(auto.eigen_residuals()),
    }
    if p.get("sweep"):
        s = p["sweep"]
        grid = np.linspace(s["a_min"], s["a_max"], s["steps"])
        result["sweep"] = rigidity_sweep(p["delta"], p["delta_prime"], grid, grid, p["b"], p["b_prime"])
    return result, []


def _symmetries(p: Mapping, ctx: RunContext) -> Outcome:
    found = find_affine_symmetries(p["delta"], p["delta_prime"], p["entry_bound"])
    return {
        "delta": p["delta"],
        "delta_prime": p["delta_prime"],
        "entry_bound": p["entry_bound"],
        "matrices": [m.as_list() for m in found],
        "count": len(found),
    }, []


HANDLERS: Dict[str, Callable[[Mapping, RunContext], Outcome]] = {
    "rotnum": _rotnum,
    "cycle": _cycle,
    "first-return": _first_return,
    "straighten": _straighten,
    "verify": _verify,
    "rigidity": _rigidity,
    "symmetries": _symmetries,
}
