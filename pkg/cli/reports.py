# cli/reports.py
"""
Raport komendy: deterministyczny ładunek JSON + pole `timing` (jedyne niedeterministyczne).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np

from .serializers import SCHEMA_VERSION, ReportSerializer


def _jsonable(value: Any):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (tuple, set)):
        return list(value)
    raise TypeError(f"Nieserializowalny typ w raporcie: {type(value).__name__}")


def _finite(value: Any):
    """NaN/inf nie są poprawnym JSON-em: zamieniane na napisy."""
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_finite(v) for v in value]
    return value


@dataclass
class Report:
    command: str
    input_digest: str
    seed: int
    result: Dict[str, Any]
    quality_flags: List[str] = field(default_factory=list)
    timing: Dict[str, float] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def status(self) -> str:
        return "degraded" if self.quality_flags else "ok"

    def payload(self) -> dict:
        # przejście przez JSON normalizuje typy numpy przed walidacją
        result = _finite(json.loads(json.dumps(self.result, default=_jsonable)))
        data = {
            "schema_version": self.schema_version,
            "command": self.command,
            "input_digest": self.input_digest,
            "seed": self.seed,
            "result": result,
            "quality_flags": list(self.quality_flags),
            "status": self.status,
        }
        s = ReportSerializer(data=data)
        s.is_valid(raise_exception=True)
        return data

    def as_dict(self, with_timing: bool = True) -> dict:
        data = self.payload()
        if with_timing:
            data["timing"] = dict(self.timing)
        return data

    def to_json(self, with_timing: bool = True) -> str:
        return json.dumps(self.as_dict(with_timing), sort_keys=True, indent=2, ensure_ascii=False, default=_jsonable)
