# cli/export.py
"""
Zapis i odczyt odwzorowań siatkowych na dysku (format binarny lub CSV).
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Union

from core.exceptions import GridFileError, ValidationFailure
from core.utils import atomic_write_bytes
from foliation.grid import GridHomeomorphism
from foliation.gridio import decode_binary, decode_csv, encode_binary, encode_csv

logger = logging.getLogger(__name__)

SUFFIXES = {".tgrd": "binary", ".bin": "binary", ".csv": "csv"}


def grid_format(path: Union[str, Path], fmt: Optional[str] = None) -> str:
    if fmt is not None:
        if fmt not in ("binary", "csv"):
            raise ValidationFailure(f"Nieznany format siatki: {fmt!r}.")
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix not in SUFFIXES:
        raise ValidationFailure(f"Nie da się ustalić formatu z rozszerzenia {suffix!r} ({path}).")
    return SUFFIXES[suffix]


def export_grid(phi: GridHomeomorphism, path: Union[str, Path], fmt: Optional[str] = None) -> Path:
    """Atomowy zapis φ; błędy wejścia/wyjścia niosą ścieżkę."""
    path = Path(path)
    fmt = grid_format(path, fmt)
    data = encode_binary(phi) if fmt == "binary" else encode_csv(phi).encode("utf-8")
    try:
        atomic_write_bytes(path, data)
    except OSError as exc:
        raise GridFileError(f"Nie udało się zapisać {path}: {exc.strerror or exc}", path=str(path)) from exc
    logger.info("Zapisano siatkę N=%d (%s) → %s", phi.resolution, fmt, path)
    return path


def import_grid(path: Union[str, Path], fmt: Optional[str] = None) -> GridHomeomorphism:
    path = Path(path)
    fmt = grid_format(path, fmt)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise GridFileError(f"Nie udało się odczytać {path}: {exc.strerror or exc}", path=str(path)) from exc
    try:
        phi = decode_binary(data) if fmt == "binary" else decode_csv(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise GridFileError(f"Plik {path} nie jest tekstem UTF-8.", path=str(path)) from exc
    except GridFileError as exc:
        exc.context.setdefault("path", str(path))
        raise
    logger.debug("Wczytano siatkę N=%d z %s", phi.resolution, path)
    return phi
