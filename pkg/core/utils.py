# core/utils.py
from __future__ import annotations

import hashlib
import logging
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, List, TypeVar, Union

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


# --- geometria na okręgu / torusie -------------------------------------------

def frac(x):
    """Część ułamkowa w [0, 1); wartości zaokrąglone do 1.0 sprowadza do 0."""
    arr = np.asarray(x, dtype=float)
    out = arr - np.floor(arr)
    out = np.where(out >= 1.0, 0.0, out)
    return out


def circular_distance(a, b=0.0):
    """Odległość na okręgu R/Z."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), 1.0)
    return np.minimum(d, 1.0 - d)


def minimal_image(d):
    """Reprezentant wektora w [-1/2, 1/2)^2."""
    return np.mod(np.asarray(d, dtype=float) + 0.5, 1.0) - 0.5


def cross2(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / n


# --- równoległość ------------------------------------------------------------

def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """
    Mapuje `fn` po elementach, zachowując kolejność wyników.
    Przy threads <= 1 działa sekwencyjnie.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(fn, items))


def chunks(n: int, size: int) -> List[slice]:
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


# --- pliki -------------------------------------------------------------------

def atomic_write_bytes(path: Union[str, Path], data: bytes) -> Path:
    """Zapis przez plik tymczasowy w tym samym katalogu + os.replace."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    logger.debug("Zapisano %s (%d B)", path, len(data))
    return path


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def sha256_digest(*chunks_: Union[bytes, str]) -> str:
    h = hashlib.sha256()
    for c in chunks_:
        h.update(c.encode("utf-8") if isinstance(c, str) else c)
    return h.hexdigest()
