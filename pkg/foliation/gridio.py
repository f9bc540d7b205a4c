# foliation/gridio.py
"""
Formaty plików odwzorowań siatkowych.

Binarny (little-endian):
    b"TGRD" | wersja u32 | N u32 | A: 4 × i64 (a11, a12, a21, a22) | u: N·N·2 × f64
    (u w kolejności [i, j, składowa], i ↔ x).
CSV:
    pierwsza linia "# N,a11,a12,a21,a22", dalej wiersze "i,j,ux,uy".
"""
from __future__ import annotations

import io
import struct

import numpy as np

from core.exceptions import GridFileError, ValidationFailure

from .grid import GridHomeomorphism

MAGIC = b"TGRD"
VERSION = 1
_HEADER = struct.Struct("<4sII4q")


def encode_binary(phi: GridHomeomorphism) -> bytes:
    A = phi.matrix.reshape(-1).tolist()
    head = _HEADER.pack(MAGIC, VERSION, phi.resolution, *A)
    return head + phi.displacement.astype("<f8").tobytes(order="C")


def decode_binary(data: bytes) -> GridHomeomorphism:
    if len(data) < _HEADER.size:
        raise GridFileError("Plik siatki jest krótszy niż nagłówek.")
    magic, version, N, *A = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise GridFileError(f"Nieznany nagłówek pliku siatki: {magic!r}.")
    if version != VERSION:
        raise GridFileError(f"Nieobsługiwana wersja pliku siatki: {version}.")
    expected = _HEADER.size + N * N * 2 * 8
    if len(data) != expected:
        raise GridFileError(f"Zły rozmiar pliku siatki: {len(data)} B, oczekiwano {expected} B.")
    u = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(N, N, 2)
    return _build(u, A)


def encode_csv(phi: GridHomeomorphism) -> str:
    N = phi.resolution
    buf = io.StringIO()
    a = phi.matrix.reshape(-1)
    buf.write(f"# {N},{a[0]},{a[1]},{a[2]},{a[3]}\n")
    ii, jj = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    u = phi.displacement
    for i, j, ux, uy in zip(ii.ravel(), jj.ravel(), u[..., 0].ravel(), u[..., 1].ravel()):
        buf.write(f"{i},{j},{ux:.17g},{uy:.17g}\n")
    return buf.getvalue()


def decode_csv(text: str) -> GridHomeomorphism:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise GridFileError("Brak nagłówka '# N,a11,a12,a21,a22' w pliku CSV.")
    try:
        head = [int(v) for v in lines[0].lstrip("#").split(",")]
        N, A = head[0], head[1:]
        if len(A) != 4:
            raise ValueError("nagłówek")
        u = np.full((N, N, 2), np.nan)
        for ln in lines[1:]:
            i, j, ux, uy = ln.split(",")
            u[int(i), int(j)] = (float(ux), float(uy))
    except (ValueError, IndexError) as exc:
        raise GridFileError(f"Niepoprawny plik CSV siatki: {exc}") from exc
    if np.isnan(u).any():
        raise GridFileError("Plik CSV nie zawiera wszystkich węzłów siatki.")
    return _build(u, A)


def _build(u: np.ndarray, A) -> GridHomeomorphism:
    try:
        return GridHomeomorphism(np.array(u, dtype=float), np.array(A, dtype=np.int64).reshape(2, 2))
    except ValidationFailure as exc:
        raise GridFileError(f"Plik zawiera niepoprawne odwzorowanie: {exc.message}") from exc
