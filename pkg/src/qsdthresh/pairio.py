"""Lossless JSON round-trip for projected pairs.

Two layouts share the envelope {"n", "toeplitz", ..., "meta"}: Toeplitz
pairs store only the defining first rows, dense pairs the full matrices.
Complex scalars are stored as [re, im] with shortest round-trip float
serialization, so load(save(x)) is bit-identical at double precision.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import ParseError, ValidationError
from .linalg import DefinitePair, HermitianMatrix, toeplitz_hermitian

__all__ = ["pair_to_payload", "pair_from_payload", "save_pair", "load_pair"]


def _encode_complex_vector(v: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in v]


def _encode_complex_matrix(m: np.ndarray) -> list:
    return [_encode_complex_vector(row) for row in m]


def _decode_scalar(item, where: str) -> complex:
    if (
        not isinstance(item, list)
        or len(item) != 2
        or not all(isinstance(p, (int, float)) for p in item)
    ):
        raise ParseError(f"{where}: expected a [re, im] pair, got {item!r}")
    z = complex(item[0], item[1])
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise ValidationError(f"{where}: non-finite entry")
    return z


def _decode_complex_vector(items, n: int, where: str) -> np.ndarray:
    if not isinstance(items, list) or len(items) != n:
        raise ParseError(f"{where}: expected a list of length {n}")
    return np.array(
        [_decode_scalar(it, f"{where}[{i}]") for i, it in enumerate(items)],
        dtype=complex,
    )


def pair_to_payload(pair: DefinitePair, meta: dict | None = None) -> dict:
    """JSON-serializable document for a pair (first-row layout when the
    pair carries Toeplitz metadata, dense layout otherwise)."""
    doc: dict = {"n": pair.dim, "toeplitz": bool(pair.is_toeplitz)}
    if pair.is_toeplitz:
        doc["first_row_H"] = _encode_complex_vector(pair.first_row_h)
        doc["first_row_S"] = _encode_complex_vector(pair.first_row_s)
    else:
        doc["H"] = _encode_complex_matrix(pair.h.mat)
        doc["S"] = _encode_complex_matrix(pair.s.mat)
    doc["provenance"] = pair.provenance
    doc["meta"] = {} if meta is None else meta
    return doc


def pair_from_payload(doc: dict) -> DefinitePair:
    """Rebuild a pair from its JSON document.

    ParseError for missing or structurally wrong fields, ValidationError
    for structurally fine but inconsistent content (complex lag-0 entries,
    non-finite values, dense matrices that are not square).
    """
    if not isinstance(doc, dict):
        raise ParseError(f"expected a JSON object, got {type(doc).__name__}")
    for key in ("n", "toeplitz"):
        if key not in doc:
            raise ParseError(f"missing field {key!r}")
    n = doc["n"]
    if not isinstance(n, int) or n < 1:
        raise ParseError(f"field 'n' must be a positive integer, got {n!r}")
    provenance = doc.get("provenance", "exact")
    if doc["toeplitz"]:
        for key in ("first_row_H", "first_row_S"):
            if key not in doc:
                raise ParseError(f"missing field {key!r}")
        row_h = _decode_complex_vector(doc["first_row_H"], n, "first_row_H")
        row_s = _decode_complex_vector(doc["first_row_S"], n, "first_row_S")
        for name, row in (("first_row_H", row_h), ("first_row_S", row_s)):
            if row[0].imag != 0.0:
                raise ValidationError(
                    f"{name}: lag-0 entry must be real for a Hermitian-Toeplitz pair"
                )
        return DefinitePair(
            h=toeplitz_hermitian(row_h),
            s=toeplitz_hermitian(row_s),
            provenance=provenance,
            first_row_h=row_h,
            first_row_s=row_s,
        )
    for key in ("H", "S"):
        if key not in doc:
            raise ParseError(f"missing field {key!r}")
    def decode_matrix(items, where: str) -> np.ndarray:
        if not isinstance(items, list) or len(items) != n:
            raise ParseError(f"{where}: expected {n} rows")
        return np.array(
            [_decode_complex_vector(r, n, f"{where}[{i}]") for i, r in enumerate(items)]
        )

    h = decode_matrix(doc["H"], "H")
    s = decode_matrix(doc["S"], "S")
    for name, m in (("H", h), ("S", s)):
        if not np.allclose(m, m.conj().T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(m).max())):
            raise ValidationError(f"{name}: stored matrix is not Hermitian")
    return DefinitePair(
        h=HermitianMatrix(h), s=HermitianMatrix(s), provenance=provenance
    )


def save_pair(pair: DefinitePair, path: str | os.PathLike, meta: dict | None = None) -> None:
    """Write a pair document; parent directories must exist."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(pair_to_payload(pair, meta), fh, indent=1)
        fh.write("\n")


def load_pair(path: str | os.PathLike) -> DefinitePair:
    """Read a pair document; ParseError carries the byte offset for
    malformed JSON."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at byte offset {exc.pos}: {exc.msg}") from exc
    return pair_from_payload(doc)


def load_pair_meta(path: str | os.PathLike) -> dict:
    """The 'meta' section of a pair document (empty dict when absent)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(
                f"malformed JSON at byte offset {exc.pos}: {exc.msg}"
            ) from exc
    meta = doc.get("meta", {})
    return meta if isinstance(meta, dict) else {}
