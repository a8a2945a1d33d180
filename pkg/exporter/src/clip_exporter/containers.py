"""Writers for the iqdistill container formats.

The consumer contract, byte for byte: an embedding file is the header
struct <4sIII (magic "IQEB", version 1, row count, row width) followed by
the rows as little-endian float32, row-major. Sidecars are .jsonl, one
object per line with keys id and mos plus optional raw_score, serialized
with sorted keys and a trailing newline. A prompt bank is a five-row
embedding file whose sidecar ids are the level names, mos values the level
weights 1..5, and raw_score the softmax temperature on every record.

Writes are atomic (temp file, then rename).
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

EMBEDDING_MAGIC = b"IQEB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True)
class SidecarRecord:
    id: str
    mos: float
    raw_score: float | None = None


def _atomic_write(path: Path, payload: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def write_embedding_file(path, matrix) -> None:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] == 0:
        raise DataError(f"expected a nonempty matrix of rows, got shape {m.shape}")
    with np.errstate(over="ignore"):  # overflow is caught by the finiteness check
        f32 = np.ascontiguousarray(m, dtype="<f4")
    if not np.all(np.isfinite(f32)):
        raise DataError("features do not fit in finite float32")
    header = _HEADER.pack(EMBEDDING_MAGIC, FORMAT_VERSION, m.shape[0], m.shape[1])
    _atomic_write(Path(path), header + f32.tobytes())


def read_embedding_file(path) -> np.ndarray:
    """Reader for round-trip checks; mirrors the consumer's validation."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DataError(f"{path}: header truncated")
    magic, version, count, dim = _HEADER.unpack_from(raw)
    if magic != EMBEDDING_MAGIC or version != FORMAT_VERSION:
        raise DataError(f"{path}: not a version-{FORMAT_VERSION} embedding file")
    if len(raw) - _HEADER.size != count * dim * 4:
        raise DataError(f"{path}: payload length does not match header")
    flat = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    return flat.reshape(count, dim).astype(np.float64)


def write_sidecar(path, records) -> None:
    lines = []
    for rec in records:
        obj: dict = {"id": rec.id, "mos": rec.mos}
        if rec.raw_score is not None:
            obj["raw_score"] = rec.raw_score
        lines.append(json.dumps(obj, sort_keys=True))
    _atomic_write(Path(path), ("\n".join(lines) + "\n").encode() if lines else b"")


def sidecar_path(features_path) -> Path:
    return Path(features_path).with_suffix(".jsonl")
