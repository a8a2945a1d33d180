"""Binary and line-delimited file formats.

Embedding container (.iqeb): magic "IQEB", u32 version=1, u32 count, u32 dim,
then count*dim little-endian float32 values, row-major. The payload length
must match the header exactly.

Checkpoint container (.iqpw): magic "IQPW", u32 version=1, u32 activation
code, u32 layer count, then (u32 out, u32 in) per layer, then per layer the
weight matrix (row-major) followed by the bias vector, little-endian float32.

Score sidecar (.jsonl): one JSON object per line with keys id (string),
mos (real in [1, 5]) and optional raw_score. A prompt bank is stored as an
embedding file of five rows plus a sidecar whose ids are the level names,
whose mos values are the level weights 1..5, and whose raw_score carries the
softmax temperature.

Values are float32 on disk and float64 in memory; writes go through a
temporary file and an atomic rename.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset, Sample
from .errors import CorruptionError, DataError, FormatError, NumericError, ShapeError
from .nets import EncoderParams
from .scoring import LEVELS, PromptBank, default_bank

EMBEDDING_MAGIC = b"IQEB"
CHECKPOINT_MAGIC = b"IQPW"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIII")
_ACTIVATION_CODES = {"tanh": 0, "relu": 1}
_ACTIVATION_NAMES = {v: k for k, v in _ACTIVATION_CODES.items()}

OBSERVATIONS_FILE = "observations.iqeb"
SCORES_FILE = "scores.jsonl"


def _atomic_write(path: Path, payload: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def _f32_bytes(m: np.ndarray, what: str) -> bytes:
    with np.errstate(over="ignore"):  # overflow is diagnosed below, not warned
        f32 = np.ascontiguousarray(m, dtype="<f4")
    if m.size and not np.all(np.isfinite(f32)):
        raise NumericError(f"{what} does not fit in finite float32")
    return f32.tobytes()


def write_embeddings(path, embeddings) -> None:
    rows = [np.asarray(e, dtype=np.float64) for e in embeddings]
    for i, r in enumerate(rows):
        if r.ndim != 1:
            raise ShapeError(f"embedding {i} is not a vector (shape {r.shape})")
        if r.shape != rows[0].shape:
            raise ShapeError(f"embedding {i} has dim {r.shape[0]}, expected {rows[0].shape[0]}")
    count = len(rows)
    dim = rows[0].shape[0] if rows else 0
    header = _HEADER.pack(EMBEDDING_MAGIC, FORMAT_VERSION, count, dim)
    payload = _f32_bytes(np.stack(rows), "embeddings") if rows else b""
    _atomic_write(Path(path), header + payload)


def read_embeddings(path) -> list[np.ndarray]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise CorruptionError(f"{path}: header truncated, got {len(raw)} bytes, expected {_HEADER.size}")
    magic, version, count, dim = _HEADER.unpack_from(raw)
    if magic != EMBEDDING_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {EMBEDDING_MAGIC!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}, expected {FORMAT_VERSION}")
    expected = count * dim * 4
    actual = len(raw) - _HEADER.size
    if actual != expected:
        raise CorruptionError(f"{path}: payload is {actual} bytes, header implies {expected}")
    if count == 0:
        return []
    flat = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    m = flat.reshape(count, dim).astype(np.float64)
    if not np.all(np.isfinite(m)):
        raise DataError(f"{path}: non-finite value in payload")
    return [m[i] for i in range(count)]


def write_checkpoint(path, params: EncoderParams) -> None:
    shapes = b"".join(struct.pack("<II", w.shape[0], w.shape[1]) for w, _ in params.layers)
    header = (
        _HEADER.pack(CHECKPOINT_MAGIC, FORMAT_VERSION, _ACTIVATION_CODES[params.activation], len(params.layers))
        + shapes
    )
    body = b"".join(
        _f32_bytes(w, f"layer {k} weights") + _f32_bytes(b, f"layer {k} biases")
        for k, (w, b) in enumerate(params.layers)
    )
    _atomic_write(Path(path), header + body)


def read_checkpoint(path) -> EncoderParams:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise CorruptionError(f"{path}: header truncated, got {len(raw)} bytes, expected {_HEADER.size}")
    magic, version, act_code, n_layers = _HEADER.unpack_from(raw)
    if magic != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}, expected {FORMAT_VERSION}")
    if act_code not in _ACTIVATION_NAMES:
        raise FormatError(f"{path}: unknown activation code {act_code}")
    offset = _HEADER.size
    if len(raw) < offset + 8 * n_layers:
        raise CorruptionError(f"{path}: layer preamble truncated")
    shapes = []
    for _ in range(n_layers):
        out_size, in_size = struct.unpack_from("<II", raw, offset)
        offset += 8
        shapes.append((out_size, in_size))
    expected = sum(4 * (o * i + o) for o, i in shapes)
    actual = len(raw) - offset
    if actual != expected:
        raise CorruptionError(f"{path}: payload is {actual} bytes, preamble implies {expected}")
    layers = []
    for out_size, in_size in shapes:
        w = np.frombuffer(raw, dtype="<f4", count=out_size * in_size, offset=offset)
        offset += 4 * out_size * in_size
        b = np.frombuffer(raw, dtype="<f4", count=out_size, offset=offset)
        offset += 4 * out_size
        layers.append((w.reshape(out_size, in_size).astype(np.float64), b.astype(np.float64)))
    return EncoderParams(layers=layers, activation=_ACTIVATION_NAMES[act_code])


@dataclass(frozen=True)
class SidecarRecord:
    id: str
    mos: float
    raw_score: float | None = None


def write_sidecar(path, records) -> None:
    lines = []
    for rec in records:
        obj = {"id": rec.id, "mos": rec.mos}
        if rec.raw_score is not None:
            obj["raw_score"] = rec.raw_score
        lines.append(json.dumps(obj, sort_keys=True))
    _atomic_write(Path(path), ("\n".join(lines) + "\n").encode() if lines else b"")


def read_sidecar(path) -> list[SidecarRecord]:
    records = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
        if not isinstance(obj, dict) or "id" not in obj or "mos" not in obj:
            raise FormatError(f"{path}:{lineno}: record needs id and mos fields")
        mos = float(obj["mos"])
        if not 1.0 <= mos <= 5.0:
            raise DataError(f"{path}:{lineno}: mos {mos} outside [1, 5]")
        raw = obj.get("raw_score")
        records.append(SidecarRecord(id=str(obj["id"]), mos=mos, raw_score=None if raw is None else float(raw)))
    return records


def _sidecar_path(features_path) -> Path:
    return Path(features_path).with_suffix(".jsonl")


def write_bank(path, bank: PromptBank) -> None:
    """Store a bank as features plus a level-named sidecar carrying the
    weights (as mos) and the temperature (as raw_score)."""
    write_embeddings(path, list(bank.text_features))
    records = [
        SidecarRecord(id=level, mos=float(w), raw_score=bank.temperature)
        for level, w in zip(LEVELS, bank.weights)
    ]
    write_sidecar(_sidecar_path(path), records)


def read_bank(path) -> PromptBank:
    rows = read_embeddings(path)
    if len(rows) != len(LEVELS):
        raise DataError(f"{path}: bank needs {len(LEVELS)} rows, found {len(rows)}")
    records = read_sidecar(_sidecar_path(path))
    if len(records) != len(LEVELS):
        raise DataError(f"bank sidecar needs {len(LEVELS)} records, found {len(records)}")
    ids = tuple(r.id for r in records)
    if ids != LEVELS:
        raise DataError(f"bank sidecar ids {ids} must be the levels {LEVELS} in order")
    temps = {r.raw_score for r in records}
    if len(temps) != 1 or None in temps:
        raise DataError("bank sidecar must carry one temperature in raw_score on every record")
    return default_bank(np.stack(rows), temperature=temps.pop())


def write_dataset(directory, ds: Dataset) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_embeddings(directory / OBSERVATIONS_FILE, [s.obs for s in ds.samples])
    records = [
        SidecarRecord(
            id=f"s{i:06d}",
            mos=s.mos,
            raw_score=None if ds.latents is None else ds.latents[i],
        )
        for i, s in enumerate(ds.samples)
    ]
    write_sidecar(directory / SCORES_FILE, records)


def read_dataset(directory) -> Dataset:
    directory = Path(directory)
    obs = read_embeddings(directory / OBSERVATIONS_FILE)
    records = read_sidecar(directory / SCORES_FILE)
    if len(obs) != len(records):
        raise DataError(
            f"{directory}: {len(obs)} observation rows but {len(records)} sidecar records"
        )
    if not obs:
        raise DataError(f"{directory}: dataset is empty")
    samples = tuple(Sample(obs=o, mos=r.mos) for o, r in zip(obs, records))
    latents = tuple(r.raw_score for r in records)
    return Dataset(
        samples=samples,
        obs_dim=obs[0].shape[0],
        seed=0,
        provenance="imported",
        latents=latents if all(v is not None for v in latents) else None,
    )
