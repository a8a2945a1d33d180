"""The two export operations: prompt bank and per-image features."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .backends import get_backend
from .containers import SidecarRecord, sidecar_path, write_embedding_file, write_sidecar
from .errors import DataError
from .manifest import LEVELS, ExportManifest

LEVEL_WEIGHTS = (1.0, 2.0, 3.0, 4.0, 5.0)


def normalize_score(raw: float, lo: float, hi: float, invert: bool) -> float:
    """Linear map from [lo, hi] onto [1, 5]; invert flips orientation.

    Mirrors the consumer's normalization semantics so sidecar mos values
    land exactly where its own importer would put them.
    """
    if not lo <= raw <= hi:
        raise DataError(f"raw score {raw} outside [{lo}, {hi}]")
    t = (raw - lo) / (hi - lo)
    return 5.0 - 4.0 * t if invert else 1.0 + 4.0 * t


def read_score_table(path) -> list[tuple[str, float]]:
    """Delimited table: header image,score then one row per image."""
    p = Path(path)
    if not p.exists():
        raise DataError(f"score table {p} does not exist")
    with open(p, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows or [c.strip() for c in rows[0]] != ["image", "score"]:
        raise DataError(f"{p}: first row must be the header 'image,score'")
    table = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise DataError(f"{p}:{lineno}: expected image,score, got {len(row)} fields")
        name = row[0].strip()
        if not name:
            raise DataError(f"{p}:{lineno}: empty image name")
        try:
            score = float(row[1])
        except ValueError as exc:
            raise DataError(f"{p}:{lineno}: score {row[1]!r} is not a number") from exc
        table.append((name, score))
    if not table:
        raise DataError(f"{p}: no score rows")
    return table


def export_text_bank(manifest: ExportManifest, out_path) -> np.ndarray:
    """Embed the five prompts and write them as a scoring bank.

    Rows keep prompt order (worst to best); the sidecar carries the level
    names, the grade weights, and the backend's temperature.
    """
    backend = get_backend(manifest.model_tag)
    features = backend.embed_texts(manifest.prompts)
    tau = backend.temperature()
    write_embedding_file(out_path, features)
    records = [
        SidecarRecord(id=level, mos=w, raw_score=tau)
        for level, w in zip(LEVELS, LEVEL_WEIGHTS)
    ]
    write_sidecar(sidecar_path(out_path), records)
    return features


def export_image_features(manifest: ExportManifest, out_path) -> tuple[np.ndarray, list[SidecarRecord]]:
    """Embed every image the score table lists, in table order.

    Feature row i is aligned with sidecar record i. The table must cover
    every image file in the directory; a row may repeat an image (rows stay
    independent and identical content embeds identically).
    """
    table = read_score_table(manifest.score_table)
    image_dir = Path(manifest.image_dir)
    if not image_dir.is_dir():
        raise DataError(f"image directory {image_dir} does not exist")

    listed = {name for name, _ in table}
    on_disk = sorted(p.name for p in image_dir.iterdir() if p.is_file())
    uncovered = [name for name in on_disk if name not in listed]
    if uncovered:
        raise DataError(f"score table misses {len(uncovered)} image(s): {', '.join(uncovered)}")
    missing = sorted({name for name in listed if not (image_dir / name).is_file()})
    if missing:
        raise DataError(f"score table names absent image(s): {', '.join(missing)}")

    backend = get_backend(manifest.model_tag)
    paths = [image_dir / name for name, _ in table]
    features = backend.embed_images(paths)
    records = [
        SidecarRecord(
            id=name,
            mos=normalize_score(raw, manifest.score_lo, manifest.score_hi, manifest.invert),
            raw_score=raw,
        )
        for name, raw in table
    ]
    write_embedding_file(out_path, features)
    write_sidecar(sidecar_path(out_path), records)
    return features, records
