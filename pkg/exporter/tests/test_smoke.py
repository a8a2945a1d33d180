"""End-to-end: exported files must feed the scoring engine unmodified.

The engine is driven only through its command line and file formats; these
tests never import it.
"""

import json
import shutil
import struct
import subprocess
import sys

import pytest


def run_cli(script, module, args):
    """Invoke a console script, falling back to python -m."""
    exe = shutil.which(script)
    cmd = [exe, *args] if exe else [sys.executable, "-m", module, *args]
    return subprocess.run(cmd, capture_output=True, text=True)


def export(args):
    return run_cli("clip-exporter", "clip_exporter.cli", args)


def engine(args):
    return run_cli("iqdistill", "iqdistill.cli", args)


@pytest.fixture
def exported(tmp_path, image_set):
    img_dir, table, names, raw = image_set
    bank = tmp_path / "bank.iqeb"
    feats = tmp_path / "feats.iqeb"
    r = export(["export-bank", "--model-tag", "stub", "--out", str(bank)])
    assert r.returncode == 0, r.stderr
    r = export([
        "export-images", "--model-tag", "stub",
        "--images", str(img_dir), "--scores", str(table),
        "--lo", "0", "--hi", "100", "--out", str(feats),
    ])
    assert r.returncode == 0, r.stderr
    return bank, feats, names


def test_exported_bank_has_five_512_rows_in_level_order(exported):
    bank, _, _ = exported
    raw = bank.read_bytes()
    magic, version, count, dim = struct.unpack_from("<4sIII", raw)
    assert (magic, version, count, dim) == (b"IQEB", 1, 5, 512)
    assert len(raw) == 16 + count * dim * 4

    records = [json.loads(line) for line in bank.with_suffix(".jsonl").read_text().splitlines()]
    assert [r["id"] for r in records] == ["bad", "poor", "fair", "good", "perfect"]
    assert [r["mos"] for r in records] == [1.0, 2.0, 3.0, 4.0, 5.0]


def test_engine_scores_exported_features(exported, tmp_path):
    bank, feats, names = exported
    out = tmp_path / "scored"
    r = engine(["score", "--bank", str(bank), "--embeddings", str(feats), "--out", str(out)])
    assert r.returncode == 0, r.stderr
    assert "scored 10 embeddings" in r.stdout

    report = (out / "scores.txt").read_text()
    lines = report.splitlines()
    start = lines.index("[scores]")
    header, *rows = lines[start + 1:]
    assert header.split("\t") == ["id", "score"]
    assert [row.split("\t")[0] for row in rows] == names
    for row in rows:
        score = float(row.split("\t")[1])
        assert 1.0 <= score <= 5.0
    assert (out / "scatter.png").exists()


def test_engine_rescores_identically(exported, tmp_path):
    # the exported artifacts are static inputs, so two engine runs agree
    bank, feats, _ = exported
    a, b = tmp_path / "s1", tmp_path / "s2"
    ra = engine(["score", "--bank", str(bank), "--embeddings", str(feats), "--out", str(a)])
    rb = engine(["score", "--bank", str(bank), "--embeddings", str(feats), "--out", str(b)])
    assert ra.returncode == 0 and rb.returncode == 0
    assert (a / "scores.txt").read_bytes() == (b / "scores.txt").read_bytes()
