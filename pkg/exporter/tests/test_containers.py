import json
import struct

import numpy as np
import pytest

from clip_exporter.containers import (
    EMBEDDING_MAGIC,
    FORMAT_VERSION,
    SidecarRecord,
    read_embedding_file,
    sidecar_path,
    write_embedding_file,
    write_sidecar,
)
from clip_exporter.errors import DataError


def test_embedding_byte_layout_matches_struct_oracle(tmp_path, rng):
    # The consumer reads <4sIII then little-endian f32 rows; build those
    # bytes independently and compare whole files.
    m = rng.normal(size=(7, 5)).astype(np.float32).astype(np.float64)
    p = tmp_path / "e.iqeb"
    write_embedding_file(p, m)
    expected = struct.pack("<4sIII", b"IQEB", 1, 7, 5)
    for value in m.flatten():
        expected += struct.pack("<f", value)
    assert p.read_bytes() == expected
    assert EMBEDDING_MAGIC == b"IQEB"
    assert FORMAT_VERSION == 1


def test_embedding_round_trip_exact_for_f32_values(tmp_path, rng):
    m = rng.normal(size=(20, 512)).astype(np.float32).astype(np.float64)
    p = tmp_path / "e.iqeb"
    write_embedding_file(p, m)
    back = read_embedding_file(p)
    assert back.shape == (20, 512)
    assert np.array_equal(back, m)


def test_write_rejects_bad_shapes_and_nonfinite(tmp_path):
    with pytest.raises(DataError):
        write_embedding_file(tmp_path / "a.iqeb", np.zeros(4))
    with pytest.raises(DataError):
        write_embedding_file(tmp_path / "b.iqeb", np.zeros((0, 4)))
    with pytest.raises(DataError):
        write_embedding_file(tmp_path / "c.iqeb", [[1.0, np.nan]])
    with pytest.raises(DataError):
        write_embedding_file(tmp_path / "d.iqeb", [[1.0, np.inf]])
    with pytest.raises(DataError):
        # finite in f64 but overflows f32
        write_embedding_file(tmp_path / "e.iqeb", [[1e300, 1.0]])


def test_read_rejects_corruption(tmp_path, rng):
    m = rng.normal(size=(3, 4)).astype(np.float32)
    p = tmp_path / "e.iqeb"
    write_embedding_file(p, m)
    pristine = p.read_bytes()

    p.write_bytes(b"XXXX" + pristine[4:])
    with pytest.raises(DataError):
        read_embedding_file(p)

    p.write_bytes(pristine[:-3])
    with pytest.raises(DataError):
        read_embedding_file(p)

    p.write_bytes(pristine[:8])
    with pytest.raises(DataError):
        read_embedding_file(p)


def test_writes_leave_no_temp_files(tmp_path, rng):
    write_embedding_file(tmp_path / "e.iqeb", rng.normal(size=(2, 3)))
    write_sidecar(tmp_path / "e.jsonl", [SidecarRecord(id="a", mos=3.0)])
    leftovers = [p.name for p in tmp_path.iterdir() if p.name.endswith(".tmp")]
    assert leftovers == []
    assert sorted(p.name for p in tmp_path.iterdir()) == ["e.iqeb", "e.jsonl"]


def test_sidecar_serialization_oracle(tmp_path):
    records = [
        SidecarRecord(id="x", mos=2.5, raw_score=40.0),
        SidecarRecord(id="y", mos=1.0),
    ]
    p = tmp_path / "s.jsonl"
    write_sidecar(p, records)
    text = p.read_text()
    assert text.endswith("\n")
    lines = text.splitlines()
    assert lines[0] == json.dumps({"id": "x", "mos": 2.5, "raw_score": 40.0}, sort_keys=True)
    # raw_score omitted entirely when absent, not serialized as null
    assert lines[1] == json.dumps({"id": "y", "mos": 1.0}, sort_keys=True)
    assert "raw_score" not in lines[1]


def test_sidecar_path_swaps_suffix():
    assert sidecar_path("out/feats.iqeb").name == "feats.jsonl"
    assert sidecar_path("bank.iqeb").suffix == ".jsonl"
