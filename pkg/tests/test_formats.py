import struct

import numpy as np
import pytest

from iqdistill.data import generate
from iqdistill.errors import (
    CorruptionError,
    DataError,
    FormatError,
    NumericError,
    ShapeError,
)
from iqdistill.formats import (
    EMBEDDING_MAGIC,
    OBSERVATIONS_FILE,
    SCORES_FILE,
    SidecarRecord,
    read_bank,
    read_checkpoint,
    read_dataset,
    read_embeddings,
    read_sidecar,
    write_bank,
    write_checkpoint,
    write_dataset,
    write_embeddings,
    write_sidecar,
)
from iqdistill.nets import init_params
from iqdistill.scoring import LEVELS, PromptBank


def as_f32(rows):
    return [np.asarray(r, dtype=np.float32).astype(np.float64) for r in rows]


def test_embeddings_round_trip_bit_exact(rng, tmp_path):
    # storage is float32, so write values already representable in f32
    rows = as_f32(rng.normal(size=(100, 17)))
    p = tmp_path / "e.iqeb"
    write_embeddings(p, rows)
    back = read_embeddings(p)
    assert len(back) == 100
    for a, b in zip(rows, back):
        assert np.array_equal(a, b)


def test_embeddings_write_read_write_is_stable(rng, tmp_path):
    # lossy f32 quantization happens once; a second cycle is the identity
    rows = [rng.normal(size=9) for _ in range(5)]
    p1, p2 = tmp_path / "a.iqeb", tmp_path / "b.iqeb"
    write_embeddings(p1, rows)
    write_embeddings(p2, read_embeddings(p1))
    assert p1.read_bytes() == p2.read_bytes()


def test_embeddings_empty(tmp_path):
    p = tmp_path / "empty.iqeb"
    write_embeddings(p, [])
    assert read_embeddings(p) == []
    assert p.stat().st_size == 16


def test_embeddings_header_layout(tmp_path):
    p = tmp_path / "e.iqeb"
    write_embeddings(p, [np.array([1.0, 2.0]), np.array([3.0, 4.0])])
    raw = p.read_bytes()
    magic, version, count, dim = struct.unpack_from("<4sIII", raw)
    assert (magic, version, count, dim) == (EMBEDDING_MAGIC, 1, 2, 2)
    assert raw[16:] == np.array([1, 2, 3, 4], dtype="<f4").tobytes()


def test_embeddings_bad_magic(tmp_path):
    p = tmp_path / "e.iqeb"
    write_embeddings(p, [np.ones(3)])
    p.write_bytes(b"XXXX" + p.read_bytes()[4:])
    with pytest.raises(FormatError, match="magic"):
        read_embeddings(p)


def test_embeddings_bad_version(tmp_path):
    p = tmp_path / "e.iqeb"
    write_embeddings(p, [np.ones(3)])
    raw = bytearray(p.read_bytes())
    raw[4:8] = struct.pack("<I", 99)
    p.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="version"):
        read_embeddings(p)


def test_embeddings_truncated_payload(tmp_path):
    p = tmp_path / "e.iqeb"
    write_embeddings(p, [np.ones(4), np.ones(4)])
    p.write_bytes(p.read_bytes()[:-5])
    with pytest.raises(CorruptionError, match=r"27 bytes.*32"):
        read_embeddings(p)


def test_embeddings_trailing_garbage(tmp_path):
    p = tmp_path / "e.iqeb"
    write_embeddings(p, [np.ones(4)])
    p.write_bytes(p.read_bytes() + b"\x00\x00")
    with pytest.raises(CorruptionError):
        read_embeddings(p)


def test_embeddings_truncated_header(tmp_path):
    p = tmp_path / "e.iqeb"
    p.write_bytes(b"IQEB\x01")
    with pytest.raises(CorruptionError, match="header"):
        read_embeddings(p)


def test_embeddings_nonfinite_payload(tmp_path):
    p = tmp_path / "e.iqeb"
    write_embeddings(p, [np.ones(2)])
    raw = bytearray(p.read_bytes())
    raw[16:20] = np.array([np.nan], dtype="<f4").tobytes()
    p.write_bytes(bytes(raw))
    with pytest.raises(DataError, match="non-finite"):
        read_embeddings(p)


def test_embeddings_reject_inf_and_overflow(tmp_path):
    with pytest.raises(NumericError):
        write_embeddings(tmp_path / "x.iqeb", [np.array([np.inf, 0.0])])
    # finite in f64 but overflows f32
    with pytest.raises(NumericError):
        write_embeddings(tmp_path / "y.iqeb", [np.array([1e300, 0.0])])


def test_embeddings_shape_errors(tmp_path):
    with pytest.raises(ShapeError):
        write_embeddings(tmp_path / "x.iqeb", [np.ones((2, 2))])
    with pytest.raises(ShapeError):
        write_embeddings(tmp_path / "x.iqeb", [np.ones(3), np.ones(4)])


def test_checkpoint_round_trip(rng, tmp_path):
    params = init_params([7, 5, 3], seed=12, activation="relu")
    quantized = [(w.astype(np.float32).astype(np.float64), b) for w, b in params.layers]
    p = tmp_path / "m.iqpw"
    write_checkpoint(p, params)
    back = read_checkpoint(p)
    assert back.activation == "relu"
    assert len(back.layers) == 2
    for (w0, b0), (w1, b1) in zip(quantized, back.layers):
        assert np.array_equal(w0, w1)
        assert np.array_equal(b0, b1)


def test_checkpoint_wrong_magic_for_embeddings(tmp_path):
    p = tmp_path / "m.iqpw"
    write_checkpoint(p, init_params([4, 2], seed=0))
    with pytest.raises(FormatError, match="magic"):
        read_embeddings(p)
    q = tmp_path / "e.iqeb"
    write_embeddings(q, [np.ones(3)])
    with pytest.raises(FormatError, match="magic"):
        read_checkpoint(q)


def test_checkpoint_truncated(tmp_path):
    p = tmp_path / "m.iqpw"
    write_checkpoint(p, init_params([4, 2], seed=0))
    p.write_bytes(p.read_bytes()[:-3])
    with pytest.raises(CorruptionError):
        read_checkpoint(p)


def test_checkpoint_unknown_activation(tmp_path):
    p = tmp_path / "m.iqpw"
    write_checkpoint(p, init_params([4, 2], seed=0))
    raw = bytearray(p.read_bytes())
    raw[4:8] = struct.pack("<I", 1)  # keep version valid
    raw[8:12] = struct.pack("<I", 42)  # activation slot
    p.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="activation"):
        read_checkpoint(p)


def test_sidecar_round_trip(tmp_path):
    recs = [
        SidecarRecord(id="a", mos=1.0),
        SidecarRecord(id="b", mos=3.25, raw_score=0.5),
        SidecarRecord(id="c", mos=5.0, raw_score=-2.0),
    ]
    p = tmp_path / "s.jsonl"
    write_sidecar(p, recs)
    assert read_sidecar(p) == recs


def test_sidecar_line_numbers_in_errors(tmp_path):
    p = tmp_path / "s.jsonl"
    p.write_text('{"id": "a", "mos": 2.0}\n{"id": "b"}\n')
    with pytest.raises(FormatError, match=":2:"):
        read_sidecar(p)
    p.write_text('{"id": "a", "mos": 2.0}\nnot json\n')
    with pytest.raises(FormatError, match=":2:"):
        read_sidecar(p)
    p.write_text('{"id": "a", "mos": 2.0}\n{"id": "b", "mos": 9.0}\n')
    with pytest.raises(DataError, match=":2:.*9.0"):
        read_sidecar(p)


def test_sidecar_skips_blank_lines(tmp_path):
    p = tmp_path / "s.jsonl"
    p.write_text('{"id": "a", "mos": 2.0}\n\n{"id": "b", "mos": 3.0}\n')
    assert [r.id for r in read_sidecar(p)] == ["a", "b"]


def test_bank_round_trip(rng, tmp_path):
    feats = np.stack(as_f32(rng.normal(size=(5, 16))))
    bank = PromptBank(text_features=feats, weights=np.arange(1.0, 6.0), temperature=0.07)
    p = tmp_path / "bank.iqeb"
    write_bank(p, bank)
    back = read_bank(p)
    assert np.array_equal(back.text_features, bank.text_features)
    assert np.array_equal(back.weights, bank.weights)
    assert back.temperature == pytest.approx(0.07)
    assert (tmp_path / "bank.jsonl").exists()


def test_bank_sidecar_ids_must_be_levels_in_order(rng, tmp_path):
    feats = np.stack(as_f32(rng.normal(size=(5, 8))))
    bank = PromptBank(text_features=feats, weights=np.arange(1.0, 6.0), temperature=0.1)
    p = tmp_path / "bank.iqeb"
    write_bank(p, bank)
    recs = read_sidecar(tmp_path / "bank.jsonl")
    write_sidecar(tmp_path / "bank.jsonl", list(reversed(recs)))
    with pytest.raises(DataError, match="levels"):
        read_bank(p)


def test_bank_temperature_must_agree(rng, tmp_path):
    feats = np.stack(as_f32(rng.normal(size=(5, 8))))
    bank = PromptBank(text_features=feats, weights=np.arange(1.0, 6.0), temperature=0.1)
    p = tmp_path / "bank.iqeb"
    write_bank(p, bank)
    recs = read_sidecar(tmp_path / "bank.jsonl")
    recs[2] = SidecarRecord(id=recs[2].id, mos=recs[2].mos, raw_score=0.9)
    write_sidecar(tmp_path / "bank.jsonl", recs)
    with pytest.raises(DataError, match="temperature"):
        read_bank(p)


def test_bank_row_count_enforced(rng, tmp_path):
    p = tmp_path / "bank.iqeb"
    write_embeddings(p, list(rng.normal(size=(4, 8))))
    write_sidecar(
        tmp_path / "bank.jsonl",
        [SidecarRecord(id=lv, mos=float(i + 1), raw_score=0.1) for i, lv in enumerate(LEVELS)],
    )
    with pytest.raises(DataError, match="5 rows"):
        read_bank(p)


def test_dataset_round_trip(tmp_path):
    ds = generate(n=30, obs_dim=6, seed=4)
    d = tmp_path / "ds"
    write_dataset(d, ds)
    assert (d / OBSERVATIONS_FILE).exists() and (d / SCORES_FILE).exists()
    back = read_dataset(d)
    assert len(back) == 30
    assert back.provenance == "imported"
    assert np.array_equal(back.obs_matrix(), ds.obs_matrix().astype(np.float32).astype(np.float64))
    # mos and latents survive exactly (json round-trips f64)
    assert np.array_equal(back.mos_array(), ds.mos_array())
    assert back.latents == ds.latents


def test_dataset_without_latents(tmp_path):
    ds = generate(n=20, obs_dim=4, seed=1)
    d = tmp_path / "ds"
    write_dataset(d, ds)
    recs = read_sidecar(d / SCORES_FILE)
    stripped = [SidecarRecord(id=r.id, mos=r.mos) for r in recs]
    write_sidecar(d / SCORES_FILE, stripped)
    assert read_dataset(d).latents is None


def test_dataset_count_mismatch(tmp_path):
    ds = generate(n=20, obs_dim=4, seed=1)
    d = tmp_path / "ds"
    write_dataset(d, ds)
    recs = read_sidecar(d / SCORES_FILE)
    write_sidecar(d / SCORES_FILE, recs[:-1])
    with pytest.raises(DataError, match="20 observation rows but 19"):
        read_dataset(d)


def test_write_is_atomic_no_tmp_left_behind(tmp_path):
    write_embeddings(tmp_path / "e.iqeb", [np.ones(3)])
    assert [f.name for f in tmp_path.iterdir()] == ["e.iqeb"]
