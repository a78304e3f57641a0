import struct
import zlib

import numpy as np
import pytest

from rsec.model import (
    CheckpointError,
    EncoderConfig,
    LoraConfig,
    apply_lora,
    init_model,
    load_checkpoint,
    save_checkpoint,
)

TINY = EncoderConfig(vocab_size=40, d=8, layers=1, heads=2, ff_dim=16, max_len=6)


def _roundtrip(params, tmp_path):
    path = tmp_path / "model.rsec"
    save_checkpoint(params, path)
    return load_checkpoint(path), path


def test_round_trip_bit_exact(tmp_path):
    params = init_model(TINY, seed=1)
    params.meta["note"] = "hello"
    loaded, _ = _roundtrip(params, tmp_path)
    assert loaded.config == TINY
    assert loaded.lora is None
    assert loaded.frozen == frozenset()
    assert loaded.meta == {"note": "hello"}
    assert set(loaded.tensors) == set(params.tensors)
    for name, t in params.tensors.items():
        assert loaded.tensors[name].dtype == np.float32
        assert np.array_equal(loaded.tensors[name], t), name


def test_round_trip_with_adapters(tmp_path):
    params = apply_lora(init_model(TINY, seed=2), LoraConfig(rank=3, alpha=6), seed=3)
    loaded, _ = _roundtrip(params, tmp_path)
    assert loaded.lora == LoraConfig(rank=3, alpha=6)
    assert loaded.frozen == params.frozen
    for name, t in params.tensors.items():
        assert np.array_equal(loaded.tensors[name], t), name


def test_save_is_byte_deterministic(tmp_path):
    params = init_model(TINY, seed=4)
    a = tmp_path / "a.rsec"
    b = tmp_path / "b.rsec"
    save_checkpoint(params, a)
    save_checkpoint(params.copy(), b)
    assert a.read_bytes() == b.read_bytes()


def test_magic_and_trailer(tmp_path):
    params = init_model(TINY, seed=0)
    path = tmp_path / "m.rsec"
    save_checkpoint(params, path)
    raw = path.read_bytes()
    assert raw[:4] == b"RSEC"
    (version,) = struct.unpack("<I", raw[4:8])
    assert version == 1
    (crc,) = struct.unpack("<I", raw[-4:])
    assert crc == zlib.crc32(raw[:-4])


def test_rejects_float64(tmp_path):
    params = init_model(TINY, seed=0, dtype=np.float64)
    with pytest.raises(CheckpointError, match="float32"):
        save_checkpoint(params, tmp_path / "m.rsec")


def test_truncated_file(tmp_path):
    params = init_model(TINY, seed=0)
    path = tmp_path / "m.rsec"
    save_checkpoint(params, path)
    raw = path.read_bytes()
    for cut in (0, 3, 10, len(raw) // 2, len(raw) - 1):
        path.write_bytes(raw[:cut])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


def test_flipped_byte_fails_crc(tmp_path):
    params = init_model(TINY, seed=0)
    path = tmp_path / "m.rsec"
    save_checkpoint(params, path)
    raw = bytearray(path.read_bytes())
    for pos in (6, 20, len(raw) // 2, len(raw) - 6):
        broken = bytearray(raw)
        broken[pos] ^= 0xFF
        path.write_bytes(bytes(broken))
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


def test_bad_magic(tmp_path):
    params = init_model(TINY, seed=0)
    path = tmp_path / "m.rsec"
    save_checkpoint(params, path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    # keep the trailer honest so the magic check itself is what fires
    raw[-4:] = struct.pack("<I", zlib.crc32(bytes(raw[:-4])))
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_unsupported_version(tmp_path):
    params = init_model(TINY, seed=0)
    path = tmp_path / "m.rsec"
    save_checkpoint(params, path)
    raw = bytearray(path.read_bytes())
    raw[4:8] = struct.pack("<I", 99)
    raw[-4:] = struct.pack("<I", zlib.crc32(bytes(raw[:-4])))
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)


def test_garbage_header(tmp_path):
    body = b"RSEC" + struct.pack("<II", 1, 9) + b"not json!"
    path = tmp_path / "m.rsec"
    path.write_bytes(body + struct.pack("<I", zlib.crc32(body)))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_missing_file(tmp_path):
    with pytest.raises((CheckpointError, OSError)):
        load_checkpoint(tmp_path / "absent.rsec")


def test_loaded_model_usable(tmp_path):
    from rsec.model import forward

    params = init_model(TINY, seed=5)
    loaded, _ = _roundtrip(params, tmp_path)
    ids = np.array([[2, 7, 9, 0, 0, 0]])
    assert np.array_equal(forward(params, ids), forward(loaded, ids))
