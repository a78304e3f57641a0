"""Binary model checkpoints with integrity checking.

Layout, all integers little-endian:

    b"RSEC" | u32 version | u32 header_len | header JSON (utf-8)
    | raw float32 tensor data | u32 CRC-32 of everything prior

The header carries the model config, adapter config, free-form metadata,
and a tensor directory (name, shape, byte offset into the data region,
frozen flag).  Tensors are stored sorted by name so identical parameters
always serialize to identical bytes.  Only float32 models are accepted;
float64 is a gradient-checking convenience, not a storage format.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from ..utils import stable_json
from .encoder import EncoderConfig, LoraConfig, ModelParameters

MAGIC = b"RSEC"
VERSION = 1


class CheckpointError(Exception):
    """Malformed, corrupt, or incompatible checkpoint file."""


def save_checkpoint(params: ModelParameters, path: str | Path) -> None:
    names = sorted(params.tensors)
    directory = []
    blobs = []
    offset = 0
    for name in names:
        t = params.tensors[name]
        if t.dtype != np.float32:
            raise CheckpointError(f"tensor {name!r} is {t.dtype}, checkpoints store float32")
        raw = np.ascontiguousarray(t, dtype="<f4").tobytes()
        directory.append(
            {
                "name": name,
                "shape": list(t.shape),
                "offset": offset,
                "frozen": name in params.frozen,
            }
        )
        blobs.append(raw)
        offset += len(raw)

    header = stable_json(
        {
            "config": params.config.to_dict(),
            "lora": None if params.lora is None else params.lora.to_dict(),
            "tensors": directory,
            "meta": params.meta,
        }
    ).encode("utf-8")

    body = MAGIC + struct.pack("<II", VERSION, len(header)) + header + b"".join(blobs)
    Path(path).write_bytes(body + struct.pack("<I", zlib.crc32(body)))


def load_checkpoint(path: str | Path) -> ModelParameters:
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 12:
        raise CheckpointError("truncated checkpoint file")
    body, crc_bytes = raw[:-4], raw[-4:]
    if struct.unpack("<I", crc_bytes)[0] != zlib.crc32(body):
        raise CheckpointError("checksum mismatch")
    if body[:4] != MAGIC:
        raise CheckpointError(f"bad magic bytes {body[:4]!r}")
    version, header_len = struct.unpack("<II", body[4:12])
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header_end = 12 + header_len
    if header_end > len(body):
        raise CheckpointError("truncated checkpoint header")
    try:
        header = json.loads(body[12:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"unreadable checkpoint header: {e}") from e

    cfg = EncoderConfig(**header["config"])
    lora = None
    if header["lora"] is not None:
        lraw = header["lora"]
        lora = LoraConfig(rank=lraw["rank"], alpha=lraw["alpha"], targets=tuple(lraw["targets"]))

    data = body[header_end:]
    tensors: dict[str, np.ndarray] = {}
    frozen = set()
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        n_bytes = 4 * int(np.prod(shape, dtype=np.int64)) if shape else 4
        lo = entry["offset"]
        if lo + n_bytes > len(data):
            raise CheckpointError(f"tensor {entry['name']!r} extends past end of data")
        arr = np.frombuffer(data, dtype="<f4", count=n_bytes // 4, offset=lo)
        tensors[entry["name"]] = arr.reshape(shape).copy()
        if entry["frozen"]:
            frozen.add(entry["name"])

    return ModelParameters(
        config=cfg,
        tensors=tensors,
        lora=lora,
        frozen=frozenset(frozen),
        meta=header.get("meta", {}),
    )
