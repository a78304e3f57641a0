"""Shared plumbing: labeled sub-seeds, JSONL io, stable JSON serialization."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Iterable, Iterator


def derive_seed(master: int, label: str) -> int:
    """Derive a stable 63-bit sub-seed for a named stage of a run.

    Every source of randomness in the pipeline draws its seed through this
    function, so a single master seed fixes all stages while keeping them
    independently reproducible.
    """
    digest = hashlib.sha256(f"{master}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFF_FFFF_FFFF_FFFF


def stable_json(obj: Any) -> str:
    """Serialize with sorted keys and fixed separators (byte-reproducible)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_json(obj: Any, path: str | Path) -> None:
    Path(path).write_text(stable_json(obj) + "\n", encoding="utf-8")


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_jsonl(records: Iterable[dict], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(stable_json(rec))
            fh.write("\n")
            n += 1
    return n


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | Path) -> str:
    return sha256_hex(Path(path).read_bytes())
