"""Canonical JSON serialization and content hashing.

All artifacts the package writes go through canonical_dumps so that repeated
runs produce byte-identical files: sorted keys, two-space indent, trailing
newline, full float precision via repr round-tripping.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

from .errors import MissingFile

__all__ = [
    "canonical_dumps",
    "canonical_bytes",
    "write_json",
    "read_json",
    "sha256_bytes",
    "sha256_file",
]


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def canonical_bytes(obj: Any) -> bytes:
    return canonical_dumps(obj).encode("utf-8")


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_bytes(canonical_bytes(obj))


def read_json(path: str | Path) -> Any:
    p = Path(path)
    if not p.is_file():
        raise MissingFile(p)
    with p.open("r", encoding="utf-8") as fh:
        return json.load(fh)


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | Path) -> str:
    p = Path(path)
    if not p.is_file():
        raise MissingFile(p)
    h = hashlib.sha256()
    with p.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
