"""Readers and writers for the evaluation engine's on-disk interchange formats.

The two packages share bytes on disk, not code, so this module restates the
formats it emits and consumes:

* metadata CSV      header ``image_id,country_code,monthly_income_usd,topic_id``
* topic catalog CSV header ``topic_id,label,subjective``
* embedding store   little-endian float32 row-major payload at ``<path>`` plus
  a JSON sidecar at ``<path>.json`` with keys dim, rows, ids, normalized,
  space_tag
* translations      JSON object ``{"source_model_tag": ..., "entries":
  {"<topic_id>|<language_code>": text, ...}, "chrf_scores": {...}}``
* prompt plan       JSON list of ``{"key": ..., "text": ..., ...}`` rows, as
  written by the engine's ``plan --keys`` export

JSON files are written canonically (sorted keys, two-space indent, UTF-8,
trailing newline) so repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ExtractorError, JobFileError, MissingInput

__all__ = [
    "canonical_dumps",
    "write_canonical_json",
    "read_json",
    "write_store",
    "read_store",
    "read_metadata_ids",
    "read_topics",
    "read_plan_rows",
    "write_translations",
]

NORM_TOLERANCE = 1e-6

_METADATA_COLUMNS = ("image_id", "country_code", "monthly_income_usd", "topic_id")
_TOPIC_COLUMNS = ("topic_id", "label", "subjective")
_SIDECAR_KEYS = ("dim", "ids", "normalized", "rows", "space_tag")


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_canonical_json(path: str | Path, obj: Any) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(canonical_dumps(obj), encoding="utf-8")


def read_json(path: str | Path) -> Any:
    p = Path(path)
    if not p.is_file():
        raise MissingInput(p)
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise JobFileError(f"{p} is not valid JSON: {exc}", path=p) from exc


def _read_csv(path: str | Path, columns: Sequence[str]) -> list[dict[str, str]]:
    p = Path(path)
    if not p.is_file():
        raise MissingInput(p)
    with p.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != set(columns):
            raise JobFileError(
                f"{p}: expected columns {','.join(columns)}", path=p
            )
        rows = []
        for i, row in enumerate(reader, start=1):
            if None in row or any(v is None for v in row.values()):
                raise JobFileError(f"{p}: row {i} has the wrong number of fields", path=p)
            rows.append(row)
        return rows


def read_metadata_ids(path: str | Path) -> tuple[str, ...]:
    """Distinct image ids from a metadata CSV, sorted."""
    ids = set()
    for i, row in enumerate(_read_csv(path, _METADATA_COLUMNS), start=1):
        image_id = row["image_id"].strip()
        if not image_id:
            raise JobFileError(f"{path}: row {i} has an empty image_id", path=path)
        ids.add(image_id)
    return tuple(sorted(ids))


def read_topics(path: str | Path) -> dict[str, str]:
    """topic_id -> label from a topic catalog CSV."""
    topics: dict[str, str] = {}
    for i, row in enumerate(_read_csv(path, _TOPIC_COLUMNS), start=1):
        topic_id = row["topic_id"].strip()
        label = row["label"].strip()
        if not topic_id or not label:
            raise JobFileError(f"{path}: row {i} has an empty topic_id or label", path=path)
        if topic_id in topics:
            raise JobFileError(f"{path}: duplicate topic id {topic_id!r}", path=path)
        topics[topic_id] = label
    return topics


def read_plan_rows(path: str | Path) -> list[dict[str, Any]]:
    """Prompt rows from a plan export, order preserved, keys unique."""
    obj = read_json(path)
    if not isinstance(obj, list):
        raise JobFileError(f"{path}: expected a JSON list of prompt rows", path=path)
    seen: set[str] = set()
    for i, row in enumerate(obj, start=1):
        if not isinstance(row, dict):
            raise JobFileError(f"{path}: row {i} is not an object", path=path)
        key = row.get("key")
        text = row.get("text")
        if not isinstance(key, str) or not key:
            raise JobFileError(f"{path}: row {i} has no prompt key", path=path)
        if not isinstance(text, str) or not text.strip():
            raise JobFileError(f"{path}: row {i} ({key!r}) has no text", path=path)
        if key in seen:
            raise JobFileError(f"{path}: duplicate prompt key {key!r}", path=path)
        seen.add(key)
    return obj


def write_store(
    path: str | Path,
    ids: Sequence[str],
    matrix: np.ndarray,
    *,
    space_tag: str,
) -> tuple[Path, Path]:
    """Write a unit-normalized embedding store: f32 payload plus sidecar."""
    p = Path(path)
    ids = [str(i) for i in ids]
    if len(set(ids)) != len(ids):
        raise ExtractorError("embedding store ids are not unique")
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise ExtractorError(
            f"matrix shape {matrix.shape} does not match {len(ids)} ids"
        )
    if not np.isfinite(matrix).all():
        raise ExtractorError("embedding matrix contains non-finite values")
    payload = np.ascontiguousarray(matrix, dtype="<f4")
    if len(ids):
        norms = np.sqrt(np.einsum("ij,ij->i", payload, payload, dtype=np.float64))
        worst = int(np.abs(norms - 1.0).argmax())
        if abs(norms[worst] - 1.0) > NORM_TOLERANCE:
            raise ExtractorError(
                f"row {worst} has norm {norms[worst]!r}; stores must be unit-normalized"
            )
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_bytes(payload.tobytes())
    sidecar = Path(str(p) + ".json")
    write_canonical_json(sidecar, {
        "dim": int(matrix.shape[1]),
        "rows": len(ids),
        "ids": ids,
        "normalized": True,
        "space_tag": space_tag,
    })
    return p, sidecar


def read_store(path: str | Path) -> tuple[dict[str, Any], np.ndarray]:
    """Parse a store back: (sidecar header, float32 matrix)."""
    p = Path(path)
    if not p.is_file():
        raise MissingInput(p)
    header = read_json(str(p) + ".json")
    if not isinstance(header, dict) or set(header) != set(_SIDECAR_KEYS):
        raise JobFileError(f"{p}.json: expected keys {sorted(_SIDECAR_KEYS)}", path=p)
    dim, rows = int(header["dim"]), int(header["rows"])
    payload = p.read_bytes()
    if len(payload) != 4 * dim * rows:
        raise JobFileError(
            f"{p}: payload is {len(payload)} bytes, header says {4 * dim * rows}", path=p
        )
    matrix = np.frombuffer(payload, dtype="<f4").reshape(rows, dim)
    return header, matrix


def write_translations(
    path: str | Path,
    entries: Mapping[str, str],
    *,
    source_model_tag: str,
    chrf_scores: Mapping[str, float] | None = None,
) -> Path:
    """Write the wrapped translation manifest, entries key-sorted."""
    p = Path(path)
    write_canonical_json(p, {
        "source_model_tag": source_model_tag,
        "entries": dict(sorted(entries.items())),
        "chrf_scores": {k: float(v) for k, v in sorted((chrf_scores or {}).items())},
    })
    return p
