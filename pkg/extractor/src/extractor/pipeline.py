"""The three extraction operations.

`embed_images` and `embed_prompts` write unit-normalized float32 stores in
the evaluation engine's interchange format, stamped with the encoder's model
tag as ``space_tag`` so mismatched encoder pairs are refused downstream.
`translate_prompts` produces the translation manifest entries for the
engine's translated prompt family.

Inference runs in batches; all file writes are sequential so manifests stay
ordered and repeated runs are byte-identical. Each operation records its
model tag, row counts, and output hashes in ``extract_manifest.json`` inside
the output directory.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .backends import Encoder, Translator, load_encoder, load_translator
from .errors import ExtractorError, JobFileError, TranslationFailure, UnreadableImage
from .job import ExtractorJob
from .wire import (
    canonical_dumps,
    read_metadata_ids,
    read_plan_rows,
    read_topics,
    write_store,
    write_translations,
)

__all__ = [
    "OpResult",
    "DEFAULT_PROMPT_TEMPLATE",
    "embed_images",
    "embed_prompts",
    "translate_prompts",
    "write_translation_manifest",
]

# The default prompt shape of the evaluation engine's key scheme; translation
# targets are built from it so manifest entries drop straight into that flow.
DEFAULT_PROMPT_TEMPLATE = "This is a photo of {}"

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".webp", ".bmp")

MANIFEST_NAME = "extract_manifest.json"


@dataclass(frozen=True)
class OpResult:
    """What one operation produced: row count, space, files, and hashes."""

    op: str
    rows: int
    model_tag: str
    outputs: Mapping[str, str]
    paths: tuple[Path, ...]
    dim: int | None = None

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "op": self.op,
            "rows": self.rows,
            "model_tag": self.model_tag,
            "outputs": dict(self.outputs),
            "paths": [str(p) for p in self.paths],
        }
        if self.dim is not None:
            payload["dim"] = self.dim
        return payload


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _unit_rows(matrix: np.ndarray, dim: int) -> np.ndarray:
    """Renormalize defensively so any well-scaled backend yields unit rows."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != dim:
        raise ExtractorError(
            f"encoder returned shape {matrix.shape}, expected (n, {dim})"
        )
    if matrix.shape[0] == 0:
        return matrix
    norms = np.sqrt(np.einsum("ij,ij->i", matrix, matrix))
    bad = np.flatnonzero(~np.isfinite(norms) | (norms == 0.0))
    if bad.size:
        raise ExtractorError(f"encoder returned a zero or non-finite row (row {bad[0]})")
    return matrix / norms[:, None]


def _in_batches(
    encode: Callable[[Sequence[Any]], np.ndarray],
    items: Sequence[Any],
    batch_size: int,
    dim: int,
) -> np.ndarray:
    chunks = [
        _unit_rows(encode(items[i:i + batch_size]), dim)
        for i in range(0, len(items), batch_size)
    ]
    return np.vstack(chunks) if chunks else np.empty((0, dim))


def _update_manifest(out_dir: Path, section: str, payload: dict[str, Any]) -> Path:
    """Merge one operation's record into extract_manifest.json."""
    path = out_dir / MANIFEST_NAME
    manifest: dict[str, Any] = {}
    if path.is_file():
        try:
            loaded = json.loads(path.read_text(encoding="utf-8"))
            if isinstance(loaded, dict):
                manifest = loaded
        except json.JSONDecodeError:
            pass  # the manifest is a derived artifact; rebuild it
    manifest[section] = payload
    out_dir.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_dumps(manifest), encoding="utf-8")
    return path


def _image_path(root: Path, image_id: str) -> Path:
    candidates = [root / image_id, root / "images" / image_id]
    candidates += [root / f"{image_id}{ext}" for ext in IMAGE_EXTENSIONS]
    candidates += [root / "images" / f"{image_id}{ext}" for ext in IMAGE_EXTENSIONS]
    for candidate in candidates:
        if candidate.is_file():
            return candidate
    raise UnreadableImage(
        root / image_id,
        "no image file found (looked beside metadata.csv and under images/ "
        f"with extensions {', '.join(IMAGE_EXTENSIONS)})",
    )


def embed_images(job: ExtractorJob, *, encoder: Encoder | None = None) -> OpResult:
    """Embed every image named in metadata.csv into ``out_dir/images.f32``.

    One row per distinct image id, rows sorted by id, dim set by the encoder,
    and the sidecar stamped normalized with the encoder's tag.
    """
    encoder = encoder or load_encoder(job.model_tag)
    ids = read_metadata_ids(job.image_root / "metadata.csv")
    paths = [_image_path(job.image_root, image_id) for image_id in ids]
    matrix = _in_batches(encoder.encode_images, paths, job.batch_size, encoder.dim)
    store_path, sidecar = write_store(
        job.out_dir / "images.f32", ids, matrix, space_tag=encoder.tag
    )
    outputs = {store_path.name: _sha256(store_path), sidecar.name: _sha256(sidecar)}
    manifest = _update_manifest(job.out_dir, "images", {
        "model_tag": encoder.tag,
        "rows": len(ids),
        "dim": encoder.dim,
        "preprocessing": getattr(encoder, "preprocessing", "backend defaults"),
        "outputs": outputs,
    })
    return OpResult(
        op="images", rows=len(ids), model_tag=encoder.tag, outputs=outputs,
        paths=(store_path, sidecar, manifest), dim=encoder.dim,
    )


def embed_prompts(job: ExtractorJob, *, encoder: Encoder | None = None) -> OpResult:
    """Embed the plan's prompt texts into ``out_dir/prompts.f32``.

    Row ids are the plan's prompt keys, in plan order, so the store is
    addressable by the same keys the evaluation engine derives.
    """
    if job.plan_path is None:
        raise JobFileError("job has no plan_path; prompt embedding needs the plan export")
    encoder = encoder or load_encoder(job.model_tag)
    plan_rows = read_plan_rows(job.plan_path)
    keys = [row["key"] for row in plan_rows]
    texts = [row["text"] for row in plan_rows]
    matrix = _in_batches(encoder.encode_texts, texts, job.batch_size, encoder.dim)
    store_path, sidecar = write_store(
        job.out_dir / "prompts.f32", keys, matrix, space_tag=encoder.tag
    )
    outputs = {store_path.name: _sha256(store_path), sidecar.name: _sha256(sidecar)}
    manifest = _update_manifest(job.out_dir, "prompts", {
        "model_tag": encoder.tag,
        "rows": len(keys),
        "dim": encoder.dim,
        "plan": str(job.plan_path),
        "outputs": outputs,
    })
    return OpResult(
        op="prompts", rows=len(keys), model_tag=encoder.tag, outputs=outputs,
        paths=(store_path, sidecar, manifest), dim=encoder.dim,
    )


def translate_prompts(
    topics: Mapping[str, str],
    languages: Sequence[str],
    *,
    translator: Translator,
) -> dict[str, str]:
    """One manifest entry per (topic, language): the default prompt for the
    topic's label, translated. Keys use the engine's ``topic|language`` form."""
    entries: dict[str, str] = {}
    for topic_id in sorted(topics):
        text = DEFAULT_PROMPT_TEMPLATE.format(topics[topic_id])
        for language in sorted(languages):
            try:
                entries[f"{topic_id}|{language}"] = translator.translate(text, language)
            except TranslationFailure as exc:
                raise TranslationFailure(topic_id, language, str(exc)) from exc
    return entries


def write_translation_manifest(
    job: ExtractorJob,
    topics_path: str | Path,
    *,
    translator: Translator | None = None,
    chrf_scores: Mapping[str, float] | None = None,
) -> OpResult:
    """Translate every topic in a catalog and write ``out_dir/translations.json``."""
    translator = translator or load_translator(job.translator_tag)
    topics = read_topics(topics_path)
    languages = job.translation_targets()
    entries = translate_prompts(topics, languages, translator=translator)
    path = write_translations(
        job.out_dir / "translations.json", entries,
        source_model_tag=translator.tag, chrf_scores=chrf_scores,
    )
    outputs = {path.name: _sha256(path)}
    manifest = _update_manifest(job.out_dir, "translations", {
        "model_tag": translator.tag,
        "entries": len(entries),
        "topics": len(topics),
        "languages": sorted(languages),
        "outputs": outputs,
    })
    return OpResult(
        op="translate", rows=len(entries), model_tag=translator.tag,
        outputs=outputs, paths=(path, manifest),
    )
