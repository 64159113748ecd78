"""Dataset loading and validation.

Wire formats:

* metadata CSV      header ``image_id,country_code,monthly_income_usd,topic_id``
* topic catalog CSV header ``topic_id,label,subjective`` (subjective is 0/1)
* country CSV       header ``country_code,display_name,continent,wb_class,major_language``
  (major_language may be empty; a 63-country reference table is bundled)
* embedding store   little-endian float32 row-major payload at ``<path>`` plus a
  JSON sidecar at ``<path>.json`` with keys dim, rows, ids, normalized, space_tag
* translations      JSON object keyed ``"<topic_id>|<language_code>"`` -> text,
  either flat or wrapped as {"entries": ..., "source_model_tag": ..., "chrf_scores": ...}

Every loader fails loudly: missing files, truncated payloads, non-finite
values, duplicate ids, and dangling references are hard errors, never warnings.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateImageId,
    MissingEmbedding,
    MissingFile,
    MissingTranslation,
    NonFiniteValue,
    NotNormalized,
    SchemaViolation,
    TruncatedMatrix,
    UnknownCountry,
)
from .jsonio import read_json, write_json
from .strata import CONTINENTS, INCOME_CLASSES

__all__ = [
    "ImageRecord",
    "TopicEntry",
    "TopicCatalog",
    "CountryProfile",
    "Dataset",
    "EmbeddingStore",
    "TranslationManifest",
    "load_images_csv",
    "load_topics_csv",
    "load_countries_csv",
    "bundled_country_reference",
    "load_metadata",
    "write_metadata",
    "load_embeddings",
    "write_embeddings",
    "bind_embeddings",
    "load_translations",
    "write_translations",
]

NORM_TOLERANCE = 1e-6

_COUNTRY_CODE_RE = re.compile(r"^[A-Z]{2}$")

_METADATA_FIELDS = ("image_id", "country_code", "monthly_income_usd", "topic_id")
_TOPIC_FIELDS = ("topic_id", "label", "subjective")
_COUNTRY_FIELDS = ("country_code", "display_name", "continent", "wb_class", "major_language")


@dataclass(frozen=True)
class ImageRecord:
    """One image: identity, provenance, and its row in the image store.

    embedding_row is None until bind_embeddings attaches a store.
    """

    image_id: str
    country_code: str
    monthly_income_usd: float
    topic_id: str
    embedding_row: int | None = None


class TopicEntry(NamedTuple):
    label: str
    subjective: bool


@dataclass(frozen=True)
class TopicCatalog:
    """topic_id -> (label, subjective). Labels are unique."""

    entries: Mapping[str, TopicEntry]

    def label(self, topic_id: str) -> str:
        return self.entries[topic_id].label

    def is_subjective(self, topic_id: str) -> bool:
        return self.entries[topic_id].subjective

    def objective_ids(self) -> tuple[str, ...]:
        return tuple(sorted(t for t, e in self.entries.items() if not e.subjective))

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class CountryProfile:
    country_code: str
    display_name: str
    continent: str
    wb_class: str
    major_language: str | None = None


@dataclass(frozen=True)
class Dataset:
    """Validated bundle of records, topics, and country profiles.

    Records are sorted by image_id, so loading a row-permuted metadata file
    yields an identical Dataset.
    """

    images: tuple[ImageRecord, ...]
    topics: TopicCatalog
    countries: Mapping[str, CountryProfile]

    def pool(self) -> tuple[ImageRecord, ...]:
        """Images on objective topics: the retrieval pool."""
        return tuple(r for r in self.images if not self.topics.is_subjective(r.topic_id))

    def incomes(self) -> tuple[float, ...]:
        return tuple(r.monthly_income_usd for r in self.images)


def _open_csv(path: str | Path, expected_fields: Sequence[str]) -> list[dict[str, str]]:
    p = Path(path)
    if not p.is_file():
        raise MissingFile(p)
    with p.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != set(expected_fields):
            raise SchemaViolation(
                p, 0, "header", f"expected columns {','.join(expected_fields)}"
            )
        rows = []
        for i, row in enumerate(reader, start=1):
            if None in row or any(v is None for v in row.values()):
                raise SchemaViolation(p, i, "row", "wrong number of fields")
            rows.append(row)
        return rows


def load_images_csv(path: str | Path) -> list[ImageRecord]:
    """Parse the metadata CSV. Cross-references are checked by load_metadata."""
    records = []
    for i, row in enumerate(_open_csv(path, _METADATA_FIELDS), start=1):
        image_id = row["image_id"].strip()
        if not image_id:
            raise SchemaViolation(path, i, "image_id", "empty")
        code = row["country_code"].strip()
        if not _COUNTRY_CODE_RE.match(code):
            raise SchemaViolation(path, i, "country_code", f"{code!r} is not a 2-letter code")
        try:
            income = float(row["monthly_income_usd"])
        except ValueError as exc:
            raise SchemaViolation(path, i, "monthly_income_usd", str(exc)) from exc
        if not np.isfinite(income) or income <= 0:
            raise SchemaViolation(path, i, "monthly_income_usd", "must be a positive number")
        topic_id = row["topic_id"].strip()
        if not topic_id:
            raise SchemaViolation(path, i, "topic_id", "empty")
        records.append(ImageRecord(image_id, code, income, topic_id))
    return records


def load_topics_csv(path: str | Path) -> TopicCatalog:
    entries: dict[str, TopicEntry] = {}
    labels: set[str] = set()
    for i, row in enumerate(_open_csv(path, _TOPIC_FIELDS), start=1):
        topic_id = row["topic_id"].strip()
        if not topic_id:
            raise SchemaViolation(path, i, "topic_id", "empty")
        if topic_id in entries:
            raise SchemaViolation(path, i, "topic_id", f"duplicate topic id {topic_id!r}")
        label = row["label"].strip()
        if not label:
            raise SchemaViolation(path, i, "label", "empty")
        if label in labels:
            raise SchemaViolation(path, i, "label", f"duplicate label {label!r}")
        flag = row["subjective"].strip()
        if flag not in ("0", "1"):
            raise SchemaViolation(path, i, "subjective", f"expected 0 or 1, got {flag!r}")
        entries[topic_id] = TopicEntry(label, flag == "1")
        labels.add(label)
    return TopicCatalog(entries)


def load_countries_csv(path: str | Path) -> dict[str, CountryProfile]:
    profiles: dict[str, CountryProfile] = {}
    for i, row in enumerate(_open_csv(path, _COUNTRY_FIELDS), start=1):
        code = row["country_code"].strip()
        if not _COUNTRY_CODE_RE.match(code):
            raise SchemaViolation(path, i, "country_code", f"{code!r} is not a 2-letter code")
        if code in profiles:
            raise SchemaViolation(path, i, "country_code", f"duplicate country {code!r}")
        name = row["display_name"].strip()
        if not name:
            raise SchemaViolation(path, i, "display_name", "empty")
        continent = row["continent"].strip()
        if continent not in CONTINENTS:
            raise SchemaViolation(path, i, "continent", f"{continent!r} not in {CONTINENTS}")
        wb_class = row["wb_class"].strip()
        if wb_class not in INCOME_CLASSES:
            raise SchemaViolation(path, i, "wb_class", f"{wb_class!r} not in {INCOME_CLASSES}")
        language = row["major_language"].strip() or None
        profiles[code] = CountryProfile(code, name, continent, wb_class, language)
    return profiles


def bundled_country_reference() -> dict[str, CountryProfile]:
    """The 63-country reference table shipped with the package."""
    ref = resources.files("promptstrata.data").joinpath("countries.csv")
    with resources.as_file(ref) as path:
        return load_countries_csv(path)


def load_metadata(
    path: str | Path,
    topics_path: str | Path | None = None,
    countries_path: str | Path | None = None,
) -> Dataset:
    """Load and cross-validate the full metadata bundle.

    `path` is the metadata CSV, or a directory holding metadata.csv plus
    topics.csv (and optionally countries.csv). When no country table is given
    the bundled reference is used.
    """
    p = Path(path)
    if p.is_dir():
        candidate = p / "countries.csv"
        metadata_path = p / "metadata.csv"
        topics_path = topics_path or p / "topics.csv"
        countries_path = countries_path or (candidate if candidate.is_file() else None)
    else:
        metadata_path = p
        if topics_path is None:
            topics_path = p.parent / "topics.csv"
    records = load_images_csv(metadata_path)
    topics = load_topics_csv(topics_path)
    countries = (
        load_countries_csv(countries_path) if countries_path is not None
        else bundled_country_reference()
    )

    seen: set[str] = set()
    for i, rec in enumerate(records, start=1):
        if rec.image_id in seen:
            raise DuplicateImageId(rec.image_id)
        seen.add(rec.image_id)
        if rec.country_code not in countries:
            raise UnknownCountry(rec.country_code, row=i)
        if rec.topic_id not in topics.entries:
            raise SchemaViolation(
                metadata_path, i, "topic_id", f"unknown topic {rec.topic_id!r}"
            )
    records.sort(key=lambda r: r.image_id)
    return Dataset(tuple(records), topics, countries)


def write_metadata(dataset: Dataset, out_dir: str | Path) -> dict[str, Path]:
    """Write metadata.csv, topics.csv, and countries.csv for a dataset."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "metadata": out / "metadata.csv",
        "topics": out / "topics.csv",
        "countries": out / "countries.csv",
    }
    with paths["metadata"].open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_METADATA_FIELDS)
        for r in dataset.images:
            writer.writerow([r.image_id, r.country_code, repr(r.monthly_income_usd), r.topic_id])
    with paths["topics"].open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_TOPIC_FIELDS)
        for topic_id in sorted(dataset.topics.entries):
            entry = dataset.topics.entries[topic_id]
            writer.writerow([topic_id, entry.label, int(entry.subjective)])
    with paths["countries"].open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_COUNTRY_FIELDS)
        for code in sorted(dataset.countries):
            c = dataset.countries[code]
            writer.writerow([c.country_code, c.display_name, c.continent, c.wb_class,
                             c.major_language or ""])
    return paths


@dataclass(frozen=True)
class EmbeddingStore:
    """An id-addressable embedding matrix.

    The payload on disk is float32; in memory rows are widened to float64 so
    normalization and scoring happen at double precision. `normalized` records
    whether rows are unit vectors (within NORM_TOLERANCE).
    """

    dim: int
    ids: tuple[str, ...]
    matrix: np.ndarray
    normalized: bool
    space_tag: str
    _row_index: Mapping[str, int] = field(repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise DimensionMismatch(f"dim must be positive, got {self.dim}")
        if self.matrix.shape != (len(self.ids), self.dim):
            raise DimensionMismatch(
                f"matrix shape {self.matrix.shape} != ({len(self.ids)}, {self.dim})"
            )
        if len(set(self.ids)) != len(self.ids):
            raise DuplicateImageId("embedding store ids are not unique")
        if not self._row_index:
            object.__setattr__(self, "_row_index", {k: i for i, k in enumerate(self.ids)})

    @property
    def rows(self) -> int:
        return len(self.ids)

    def row_of(self, key: str) -> int:
        try:
            return self._row_index[key]
        except KeyError:
            raise MissingEmbedding(key) from None

    def vector(self, key: str) -> np.ndarray:
        return self.matrix[self.row_of(key)]

    def normalize(self) -> "EmbeddingStore":
        """Return a unit-normalized copy (self if already normalized)."""
        if self.normalized:
            return self
        norms = np.sqrt(np.einsum("ij,ij->i", self.matrix, self.matrix))
        bad = np.flatnonzero(~np.isfinite(norms) | (norms == 0.0))
        if bad.size:
            raise NonFiniteValue(int(bad[0]), "row cannot be normalized")
        unit = self.matrix / norms[:, None]
        return replace(self, matrix=unit, normalized=True)


def _check_finite(matrix: np.ndarray) -> None:
    finite = np.isfinite(matrix)
    if not finite.all():
        row = int(np.flatnonzero(~finite.all(axis=1))[0])
        raise NonFiniteValue(row)


def load_embeddings(path: str | Path, normalize: bool = True) -> EmbeddingStore:
    """Load a float32 payload plus its JSON sidecar.

    With normalize=True (the default) raw stores are unit-normalized on load;
    stores whose sidecar already claims normalized=true are verified against
    NORM_TOLERANCE instead and kept bit-exact.
    """
    p = Path(path)
    if not p.is_file():
        raise MissingFile(p)
    header = read_json(str(p) + ".json")
    required = {"dim", "rows", "ids", "normalized", "space_tag"}
    if not isinstance(header, dict) or not required.issubset(header):
        raise SchemaViolation(str(p) + ".json", 0, "header",
                              f"expected keys {sorted(required)}")
    dim = int(header["dim"])
    rows = int(header["rows"])
    ids = tuple(str(x) for x in header["ids"])
    if dim <= 0 or rows < 0:
        raise DimensionMismatch(f"bad header dim={dim} rows={rows}")
    if len(ids) != rows:
        raise DimensionMismatch(f"header lists {len(ids)} ids for {rows} rows")
    payload = p.read_bytes()
    expected = 4 * dim * rows
    if len(payload) != expected:
        raise TruncatedMatrix(p, expected, len(payload))
    matrix = np.frombuffer(payload, dtype="<f4").reshape(rows, dim).astype(np.float64)
    _check_finite(matrix)
    store = EmbeddingStore(dim, ids, matrix, bool(header["normalized"]),
                           str(header["space_tag"]))
    if store.normalized:
        norms = np.sqrt(np.einsum("ij,ij->i", matrix, matrix)) if rows else np.empty(0)
        if rows and np.abs(norms - 1.0).max() > NORM_TOLERANCE:
            row = int(np.abs(norms - 1.0).argmax())
            raise NotNormalized(f"header claims normalized but row {row} has norm {norms[row]!r}")
        return store
    return store.normalize() if normalize else store


def write_embeddings(store: EmbeddingStore, path: str | Path) -> None:
    """Write the payload and sidecar. Loading a file and writing it back with
    the normalized flag unchanged is byte-identical."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    _check_finite(store.matrix)
    p.write_bytes(np.ascontiguousarray(store.matrix, dtype="<f4").tobytes())
    write_json(str(p) + ".json", {
        "dim": store.dim,
        "rows": store.rows,
        "ids": list(store.ids),
        "normalized": store.normalized,
        "space_tag": store.space_tag,
    })


def bind_embeddings(dataset: Dataset, store: EmbeddingStore) -> Dataset:
    """Attach embedding row indices to every record.

    Every image_id must resolve to a store row (MissingEmbedding otherwise);
    extra store rows are permitted and ignored.
    """
    bound = tuple(replace(r, embedding_row=store.row_of(r.image_id)) for r in dataset.images)
    return replace(dataset, images=bound)


@dataclass(frozen=True)
class TranslationManifest:
    """(topic_id, language_code) -> translated prompt text."""

    entries: Mapping[tuple[str, str], str]
    source_model_tag: str = ""
    chrf_scores: Mapping[str, float] = field(default_factory=dict)

    def lookup(self, topic_id: str, language: str) -> str:
        try:
            return self.entries[(topic_id, language)]
        except KeyError:
            raise MissingTranslation(topic_id, language) from None

    def languages(self) -> tuple[str, ...]:
        return tuple(sorted({lang for _, lang in self.entries}))

    def __len__(self) -> int:
        return len(self.entries)


def _parse_translation_entries(path: str | Path, raw: Mapping[str, object]) -> dict[tuple[str, str], str]:
    entries: dict[tuple[str, str], str] = {}
    for i, (key, text) in enumerate(raw.items(), start=1):
        if key.count("|") != 1:
            raise SchemaViolation(path, i, "key",
                                  f"{key!r} is not '<topic_id>|<language_code>'")
        topic_id, language = key.split("|")
        if not topic_id or not language:
            raise SchemaViolation(path, i, "key", f"{key!r} has an empty component")
        if not isinstance(text, str) or not text.strip():
            raise SchemaViolation(path, i, "text", f"empty translation for {key!r}")
        entries[(topic_id, language)] = text
    return entries


def load_translations(path: str | Path) -> TranslationManifest:
    """Accepts the flat key->text object or the wrapped form with metadata."""
    obj = read_json(path)
    if not isinstance(obj, dict):
        raise SchemaViolation(path, 0, "manifest", "expected a JSON object")
    if "entries" in obj and isinstance(obj["entries"], dict):
        entries = _parse_translation_entries(path, obj["entries"])
        chrf = obj.get("chrf_scores") or {}
        if not isinstance(chrf, dict):
            raise SchemaViolation(path, 0, "chrf_scores", "expected an object")
        return TranslationManifest(
            entries,
            source_model_tag=str(obj.get("source_model_tag", "")),
            chrf_scores={str(k): float(v) for k, v in chrf.items()},
        )
    return TranslationManifest(_parse_translation_entries(path, obj))


def write_translations(manifest: TranslationManifest, path: str | Path) -> None:
    write_json(path, {
        "source_model_tag": manifest.source_model_tag,
        "entries": {f"{t}|{lang}": text for (t, lang), text in sorted(manifest.entries.items())},
        "chrf_scores": dict(sorted(manifest.chrf_scores.items())),
    })
