"""Prompt construction for the four evaluated families.

Families:

* default          "This is a photo of {label}"
* translated       manifest text for (topic, language); never synthesized here
* country_suffix   "This is a photo of {label} from {country display name}"
* income_suffix    "This is a photo of {label} from {phrase}" for each synonym
                   phrase of an income category (poor / rich / neutral)

Each variant has a canonical key; the key doubles as the row id in the prompt
embedding store, so a plan can be handed to an embedding job and resolved back
without ambiguity.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    EmptyCountry,
    EmptyLabel,
    SchemaViolation,
    UnknownCategory,
)
from .ingest import CountryProfile, Dataset, TranslationManifest
from .jsonio import canonical_bytes, read_json, sha256_bytes

__all__ = [
    "FAMILIES",
    "CATEGORY_ORDER",
    "PromptVariant",
    "SynonymSet",
    "default_prompt",
    "country_suffix_prompt",
    "income_suffix_prompts",
    "translated_prompt",
    "load_synonyms",
    "bundled_synonyms",
    "build_plan",
    "plan_export",
]

FAMILIES: tuple[str, ...] = ("default", "translated", "country_suffix", "income_suffix")

# Rendering order for income suffix categories.
CATEGORY_ORDER: tuple[str, ...] = ("poor", "rich", "neutral")

_TEMPLATE = "This is a photo of {}"
_SUFFIX_TEMPLATE = "This is a photo of {} from {}"


@dataclass(frozen=True)
class PromptVariant:
    """One concrete prompt: family, topic, parameters, and text."""

    family: str
    topic_id: str
    text: str
    language: str | None = None
    country_code: str | None = None
    category: str | None = None
    synonym_index: int | None = None

    @property
    def key(self) -> str:
        """Canonical id, used as the prompt store row id."""
        if self.family == "default":
            return f"default|{self.topic_id}"
        if self.family == "translated":
            return f"translated|{self.topic_id}|{self.language}"
        if self.family == "country_suffix":
            return f"country|{self.topic_id}|{self.country_code}"
        if self.family == "income_suffix":
            return f"income|{self.topic_id}|{self.category}|{self.synonym_index}"
        raise UnknownCategory(self.family)


@dataclass(frozen=True)
class SynonymSet:
    """Phrase lists per income category. The config file is authoritative;
    the bundled default matches the audited phrase lists."""

    categories: Mapping[str, tuple[str, ...]]

    def __post_init__(self) -> None:
        for name, phrases in self.categories.items():
            if not phrases:
                raise SchemaViolation("<synonyms>", 0, name, "category has no phrases")
            if len(set(phrases)) != len(phrases):
                raise SchemaViolation("<synonyms>", 0, name, "duplicate phrases")

    def phrases(self, category: str) -> tuple[str, ...]:
        try:
            return self.categories[category]
        except KeyError:
            raise UnknownCategory(category) from None

    def names(self) -> tuple[str, ...]:
        """Category names, canonical order first, extras alphabetically."""
        known = [c for c in CATEGORY_ORDER if c in self.categories]
        extra = sorted(set(self.categories) - set(CATEGORY_ORDER))
        return tuple(known + extra)

    def sha256(self) -> str:
        """Content hash of the phrase lists, recorded in run manifests."""
        return sha256_bytes(canonical_bytes(
            {name: list(phrases) for name, phrases in self.categories.items()}
        ))


def default_prompt(label: str) -> str:
    if not label.strip():
        raise EmptyLabel("topic label is empty")
    return _TEMPLATE.format(label)


def country_suffix_prompt(label: str, country_name: str) -> str:
    if not label.strip():
        raise EmptyLabel("topic label is empty")
    if not country_name.strip():
        raise EmptyCountry("country display name is empty")
    return _SUFFIX_TEMPLATE.format(label, country_name)


def income_suffix_prompts(label: str, category: str, synonyms: SynonymSet) -> tuple[str, ...]:
    """One prompt per synonym phrase, in the config's phrase order."""
    if not label.strip():
        raise EmptyLabel("topic label is empty")
    return tuple(_SUFFIX_TEMPLATE.format(label, phrase) for phrase in synonyms.phrases(category))


def translated_prompt(topic_id: str, language: str, manifest: TranslationManifest) -> str:
    """Translated text comes from the manifest only; a missing pair is a hard
    error rather than a fallback to English."""
    return manifest.lookup(topic_id, language)


def load_synonyms(path: str | Path) -> SynonymSet:
    obj = read_json(path)
    if not isinstance(obj, dict) or not obj:
        raise SchemaViolation(path, 0, "synonyms", "expected a non-empty JSON object")
    categories: dict[str, tuple[str, ...]] = {}
    for name, phrases in obj.items():
        if not isinstance(phrases, list) or not all(isinstance(p, str) and p.strip() for p in phrases):
            raise SchemaViolation(path, 0, name, "expected a list of non-empty strings")
        categories[name] = tuple(phrases)
    return SynonymSet(categories)


def bundled_synonyms() -> SynonymSet:
    ref = resources.files("promptstrata.data").joinpath("synonyms_default.json")
    with resources.as_file(ref) as path:
        return load_synonyms(path)


def _plan_countries(dataset: Dataset) -> list[CountryProfile]:
    present = sorted({r.country_code for r in dataset.pool()})
    return [dataset.countries[code] for code in present]


def build_plan(
    dataset: Dataset,
    families: Sequence[str],
    synonyms: SynonymSet | None = None,
    manifest: TranslationManifest | None = None,
    languages: Iterable[str] | None = None,
) -> list[PromptVariant]:
    """Enumerate every prompt variant the requested families need.

    Topics are the dataset's objective topics. translated requires a manifest
    (languages default to every language it covers); country_suffix spans the
    countries present in the pool; income_suffix spans every category of the
    synonym config. Variants come back sorted by key.
    """
    for family in families:
        if family not in FAMILIES:
            raise UnknownCategory(family)
    topics = dataset.topics.objective_ids()
    variants: list[PromptVariant] = []
    if "default" in families:
        for t in topics:
            variants.append(PromptVariant("default", t, default_prompt(dataset.topics.label(t))))
    if "translated" in families:
        if manifest is None:
            raise MissingTranslationManifest()
        langs = tuple(sorted(languages)) if languages is not None else manifest.languages()
        for t in topics:
            for lang in langs:
                variants.append(PromptVariant(
                    "translated", t, translated_prompt(t, lang, manifest), language=lang))
    if "country_suffix" in families:
        for t in topics:
            label = dataset.topics.label(t)
            for profile in _plan_countries(dataset):
                variants.append(PromptVariant(
                    "country_suffix", t,
                    country_suffix_prompt(label, profile.display_name),
                    country_code=profile.country_code))
    if "income_suffix" in families:
        if synonyms is None:
            synonyms = bundled_synonyms()
        for t in topics:
            label = dataset.topics.label(t)
            for category in synonyms.names():
                for i, text in enumerate(income_suffix_prompts(label, category, synonyms)):
                    variants.append(PromptVariant(
                        "income_suffix", t, text, category=category, synonym_index=i))
    variants.sort(key=lambda v: v.key)
    return variants


class MissingTranslationManifest(SchemaViolation):
    def __init__(self) -> None:
        super().__init__("<plan>", 0, "translations",
                         "translated family requested without a translation manifest")


def plan_export(variants: Sequence[PromptVariant]) -> list[dict[str, object]]:
    """JSON-ready rows for an embedding job: key, family, topic_id, text, and
    whichever parameter fields apply."""
    rows = []
    for v in sorted(variants, key=lambda v: v.key):
        row: dict[str, object] = {
            "key": v.key, "family": v.family, "topic_id": v.topic_id, "text": v.text,
        }
        if v.language is not None:
            row["language"] = v.language
        if v.country_code is not None:
            row["country_code"] = v.country_code
        if v.category is not None:
            row["category"] = v.category
            row["synonym_index"] = v.synonym_index
        rows.append(row)
    return rows
