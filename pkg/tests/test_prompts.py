"""Prompt templates, synonym configs, and plan enumeration."""

import pytest

from conftest import make_dataset
from promptstrata import (
    FAMILIES,
    PromptVariant,
    SynonymSet,
    build_plan,
    bundled_synonyms,
    country_suffix_prompt,
    default_prompt,
    income_suffix_prompts,
    plan_export,
    translated_prompt,
)
from promptstrata.errors import (
    EmptyCountry,
    EmptyLabel,
    SchemaViolation,
    UnknownCategory,
)
from promptstrata.ingest import TranslationManifest


class TestTemplates:
    def test_default(self):
        assert default_prompt("cleaning equipment") == \
            "This is a photo of cleaning equipment"

    def test_country_suffix(self):
        assert country_suffix_prompt("cleaning equipment", "Burundi") == \
            "This is a photo of cleaning equipment from Burundi"

    def test_income_suffix_per_synonym(self):
        texts = income_suffix_prompts("armchair", "poor", bundled_synonyms())
        assert texts == (
            "This is a photo of armchair from a poor country",
            "This is a photo of armchair from an impoverished country",
            "This is a photo of armchair from a poor region",
            "This is a photo of armchair from an impoverished region",
        )

    def test_neutral_category(self):
        texts = income_suffix_prompts("armchair", "neutral", bundled_synonyms())
        assert texts[0] == "This is a photo of armchair from a country"
        assert len(texts) == 4

    def test_empty_label(self):
        with pytest.raises(EmptyLabel):
            default_prompt("  ")

    def test_empty_country(self):
        with pytest.raises(EmptyCountry):
            country_suffix_prompt("armchair", "")

    def test_translated_comes_from_manifest_only(self):
        manifest = TranslationManifest({("t1", "fr"): "ceci est une photo de fauteuil"})
        assert translated_prompt("t1", "fr", manifest) == \
            "ceci est une photo de fauteuil"


class TestSynonyms:
    def test_bundled_inventory(self):
        syn = bundled_synonyms()
        assert syn.names() == ("poor", "rich", "neutral")
        assert len(syn.phrases("poor")) == 4
        assert len(syn.phrases("rich")) == 4
        assert len(syn.phrases("neutral")) == 4

    def test_extra_categories_sort_after_known(self):
        syn = SynonymSet({
            "neutral": ("a place",),
            "zz_custom": ("a custom place",),
            "poor": ("a poor place",),
            "aa_custom": ("another place",),
        })
        assert syn.names() == ("poor", "neutral", "aa_custom", "zz_custom")

    def test_unknown_category(self):
        with pytest.raises(UnknownCategory):
            bundled_synonyms().phrases("middle")

    def test_hash_stable_and_order_sensitive(self):
        a = SynonymSet({"poor": ("x", "y")})
        b = SynonymSet({"poor": ("x", "y")})
        c = SynonymSet({"poor": ("y", "x")})
        assert a.sha256() == b.sha256()
        assert a.sha256() != c.sha256()


class TestKeys:
    def test_key_formats(self):
        assert PromptVariant("default", "t1", "x").key == "default|t1"
        assert PromptVariant("translated", "t1", "x", language="fr").key == \
            "translated|t1|fr"
        assert PromptVariant("country_suffix", "t1", "x", country_code="BI").key == \
            "country|t1|BI"
        assert PromptVariant("income_suffix", "t1", "x", category="poor",
                             synonym_index=2).key == "income|t1|poor|2"


class TestBuildPlan:
    def dataset(self):
        return make_dataset(
            [
                ("a", "BI", 40.5, "t1"),
                ("b", "CH", 2500.0, "t1"),
                ("c", "IN", 300.0, "t2"),
                ("d", "US", 4000.0, "t3"),  # subjective: excluded everywhere
            ],
            topics={
                "t1": ("armchair", False),
                "t2": ("cleaning equipment", False),
                "t3": ("favorite things", True),
            },
        )

    def test_counts_per_family(self):
        ds = self.dataset()
        manifest = TranslationManifest({
            (t, lang): f"[{lang}] {t}"
            for t in ("t1", "t2") for lang in ("fr", "hi")
        })
        variants = build_plan(ds, FAMILIES, manifest=manifest)
        by_family = {}
        for v in variants:
            by_family.setdefault(v.family, []).append(v)
        # 2 objective topics; 3 pool countries (US only holds the subjective
        # image, so it drops out); 2 languages; 3 categories x 4 synonyms
        assert len(by_family["default"]) == 2
        assert len(by_family["translated"]) == 2 * 2
        assert len(by_family["country_suffix"]) == 2 * 3
        assert len(by_family["income_suffix"]) == 2 * 12
        assert len(variants) == 2 + 4 + 6 + 24

    def test_keys_unique_and_sorted(self):
        ds = self.dataset()
        variants = build_plan(ds, ["default", "country_suffix", "income_suffix"])
        keys = [v.key for v in variants]
        assert keys == sorted(keys)
        assert len(keys) == len(set(keys))

    def test_translated_requires_manifest(self):
        with pytest.raises(SchemaViolation):
            build_plan(self.dataset(), ["translated"])

    def test_unknown_family(self):
        with pytest.raises(UnknownCategory):
            build_plan(self.dataset(), ["nonsense"])

    def test_country_suffix_uses_display_names(self):
        ds = self.dataset()
        variant = next(v for v in build_plan(ds, ["country_suffix"])
                       if v.key == "country|t1|BI")
        assert variant.text == "This is a photo of armchair from Burundi"

    def test_export_fields(self):
        ds = self.dataset()
        manifest = TranslationManifest({("t1", "fr"): "x", ("t2", "fr"): "y"})
        rows = plan_export(build_plan(ds, FAMILIES, manifest=manifest))
        assert [r["key"] for r in rows] == sorted(r["key"] for r in rows)
        translated = next(r for r in rows if r["family"] == "translated")
        assert translated["language"] == "fr"
        income = next(r for r in rows if r["family"] == "income_suffix")
        assert {"category", "synonym_index"} <= set(income)
