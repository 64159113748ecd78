"""Walkthrough: the prompt texts the evaluation scores, family by family.

Run with: python3 demos/02_prompt_variants.py
"""

from promptstrata.ingest import (
    CountryProfile,
    Dataset,
    ImageRecord,
    TopicCatalog,
    TopicEntry,
    TranslationManifest,
)
from promptstrata.prompts import build_plan, bundled_synonyms, plan_export

# Two topics, three countries, four images: just enough to show every family.
catalog = TopicCatalog({
    "cleaning": TopicEntry("cleaning equipment", False),
    "stove": TopicEntry("a stove", False),
})
profiles = {
    "BI": CountryProfile("BI", "Burundi", "Africa", "poor", "fr"),
    "IN": CountryProfile("IN", "India", "Asia", "low-mid", "hi"),
    "CH": CountryProfile("CH", "Switzerland", "Europe", "rich", "de"),
}
records = (
    ImageRecord("img0001", "BI", 42.0, "cleaning"),
    ImageRecord("img0002", "IN", 310.0, "stove"),
    ImageRecord("img0003", "CH", 5200.0, "cleaning"),
    ImageRecord("img0004", "CH", 4100.0, "stove"),
)
dataset = Dataset(records, catalog, profiles)

translations = TranslationManifest(
    {
        (topic, lang): f"[{lang}] photo of {catalog.entries[topic].label}"
        for lang in ("de", "fr", "hi")
        for topic in catalog.entries
    },
    source_model_tag="demo:handwritten",
)

synonyms = bundled_synonyms()
variants = build_plan(
    dataset,
    ["default", "translated", "country_suffix", "income_suffix"],
    synonyms=synonyms,
    manifest=translations,
    languages=("de", "fr", "hi"),
)

print(f"{len(variants)} prompt variants\n")
for row in plan_export(variants):
    print(f"  {row['key']:<32}  {row['text']}")

print("\nEach key doubles as the row id in the prompt embedding matrix, so an")
print("embedding job can consume this export and hand back vectors by key.")
