"""Directory-level orchestration shared by the CLI and the test suite.

A dataset directory holds the wire files side by side:

    metadata.csv   topics.csv   countries.csv (optional)
    images.f32 (+ images.f32.json)
    prompts.f32 (+ prompts.f32.json)
    translations.json (optional)   synonyms.json (optional)
    edges.json (optional)

load_bundle() reads whatever is present, falling back to bundled resources
for the country table and synonyms and deriving quartile edges from the data
when no preset is given. evaluate() runs a plan on the bundle, and
write_outputs() serializes the result set plus a content-hash manifest whose
bytes depend only on inputs and plan, never on wall clock or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping

from .engine import (
    ExperimentPlan,
    PRESET_NAMES,
    RecallTable,
    preset_plan,
    run_experiment,
)
from .errors import MissingFile, UsageError
from .ingest import (
    Dataset,
    EmbeddingStore,
    TranslationManifest,
    load_embeddings,
    load_metadata,
    load_translations,
)
from .jsonio import canonical_bytes, read_json, sha256_bytes, sha256_file, write_json
from .prompts import SynonymSet, bundled_synonyms, load_synonyms
from .report import build_heatmap, render_table
from .strata import QuartileEdges, bundled_edges, compute_quartile_edges, load_edges

__all__ = ["Bundle", "load_bundle", "resolve_plan", "evaluate", "write_outputs"]

IMAGES_NAME = "images.f32"
PROMPTS_NAME = "prompts.f32"
_INPUT_NAMES = (
    "metadata.csv",
    "topics.csv",
    "countries.csv",
    "images.f32",
    "images.f32.json",
    "prompts.f32",
    "prompts.f32.json",
    "translations.json",
    "synonyms.json",
    "edges.json",
)


@dataclass(frozen=True)
class Bundle:
    """Everything loadable from one dataset directory."""

    directory: Path
    dataset: Dataset
    images: EmbeddingStore
    prompts: EmbeddingStore | None
    translations: TranslationManifest | None
    synonyms: SynonymSet
    edges: QuartileEdges
    edges_source: str


def _resolve_edges(
    directory: Path,
    dataset: Dataset,
    edges: str | Path | None,
    edges_scope: str,
) -> tuple[QuartileEdges, str]:
    if edges == "preset":
        return bundled_edges(), "preset"
    if edges is not None and edges != "auto":
        return load_edges(edges), f"file:{edges}"
    local = directory / "edges.json"
    if local.is_file():
        return load_edges(local), "file:edges.json"
    if edges_scope == "pool":
        values = [r.monthly_income_usd for r in dataset.pool()]
    else:
        values = list(dataset.incomes())
    return compute_quartile_edges(values), f"computed:{edges_scope}"


def load_bundle(
    directory: str | Path,
    *,
    edges: str | Path | None = None,
    edges_scope: str = "all",
    synonyms_path: str | Path | None = None,
    require_prompts: bool = True,
) -> Bundle:
    """Load a dataset directory into memory.

    edges may be None/"auto" (use edges.json if present, else compute from the
    data), "preset" (the bundled canonical quartiles), or a file path.
    edges_scope chooses the income population for computed edges: "all"
    records or the objective-topic "pool" only.
    """
    if edges_scope not in ("all", "pool"):
        raise UsageError(f"edges_scope must be 'all' or 'pool', got {edges_scope!r}")
    root = Path(directory)
    if not root.is_dir():
        raise MissingFile(root, "dataset directory")
    dataset = load_metadata(root)
    images = load_embeddings(root / IMAGES_NAME)

    prompts = None
    prompts_path = root / PROMPTS_NAME
    if prompts_path.is_file():
        prompts = load_embeddings(prompts_path)
    elif require_prompts:
        raise MissingFile(prompts_path)

    translations = None
    translations_path = root / "translations.json"
    if translations_path.is_file():
        translations = load_translations(translations_path)

    if synonyms_path is not None:
        synonyms = load_synonyms(synonyms_path)
    elif (root / "synonyms.json").is_file():
        synonyms = load_synonyms(root / "synonyms.json")
    else:
        synonyms = bundled_synonyms()

    resolved, source = _resolve_edges(root, dataset, edges, edges_scope)
    return Bundle(root, dataset, images, prompts, translations, synonyms,
                  resolved, source)


def resolve_plan(
    bundle: Bundle,
    *,
    preset: str | None = None,
    plan_path: str | Path | None = None,
    aggregation: str | None = None,
    restrict_gt: bool | None = None,
) -> ExperimentPlan:
    """Build the plan to run from a preset name or a plan JSON file."""
    if (preset is None) == (plan_path is None):
        raise UsageError("exactly one of preset or plan file must be given")
    if preset is not None:
        if preset not in PRESET_NAMES:
            raise UsageError(f"unknown preset {preset!r}; expected one of {PRESET_NAMES}")
        plan = preset_plan(preset, bundle.dataset, bundle.edges)
    else:
        obj = read_json(plan_path)
        if not isinstance(obj, dict):
            raise UsageError(f"{plan_path}: plan file must hold a JSON object")
        plan = ExperimentPlan.from_dict(obj)
    if aggregation is not None:
        plan = replace(plan, aggregation=aggregation)
    if restrict_gt is not None:
        plan = replace(plan, restrict_gt_to_group=restrict_gt)
    return plan


def evaluate(bundle: Bundle, plan: ExperimentPlan, *, workers: int = 1) -> RecallTable:
    if bundle.prompts is None:
        raise MissingFile(bundle.directory / PROMPTS_NAME, "evaluation needs prompt embeddings")
    return run_experiment(
        plan,
        bundle.dataset,
        bundle.images,
        bundle.prompts,
        edges=bundle.edges,
        synonyms=bundle.synonyms,
        workers=workers,
    )


def _input_hashes(directory: Path) -> dict[str, str]:
    hashes = {}
    for name in _INPUT_NAMES:
        p = directory / name
        if p.is_file():
            hashes[name] = sha256_file(p)
    return hashes


def write_outputs(
    bundle: Bundle,
    plan: ExperimentPlan,
    table: RecallTable,
    out_dir: str | Path,
) -> dict[str, Any]:
    """Write the result set and its manifest; returns the manifest dict.

    Emits recall_table.json/.md/.csv, heatmap.json when the axes form a
    country x language grid, and manifest.json tying output hashes to input
    hashes, the plan, the edges, and the synonym inventory. The manifest
    carries no timestamps and no execution parameters, so reruns on identical
    inputs produce identical bytes.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, bytes] = {
        "recall_table.json": render_table(table, "json"),
        "recall_table.md": render_table(table, "md"),
        "recall_table.csv": render_table(table, "csv"),
    }
    axes = set(plan.group_axes) | set(plan.variant_axes)
    if {"country", "language"} <= axes:
        artifacts["heatmap.json"] = build_heatmap(table).to_bytes()
    for name, payload in artifacts.items():
        (out / name).write_bytes(payload)

    manifest = {
        "plan": plan.to_dict(),
        "edges": bundle.edges.to_dict(),
        "edges_source": bundle.edges_source,
        "synonyms_sha256": bundle.synonyms.sha256(),
        "inputs": _input_hashes(bundle.directory),
        "outputs": {name: sha256_bytes(payload) for name, payload in sorted(artifacts.items())},
    }
    write_json(out / "manifest.json", manifest)
    return manifest
