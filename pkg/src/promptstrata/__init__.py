"""Stratified image-retrieval evaluation over precomputed embeddings.

The package measures how prompt wording changes retrieval recall across
socioeconomic and geographic strata: images are bucketed by household income
quartiles, country, and continent; prompts come in four families (default
English, translated, country-suffixed, income-suffixed); and recall deltas
against the default prompts quantify the effect of each wording change.

Typical flow: load a dataset directory with runner.load_bundle, pick an
ExperimentPlan (preset_plan or hand-built), run it with runner.evaluate, and
render the RecallTable with report.render_table.
"""

from .errors import (
    DataError,
    IoError,
    PromptstrataError,
    UsageError,
)
from .strata import (
    COARSE_GROUPS,
    CONTINENTS,
    INCOME_CLASSES,
    QuartileEdges,
    Stratum,
    StratumKind,
    assign_income_class,
    bundled_edges,
    classify_country,
    coarse_group,
    compute_quartile_edges,
    load_edges,
)
from .ingest import (
    CountryProfile,
    Dataset,
    EmbeddingStore,
    ImageRecord,
    TopicCatalog,
    TranslationManifest,
    bind_embeddings,
    bundled_country_reference,
    load_embeddings,
    load_metadata,
    load_translations,
    write_embeddings,
    write_metadata,
    write_translations,
)
from .prompts import (
    FAMILIES,
    PromptVariant,
    SynonymSet,
    build_plan,
    bundled_synonyms,
    country_suffix_prompt,
    default_prompt,
    income_suffix_prompts,
    load_synonyms,
    plan_export,
    translated_prompt,
)
from .engine import (
    GROUP_AXES,
    PRESET_NAMES,
    VARIANT_AXES_BY_FAMILY,
    ExperimentPlan,
    RecallRow,
    RecallTable,
    alignment_scores,
    group_recall,
    preset_plan,
    retrieval_runs,
    run_experiment,
    topn_retrieve,
)
from .stats import WilcoxonResult, delta_summary, wilcoxon_signed_rank
from .report import HeatmapMatrix, build_heatmap, render_table
from .runner import Bundle, evaluate, load_bundle, resolve_plan, write_outputs
from .fixtures import (
    GeneratedFixture,
    PlantedSpec,
    generate,
    generate_random_instance,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "PromptstrataError", "DataError", "IoError", "UsageError",
    "INCOME_CLASSES", "CONTINENTS", "COARSE_GROUPS",
    "QuartileEdges", "Stratum", "StratumKind",
    "compute_quartile_edges", "assign_income_class", "coarse_group",
    "classify_country", "load_edges", "bundled_edges",
    "ImageRecord", "TopicCatalog", "CountryProfile", "Dataset",
    "EmbeddingStore", "TranslationManifest",
    "load_metadata", "load_embeddings", "load_translations",
    "write_metadata", "write_embeddings", "write_translations",
    "bind_embeddings", "bundled_country_reference",
    "FAMILIES", "PromptVariant", "SynonymSet",
    "default_prompt", "country_suffix_prompt", "income_suffix_prompts",
    "translated_prompt", "build_plan", "plan_export",
    "load_synonyms", "bundled_synonyms",
    "GROUP_AXES", "VARIANT_AXES_BY_FAMILY", "PRESET_NAMES",
    "ExperimentPlan", "RecallRow", "RecallTable",
    "alignment_scores", "topn_retrieve", "group_recall",
    "preset_plan", "retrieval_runs", "run_experiment",
    "WilcoxonResult", "wilcoxon_signed_rank", "delta_summary",
    "HeatmapMatrix", "render_table", "build_heatmap",
    "Bundle", "load_bundle", "resolve_plan", "evaluate", "write_outputs",
    "PlantedSpec", "GeneratedFixture", "generate", "generate_random_instance",
]
