"""Retrieval scoring and stratified recall aggregation.

For every prompt variant of a topic, the engine ranks the full image pool by
cosine alignment (both sides unit-normalized, so a dot product), retrieves the
top N where N is the topic's ground-truth count, and scores recall inside
strata of the retrieved set. Because |retrieved| equals |ground truth|, recall
and precision coincide for every run.

Determinism contract: identical inputs produce byte-identical serialized
tables regardless of worker count. Ties in alignment scores break by ascending
image id; aggregation sums run in a fixed order (ascending topic id, then
ascending unit key) using plain float arithmetic, so results are reproducible
bit for bit.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyGroup,
    EmptyPool,
    InvalidPlan,
    MissingBaseline,
    MissingEmbedding,
    NotNormalized,
    SpaceTagMismatch,
    UsageError,
)
from .ingest import Dataset, EmbeddingStore
from .jsonio import canonical_bytes, canonical_dumps
from .prompts import SynonymSet, bundled_synonyms
from .strata import INCOME_CLASSES, QuartileEdges, assign_income_class

__all__ = [
    "GROUP_AXES",
    "VARIANT_AXES_BY_FAMILY",
    "PRESET_NAMES",
    "ExperimentPlan",
    "RetrievalRun",
    "RecallRow",
    "RecallTable",
    "alignment_scores",
    "topn_retrieve",
    "group_recall",
    "preset_plan",
    "retrieval_runs",
    "run_experiment",
]

GROUP_AXES: tuple[str, ...] = (
    "coarse_income",
    "continent",
    "country",
    "country_wb_class",
    "image_income_class",
)

VARIANT_AXES_BY_FAMILY: Mapping[str, tuple[str, ...]] = {
    "default": (),
    "translated": ("language",),
    "country_suffix": ("suffix_continent", "suffix_country", "suffix_wb_class"),
    "income_suffix": ("income_category",),
}

_FILTER_KEYS = ("coarse_income", "income_classes", "countries", "continents")
_PAIRINGS = ("native_language", "own_country")

PRESET_NAMES: tuple[str, ...] = ("rq1", "rq2", "rq3")

_SCORE_TOLERANCE = 1e-6

_LOWER_CLASSES = frozenset(INCOME_CLASSES[:2])


@dataclass(frozen=True)
class ExperimentPlan:
    """A fully resolved description of one evaluation.

    Plans are plain data: everything the evaluation depends on (family,
    grouping axes, filters, language list, pairing rule, aggregation mode) is
    spelled out here, and the plan is echoed verbatim into the output table.
    """

    name: str
    family: str
    group_axes: tuple[str, ...] = ()
    variant_axes: tuple[str, ...] = ()
    image_filter: Mapping[str, Any] = field(default_factory=dict)
    languages: tuple[str, ...] | None = None
    pairing: str | None = None
    aggregation: str = "macro"
    restrict_gt_to_group: bool = False
    render_rows: str | None = None
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.family not in VARIANT_AXES_BY_FAMILY:
            raise InvalidPlan(f"unknown family {self.family!r}")
        for axis in self.group_axes:
            if axis not in GROUP_AXES:
                raise InvalidPlan(f"unknown group axis {axis!r}")
        if len(set(self.group_axes)) != len(self.group_axes):
            raise InvalidPlan("duplicate group axes")
        legal = VARIANT_AXES_BY_FAMILY[self.family]
        for axis in self.variant_axes:
            if axis not in legal:
                raise InvalidPlan(f"axis {axis!r} does not apply to family {self.family!r}")
        if len(set(self.variant_axes)) != len(self.variant_axes):
            raise InvalidPlan("duplicate variant axes")
        for key in self.image_filter:
            if key not in _FILTER_KEYS:
                raise InvalidPlan(f"unknown image filter {key!r}")
        if self.family == "translated" and not self.languages:
            raise InvalidPlan("translated plans must list languages")
        if self.pairing is not None:
            if self.pairing not in _PAIRINGS:
                raise InvalidPlan(f"unknown pairing {self.pairing!r}")
            if "country" not in self.group_axes:
                raise InvalidPlan(f"pairing {self.pairing!r} needs 'country' among group axes")
            wanted = "translated" if self.pairing == "native_language" else "country_suffix"
            if self.family != wanted:
                raise InvalidPlan(f"pairing {self.pairing!r} applies to family {wanted!r}")
        if self.aggregation not in ("macro", "micro"):
            raise InvalidPlan(f"aggregation must be macro or micro, got {self.aggregation!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "family": self.family,
            "group_axes": list(self.group_axes),
            "variant_axes": list(self.variant_axes),
            "image_filter": {k: self.image_filter[k] for k in sorted(self.image_filter)},
            "languages": list(self.languages) if self.languages is not None else None,
            "pairing": self.pairing,
            "aggregation": self.aggregation,
            "restrict_gt_to_group": self.restrict_gt_to_group,
            "render_rows": self.render_rows,
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> "ExperimentPlan":
        if not isinstance(obj, Mapping):
            raise InvalidPlan("plan must be a JSON object")
        known = {
            "name", "family", "group_axes", "variant_axes", "image_filter",
            "languages", "pairing", "aggregation", "restrict_gt_to_group",
            "render_rows", "meta",
        }
        unknown = set(obj) - known
        if unknown:
            raise InvalidPlan(f"unknown plan fields: {sorted(unknown)}")
        if "family" not in obj:
            raise InvalidPlan("plan needs a family")
        languages = obj.get("languages")
        return cls(
            name=str(obj.get("name", "custom")),
            family=str(obj["family"]),
            group_axes=tuple(obj.get("group_axes", ())),
            variant_axes=tuple(obj.get("variant_axes", ())),
            image_filter=dict(obj.get("image_filter", {}) or {}),
            languages=tuple(languages) if languages else None,
            pairing=obj.get("pairing"),
            aggregation=str(obj.get("aggregation", "macro")),
            restrict_gt_to_group=bool(obj.get("restrict_gt_to_group", False)),
            render_rows=obj.get("render_rows"),
            meta=dict(obj.get("meta", {}) or {}),
        )


@dataclass(frozen=True)
class RetrievalRun:
    """Top-N retrieval for one (topic, prompt) pair, scores non-increasing."""

    topic_id: str
    prompt_key: str
    n: int
    retrieved: tuple[str, ...]
    scores: tuple[float, ...]


@dataclass(frozen=True)
class RecallRow:
    axes: Mapping[str, str]
    recall: float
    delta: float
    topic_count: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "axes": dict(self.axes),
            "recall": self.recall,
            "delta": self.delta,
            "topic_count": self.topic_count,
        }


@dataclass(frozen=True)
class RecallTable:
    """Aggregated recall per cell, with deltas against the default-English
    baseline computed over the identical (group, topic set)."""

    plan: Mapping[str, Any]
    rows: tuple[RecallRow, ...]

    def to_dict(self) -> dict[str, Any]:
        return {"plan": dict(self.plan), "groups": [r.to_dict() for r in self.rows]}

    def to_bytes(self) -> bytes:
        return canonical_bytes(self.to_dict())


def alignment_scores(images: EmbeddingStore, prompt: np.ndarray) -> np.ndarray:
    """Cosine alignment of one prompt vector against every image row."""
    if not images.normalized:
        raise NotNormalized("image store must be normalized before scoring")
    prompt = np.asarray(prompt, dtype=np.float64)
    if prompt.shape != (images.dim,):
        raise DimensionMismatch(
            f"prompt vector has shape {prompt.shape}, expected ({images.dim},)"
        )
    norm = float(np.sqrt(prompt @ prompt))
    if abs(norm - 1.0) > _SCORE_TOLERANCE:
        raise NotNormalized(f"prompt vector has norm {norm!r}")
    scores = images.matrix @ prompt
    if scores.size and float(np.abs(scores).max()) > 1.0 + _SCORE_TOLERANCE:
        raise NotNormalized("alignment scores exceed 1; inputs are not unit vectors")
    return scores


def topn_retrieve(scores: Sequence[float], ids: Sequence[str], n: int) -> tuple[list[str], list[float]]:
    """Top-n ids by descending score, ties broken by ascending id."""
    if len(ids) == 0:
        raise EmptyPool("cannot retrieve from an empty pool")
    if len(scores) != len(ids):
        raise DimensionMismatch(f"{len(scores)} scores for {len(ids)} ids")
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    scores_arr = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((np.asarray(ids, dtype=np.str_), -scores_arr))[: min(n, len(ids))]
    return [ids[i] for i in order], [float(scores_arr[i]) for i in order]


def group_recall(run: RetrievalRun, ground_truth: frozenset[str] | set[str],
                 group_members: frozenset[str] | set[str]) -> float | None:
    """|retrieved ∩ GT ∩ group| / |GT ∩ group|, or None when the group holds
    no ground truth (the cell is undefined, not zero)."""
    denom = len(set(ground_truth) & set(group_members))
    if denom == 0:
        return None
    hits = len(set(run.retrieved) & set(ground_truth) & set(group_members))
    return hits / denom


# --- plan presets -----------------------------------------------------------


def preset_plan(name: str, dataset: Dataset, edges: QuartileEdges) -> ExperimentPlan:
    """Build one of the canned plans against a concrete dataset.

    rq1: translated prompts, lower-income images, country x language matrix
         restricted to countries that have lower-income images and a recorded
         major language; the native pairing map rides along in plan meta.
    rq2: country-suffix prompts over all images, suffix WB class x image
         income class (a 4x4 grid on full data).
    rq3: income-suffix prompts over all images, income category x image
         income class.
    """
    if name == "rq1":
        lower = {
            r.country_code
            for r in dataset.pool()
            if assign_income_class(r.monthly_income_usd, edges).value in _LOWER_CLASSES
        }
        natives = {
            code: dataset.countries[code].major_language
            for code in sorted(lower)
            if dataset.countries[code].major_language
        }
        if not natives:
            raise EmptyGroup("no country has both lower-income images and a major language")
        return ExperimentPlan(
            name="rq1",
            family="translated",
            group_axes=("country",),
            variant_axes=("language",),
            image_filter={"coarse_income": "lower", "countries": sorted(natives)},
            languages=tuple(sorted(set(natives.values()))),
            render_rows="country",
            meta={"native_language_by_country": natives},
        )
    if name == "rq2":
        return ExperimentPlan(
            name="rq2",
            family="country_suffix",
            group_axes=("image_income_class",),
            variant_axes=("suffix_wb_class",),
            render_rows="suffix_wb_class",
        )
    if name == "rq3":
        return ExperimentPlan(
            name="rq3",
            family="income_suffix",
            group_axes=("image_income_class",),
            variant_axes=("income_category",),
            render_rows="image_income_class",
        )
    raise InvalidPlan(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")


# --- internal evaluation machinery ------------------------------------------


class _PoolContext:
    """Pool-order views of everything the aggregation needs."""

    def __init__(self, plan: ExperimentPlan, dataset: Dataset,
                 images: EmbeddingStore, edges: QuartileEdges) -> None:
        pool = dataset.pool()
        if not pool:
            raise EmptyPool("dataset has no objective-topic images")
        self.pool = pool
        self.ids = [r.image_id for r in pool]
        self.rows = np.array([images.row_of(r.image_id) for r in pool])
        self.topics = sorted({r.topic_id for r in pool})
        self.gt: dict[str, frozenset[int]] = {
            t: frozenset(i for i, r in enumerate(pool) if r.topic_id == t)
            for t in self.topics
        }
        self.income_class = [
            assign_income_class(r.monthly_income_usd, edges).value for r in pool
        ]
        self.profiles = dataset.countries
        self.matrix = images.matrix[self.rows]

    def axis_value(self, axis: str, i: int) -> str:
        r = self.pool[i]
        if axis == "country":
            return r.country_code
        if axis == "image_income_class":
            return self.income_class[i]
        if axis == "country_wb_class":
            return self.profiles[r.country_code].wb_class
        if axis == "continent":
            return self.profiles[r.country_code].continent
        if axis == "coarse_income":
            return "lower" if self.income_class[i] in _LOWER_CLASSES else "higher"
        raise InvalidPlan(f"unknown group axis {axis!r}")

    def passes_filter(self, flt: Mapping[str, Any], i: int) -> bool:
        r = self.pool[i]
        if "coarse_income" in flt and self.axis_value("coarse_income", i) != flt["coarse_income"]:
            return False
        if "income_classes" in flt and self.income_class[i] not in flt["income_classes"]:
            return False
        if "countries" in flt and r.country_code not in flt["countries"]:
            return False
        if "continents" in flt:
            if self.profiles[r.country_code].continent not in flt["continents"]:
                return False
        return True


def _unit_ids(plan: ExperimentPlan, ctx: _PoolContext, synonyms: SynonymSet) -> list[str]:
    """The per-cell aggregation units: language codes, suffix country codes,
    or income categories, depending on the family."""
    if plan.family == "default":
        return ["default"]
    if plan.family == "translated":
        return sorted(plan.languages or ())
    if plan.family == "country_suffix":
        return sorted({r.country_code for r in ctx.pool})
    return list(synonyms.names())


def _variant_key(family: str, topic_id: str, unit: str, synonym_index: int | None = None) -> str:
    if family == "default":
        return f"default|{topic_id}"
    if family == "translated":
        return f"translated|{topic_id}|{unit}"
    if family == "country_suffix":
        return f"country|{topic_id}|{unit}"
    return f"income|{topic_id}|{unit}|{synonym_index}"


def _unit_axis_value(axis: str, unit: str, ctx: _PoolContext) -> str:
    if axis == "language":
        return unit
    if axis == "suffix_country":
        return unit
    if axis == "suffix_wb_class":
        return ctx.profiles[unit].wb_class
    if axis == "suffix_continent":
        return ctx.profiles[unit].continent
    if axis == "income_category":
        return unit
    raise InvalidPlan(f"unknown variant axis {axis!r}")


def _score_keys(plan: ExperimentPlan, ctx: _PoolContext, synonyms: SynonymSet) -> list[tuple[str, str]]:
    """(prompt_key, topic_id) pairs the evaluation must score, baseline included."""
    pairs = [(f"default|{t}", t) for t in ctx.topics]
    if plan.family == "default":
        return pairs
    for t in ctx.topics:
        for unit in _unit_ids(plan, ctx, synonyms):
            if plan.family == "income_suffix":
                for i in range(len(synonyms.phrases(unit))):
                    pairs.append((_variant_key(plan.family, t, unit, i), t))
            else:
                pairs.append((_variant_key(plan.family, t, unit), t))
    return pairs


def _rank_prefixes(
    ctx: _PoolContext,
    prompts: EmbeddingStore,
    pairs: Sequence[tuple[str, str]],
    workers: int,
) -> dict[str, tuple[int, ...]]:
    """Top-N pool positions per prompt key (N = the topic's GT count).

    Scores are float64 dot products; ranking is a stable argsort on negated
    scores, so ties fall back to pool position, i.e. ascending image_id.
    """
    n_by_topic = {t: len(ctx.gt[t]) for t in ctx.topics}
    rows = {key: prompts.row_of(key) for key, _ in pairs}

    def score_one(pair: tuple[str, str]) -> tuple[str, tuple[int, ...]]:
        key, topic = pair
        vec = prompts.matrix[rows[key]]
        scores = ctx.matrix @ vec
        if scores.size and float(np.abs(scores).max()) > 1.0 + _SCORE_TOLERANCE:
            raise NotNormalized("alignment scores exceed 1; inputs are not unit vectors")
        order = np.argsort(-scores, kind="stable")
        return key, tuple(int(i) for i in order[: n_by_topic[topic]])

    if workers <= 1 or len(pairs) < 2:
        results = map(score_one, pairs)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = pool.map(score_one, pairs)
    return dict(results)


def retrieval_runs(
    plan: ExperimentPlan,
    dataset: Dataset,
    image_store: EmbeddingStore,
    prompt_store: EmbeddingStore,
    *,
    edges: QuartileEdges,
    synonyms: SynonymSet | None = None,
    workers: int = 1,
) -> dict[str, tuple[str, ...]]:
    """Retrieved image ids per prompt key, for inspection and invariance tests."""
    ctx, prefixes = _prepare(plan, dataset, image_store, prompt_store,
                             edges=edges, synonyms=synonyms, workers=workers)
    return {key: tuple(ctx.ids[i] for i in prefix) for key, prefix in prefixes.items()}


def _prepare(plan, dataset, image_store, prompt_store, *, edges, synonyms, workers):
    if image_store.space_tag != prompt_store.space_tag:
        raise SpaceTagMismatch(image_store.space_tag, prompt_store.space_tag)
    if image_store.dim != prompt_store.dim:
        raise DimensionMismatch(
            f"image dim {image_store.dim} != prompt dim {prompt_store.dim}"
        )
    for store, side in ((image_store, "image"), (prompt_store, "prompt")):
        if not store.normalized:
            raise NotNormalized(f"{side} store must be normalized before scoring")
    synonyms = synonyms or bundled_synonyms()
    ctx = _PoolContext(plan, dataset, image_store, edges)
    for t in ctx.topics:
        try:
            prompt_store.row_of(f"default|{t}")
        except MissingEmbedding:
            raise MissingBaseline(t) from None
    pairs = _score_keys(plan, ctx, synonyms)
    prefixes = _rank_prefixes(ctx, prompt_store, pairs, workers)
    return ctx, prefixes


def run_experiment(
    plan: ExperimentPlan,
    dataset: Dataset,
    image_store: EmbeddingStore,
    prompt_store: EmbeddingStore,
    *,
    edges: QuartileEdges,
    synonyms: SynonymSet | None = None,
    workers: int = 1,
) -> RecallTable:
    """Evaluate a plan end to end and aggregate recall per cell.

    Aggregation (macro): per-topic recall is hits/denominator inside the cell's
    group; income-suffix synonyms average within their category per topic
    first; units (languages, suffix countries, categories) macro-average over
    topics in ascending topic order, and the cell averages its units in
    ascending unit order. Micro pools raw hit/denominator counts instead.
    Deltas subtract the default-English baseline aggregated over the identical
    group and topic set. Cells whose group holds no images are absent.
    """
    synonyms = synonyms or bundled_synonyms()
    ctx, prefixes = _prepare(plan, dataset, image_store, prompt_store,
                             edges=edges, synonyms=synonyms, workers=workers)
    prefix_sets = {key: frozenset(prefix) for key, prefix in prefixes.items()}

    filtered = [i for i in range(len(ctx.pool)) if ctx.passes_filter(plan.image_filter, i)]
    if not filtered:
        raise EmptyGroup("image filter excludes every record")

    groups: dict[tuple[str, ...], set[int]] = {}
    for i in filtered:
        gkey = tuple(ctx.axis_value(axis, i) for axis in plan.group_axes)
        groups.setdefault(gkey, set()).add(i)

    units = _unit_ids(plan, ctx, synonyms)
    vcells: dict[tuple[str, ...], list[str]] = {}
    for unit in units:
        vkey = tuple(_unit_axis_value(axis, unit, ctx) for axis in plan.variant_axes)
        vcells.setdefault(vkey, []).append(unit)

    natives = plan.meta.get("native_language_by_country", {})

    def unit_applies(unit: str, gvals: Mapping[str, str]) -> bool:
        if plan.pairing == "native_language":
            return natives.get(gvals["country"]) == unit if natives else (
                (ctx.profiles[gvals["country"]].major_language == unit)
            )
        if plan.pairing == "own_country":
            return gvals["country"] == unit
        return True

    def recall_of(key: str, topic: str, members_gt: frozenset[int], restrict: bool) -> tuple[int, int]:
        denom = len(members_gt)
        if restrict:
            retrieved: frozenset[int] | set[int] = set(prefixes[key][:denom])
        else:
            retrieved = prefix_sets[key]
        return len(retrieved & members_gt), denom

    rows: list[RecallRow] = []
    for gkey in sorted(groups):
        members = groups[gkey]
        gvals = dict(zip(plan.group_axes, gkey))
        members_gt = {
            t: frozenset(ctx.gt[t] & members)
            for t in ctx.topics
            if ctx.gt[t] & members
        }
        topics_defined = sorted(members_gt)
        if not topics_defined:
            continue
        for vkey in sorted(vcells):
            cell_units = [u for u in vcells[vkey] if unit_applies(u, gvals)]
            if not cell_units:
                continue
            axes = dict(gvals)
            axes.update(zip(plan.variant_axes, vkey))

            def unit_topic_recalls(unit: str, topic: str) -> list[tuple[int, int]]:
                mgt = members_gt[topic]
                if plan.family == "income_suffix":
                    return [
                        recall_of(_variant_key(plan.family, topic, unit, i), topic,
                                  mgt, plan.restrict_gt_to_group)
                        for i in range(len(synonyms.phrases(unit)))
                    ]
                return [recall_of(_variant_key(plan.family, topic, unit), topic,
                                  mgt, plan.restrict_gt_to_group)]

            baseline_counts = [
                recall_of(f"default|{t}", t, members_gt[t], plan.restrict_gt_to_group)
                for t in topics_defined
            ]
            if plan.aggregation == "micro":
                hits = 0
                denom = 0
                for unit in cell_units:
                    for t in topics_defined:
                        for h, d in unit_topic_recalls(unit, t):
                            hits += h
                            denom += d
                value = hits / denom
                baseline = sum(h for h, _ in baseline_counts) / sum(d for _, d in baseline_counts)
            else:
                unit_macros = []
                for unit in cell_units:
                    per_topic = []
                    for t in topics_defined:
                        counts = unit_topic_recalls(unit, t)
                        per_topic.append(sum(h / d for h, d in counts) / len(counts))
                    unit_macros.append(sum(per_topic) / len(per_topic))
                value = sum(unit_macros) / len(unit_macros)
                baseline = sum(h / d for h, d in baseline_counts) / len(baseline_counts)
            rows.append(RecallRow(axes, value, value - baseline, len(topics_defined)))

    rows.sort(key=lambda r: canonical_dumps(dict(r.axes)))
    return RecallTable(plan.to_dict(), tuple(rows))
