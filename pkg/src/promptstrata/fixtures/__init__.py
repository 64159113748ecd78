"""Seeded synthetic datasets with planted similarity structure.

The planted generator builds a dataset where every image of a topic lies in a
narrow cone around that topic's direction (a standard basis vector), so an
aligned prompt separates its ground truth from everything else by at least the
requested margin and recall is exactly 1.0 on every stratum. The orthogonal
mode replaces prompt vectors with directions orthogonal to every topic cone,
which makes retrieval chance-level: expected recall N_t / pool.

generate() writes the complete wire-format bundle (metadata, embeddings,
translations, synonyms, edges) so the evaluation pipeline and its brute-force
oracle can run on the same files. Generation is deterministic per seed
(NumPy default_rng, PCG64).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from ..engine import ExperimentPlan, GROUP_AXES, VARIANT_AXES_BY_FAMILY
from ..errors import InvalidSpec, TooLarge
from ..ingest import (
    CountryProfile,
    Dataset,
    EmbeddingStore,
    ImageRecord,
    TopicCatalog,
    TopicEntry,
    TranslationManifest,
    bundled_country_reference,
    write_embeddings,
    write_metadata,
    write_translations,
)
from ..jsonio import write_json
from ..prompts import SynonymSet, bundled_synonyms
from ..strata import INCOME_CLASSES, QuartileEdges, assign_income_class

from .oracle import oracle_evaluate

__all__ = [
    "PlantedSpec",
    "GeneratedFixture",
    "generate",
    "generate_random_instance",
    "random_plan",
    "oracle_evaluate",
]

SPACE_TAG_PLANTED = "fixture:planted"
SPACE_TAG_RANDOM = "fixture:random"

_DEFAULT_ROSTER = ("BI", "BR", "CH", "CM", "IN", "KE", "TR", "US")

# Income bands sitting strictly inside the canonical quartile edges, so the
# emitted edges preset reproduces the planted classes exactly.
_EDGES = QuartileEdges(95.0, 685.0, 1998.0)
_BANDS = {
    "poor": (30.0, 94.0),
    "low-mid": (100.0, 680.0),
    "up-mid": (700.0, 1990.0),
    "rich": (2005.0, 19000.0),
}

MAX_IMAGES = 500


@dataclass(frozen=True)
class PlantedSpec:
    """Parameters of a planted dataset.

    images_per_class images are generated per (topic, income class), so the
    total image count is n_topics * 4 * images_per_class. margin is the
    guaranteed score gap between in-topic and off-topic images under an
    aligned prompt. noise_scale in (0, 1] shrinks the in-topic cone.
    """

    seed: int
    n_topics: int
    images_per_class: int
    dim: int
    margin: float = 0.3
    noise_scale: float = 0.9
    prompt_mode: str = "aligned"
    countries: tuple[str, ...] = _DEFAULT_ROSTER

    def __post_init__(self) -> None:
        if self.n_topics < 1 or self.images_per_class < 1:
            raise InvalidSpec("n_topics and images_per_class must be >= 1")
        if self.dim < 4:
            raise InvalidSpec(f"dim must be >= 4, got {self.dim}")
        if not (0.0 < self.margin < 1.0):
            raise InvalidSpec(f"margin must be in (0, 1), got {self.margin}")
        if not (0.0 < self.noise_scale <= 1.0):
            raise InvalidSpec(f"noise_scale must be in (0, 1], got {self.noise_scale}")
        if self.prompt_mode not in ("aligned", "orthogonal"):
            raise InvalidSpec(f"prompt_mode must be aligned or orthogonal, got {self.prompt_mode!r}")
        minimum_dim = self.n_topics + (1 if self.prompt_mode == "orthogonal" else 0)
        if self.dim < minimum_dim:
            raise InvalidSpec(
                f"dim {self.dim} too small for {self.n_topics} topics in {self.prompt_mode} mode"
            )
        if not self.countries:
            raise InvalidSpec("need at least one country")
        if self.total_images > MAX_IMAGES:
            raise TooLarge(f"{self.total_images} images exceed the {MAX_IMAGES} fixture limit")

    @property
    def total_images(self) -> int:
        return self.n_topics * len(INCOME_CLASSES) * self.images_per_class

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "n_topics": self.n_topics,
            "images_per_class": self.images_per_class,
            "dim": self.dim,
            "margin": self.margin,
            "noise_scale": self.noise_scale,
            "prompt_mode": self.prompt_mode,
            "countries": list(self.countries),
        }


@dataclass(frozen=True)
class GeneratedFixture:
    directory: Path
    spec: PlantedSpec | None
    expected: Mapping[str, Any] | None = None
    summary: Mapping[str, Any] = field(default_factory=dict)


def _cone_limit(margin: float) -> float:
    """Largest angle theta with cos(theta) - sin(theta) >= margin."""
    return math.acos(margin / math.sqrt(2.0)) - math.pi / 4.0


def _unit_orthogonal(rng: np.random.Generator, dim: int, zero_axis: int) -> np.ndarray:
    while True:
        g = rng.normal(size=dim)
        g[zero_axis] = 0.0
        norm = float(np.sqrt(g @ g))
        if norm > 1e-9:
            return g / norm


def _roster_profiles(codes: tuple[str, ...]) -> dict[str, CountryProfile]:
    reference = bundled_country_reference()
    missing = [c for c in codes if c not in reference]
    if missing:
        raise InvalidSpec(f"countries not in the bundled reference: {missing}")
    return {c: reference[c] for c in codes}


def _prompt_keys(topics: list[str], languages: list[str], countries: list[str],
                 synonyms: SynonymSet) -> list[str]:
    keys = []
    for t in topics:
        keys.append(f"default|{t}")
        for lang in languages:
            keys.append(f"translated|{t}|{lang}")
        for code in countries:
            keys.append(f"country|{t}|{code}")
        for category in synonyms.names():
            for i in range(len(synonyms.phrases(category))):
                keys.append(f"income|{t}|{category}|{i}")
    return sorted(keys)


def _pseudo_manifest(topics: TopicCatalog, languages: list[str]) -> TranslationManifest:
    entries = {
        (t, lang): f"[{lang}] This is a photo of {topics.label(t)}"
        for t in topics.objective_ids()
        for lang in languages
    }
    return TranslationManifest(entries, source_model_tag="fixture:pseudo-translation")


def generate(spec: PlantedSpec, out_dir: str | Path) -> GeneratedFixture:
    """Write a planted dataset and, in aligned mode, its expected table.

    The expected table covers the check plan {family: default, group_axes:
    [image_income_class]}: every cell has recall exactly 1.0 and delta 0.0.
    """
    rng = np.random.default_rng(spec.seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    profiles = _roster_profiles(spec.countries)
    languages = sorted({p.major_language for p in profiles.values() if p.major_language})

    topics = [f"t{i:02d}" for i in range(spec.n_topics)]
    catalog = TopicCatalog({t: TopicEntry(f"object {i:02d}", False) for i, t in enumerate(topics)})

    theta_max = _cone_limit(spec.margin) * spec.noise_scale
    records: list[ImageRecord] = []
    vectors: list[np.ndarray] = []
    counter = 0
    for ti, topic in enumerate(topics):
        for klass in INCOME_CLASSES:
            lo, hi = _BANDS[klass]
            for _ in range(spec.images_per_class):
                theta = theta_max * float(rng.random())
                u = _unit_orthogonal(rng, spec.dim, ti)
                v = np.zeros(spec.dim)
                v[ti] = math.cos(theta)
                v += math.sin(theta) * u
                scale = 0.5 + 1.5 * float(rng.random())
                vectors.append(scale * v)
                code = spec.countries[counter % len(spec.countries)]
                income = round(lo + (hi - lo) * float(rng.random()), 2)
                records.append(ImageRecord(f"img{counter:04d}", code, income, topic))
                counter += 1
    records.sort(key=lambda r: r.image_id)
    dataset = Dataset(tuple(records), catalog, profiles)

    synonyms = bundled_synonyms()
    keys = _prompt_keys(topics, languages, sorted(spec.countries), synonyms)
    if spec.prompt_mode == "aligned":
        prompt_rows = []
        for key in keys:
            topic = key.split("|")[1]
            vec = np.zeros(spec.dim)
            vec[topics.index(topic)] = 1.0
            prompt_rows.append(vec)
    else:
        free = spec.dim - spec.n_topics
        prompt_rows = []
        for _ in keys:
            g = rng.normal(size=free)
            g = g / float(np.sqrt(g @ g))
            vec = np.zeros(spec.dim)
            vec[spec.n_topics:] = g
            prompt_rows.append(vec)

    paths = write_metadata(dataset, out)
    image_store = EmbeddingStore(
        spec.dim, tuple(r.image_id for r in records), np.array(vectors),
        normalized=False, space_tag=SPACE_TAG_PLANTED)
    write_embeddings(image_store, out / "images.f32")
    prompt_store = EmbeddingStore(
        spec.dim, tuple(keys), np.array(prompt_rows),
        normalized=True, space_tag=SPACE_TAG_PLANTED)
    write_embeddings(prompt_store, out / "prompts.f32")
    write_translations(_pseudo_manifest(catalog, languages), out / "translations.json")
    write_json(out / "synonyms.json", {k: list(v) for k, v in synonyms.categories.items()})
    write_json(out / "edges.json", _EDGES.to_dict())
    write_json(out / "spec.json", spec.to_dict())

    expected = None
    if spec.prompt_mode == "aligned":
        plan = ExperimentPlan(name="planted_check", family="default",
                              group_axes=("image_income_class",))
        rows = [
            {"axes": {"image_income_class": klass}, "recall": 1.0, "delta": 0.0,
             "topic_count": spec.n_topics}
            for klass in sorted(INCOME_CLASSES)
        ]
        expected = {"plan": plan.to_dict(), "groups": rows}
        write_json(out / "expected_recall.json", expected)

    return GeneratedFixture(out, spec, expected, {
        "images": len(records), "topics": len(topics), "languages": languages,
        "prompt_rows": len(keys),
    })


def generate_random_instance(seed: int, out_dir: str | Path) -> GeneratedFixture:
    """Write a fully random (unplanted) instance for equivalence testing.

    Sizes stay small enough for brute-force re-evaluation; embeddings are
    random directions, incomes are spread over the plausible range, and a
    subjective topic with images is included half the time to exercise pool
    filtering.
    """
    rng = np.random.default_rng(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    reference = bundled_country_reference()
    all_codes = sorted(reference)
    n_countries = int(rng.integers(3, 9))
    codes = sorted(rng.choice(all_codes, size=n_countries, replace=False).tolist())
    profiles = {c: reference[c] for c in codes}

    n_topics = int(rng.integers(2, 7))
    topics = [f"t{i:02d}" for i in range(n_topics)]
    entries = {t: TopicEntry(f"object {i:02d}", False) for i, t in enumerate(topics)}
    if rng.random() < 0.5:
        entries["subj00"] = TopicEntry("subjective object", True)
    catalog = TopicCatalog(entries)
    assignable = topics + (["subj00"] if "subj00" in entries else [])

    n_images = int(rng.integers(24, 141))
    dim = int(rng.integers(4, 13))
    records = []
    for i in range(n_images):
        topic = assignable[int(rng.integers(0, len(assignable)))]
        code = codes[int(rng.integers(0, len(codes)))]
        income = float(np.exp(rng.uniform(np.log(27.0), np.log(19000.0))))
        records.append(ImageRecord(f"img{i:04d}", code, round(income, 4), topic))
    records.sort(key=lambda r: r.image_id)
    dataset = Dataset(tuple(records), catalog, profiles)

    languages = sorted({p.major_language for p in profiles.values() if p.major_language})
    if not languages:
        languages = ["sw"]
    synonyms = bundled_synonyms()
    keys = _prompt_keys(sorted(set(assignable)), languages, codes, synonyms)

    image_matrix = rng.normal(size=(n_images, dim))
    prompt_matrix = rng.normal(size=(len(keys), dim))
    prompt_matrix /= np.sqrt(np.einsum("ij,ij->i", prompt_matrix, prompt_matrix))[:, None]

    paths = write_metadata(dataset, out)
    write_embeddings(EmbeddingStore(dim, tuple(r.image_id for r in records), image_matrix,
                                    normalized=False, space_tag=SPACE_TAG_RANDOM),
                     out / "images.f32")
    write_embeddings(EmbeddingStore(dim, tuple(keys), prompt_matrix,
                                    normalized=True, space_tag=SPACE_TAG_RANDOM),
                     out / "prompts.f32")
    write_translations(_pseudo_manifest(catalog, languages), out / "translations.json")
    write_json(out / "synonyms.json", {k: list(v) for k, v in synonyms.categories.items()})
    edges = _instance_edges(records)
    write_json(out / "edges.json", edges.to_dict())

    return GeneratedFixture(out, None, None, {
        "images": n_images, "topics": n_topics, "dim": dim,
        "languages": languages, "countries": codes,
    })


def _instance_edges(records) -> QuartileEdges:
    from ..strata import compute_quartile_edges

    return compute_quartile_edges([r.monthly_income_usd for r in records])


def random_plan(seed: int, dataset: Dataset, languages: list[str],
                edges: QuartileEdges) -> ExperimentPlan:
    """Draw a random valid plan whose image filter keeps at least one record."""
    rng = np.random.default_rng(seed)
    families = ("default", "translated", "country_suffix", "income_suffix")
    pool = dataset.pool()
    for _ in range(64):
        family = families[int(rng.integers(0, len(families)))]
        if family == "translated" and not languages:
            continue
        n_group = int(rng.integers(0, 3))
        group_axes = tuple(sorted(
            rng.choice(GROUP_AXES, size=n_group, replace=False).tolist())) if n_group else ()
        legal = VARIANT_AXES_BY_FAMILY[family]
        variant_axes = tuple(
            axis for axis in legal if rng.random() < 0.5
        )
        image_filter: dict[str, Any] = {}
        if rng.random() < 0.4:
            image_filter["coarse_income"] = "lower" if rng.random() < 0.5 else "higher"
        if rng.random() < 0.2:
            image_filter["income_classes"] = sorted(
                rng.choice(INCOME_CLASSES, size=2, replace=False).tolist())
        pairing = None
        if "country" in group_axes:
            if family == "translated" and rng.random() < 0.3:
                pairing = "native_language"
            elif family == "country_suffix" and rng.random() < 0.3:
                pairing = "own_country"
        n_langs = int(rng.integers(1, len(languages) + 1)) if languages else 0
        plan_langs = tuple(sorted(
            rng.choice(languages, size=n_langs, replace=False).tolist())) if n_langs else None

        def keeps_any() -> bool:
            for r in pool:
                klass = assign_income_class(r.monthly_income_usd, edges).value
                coarse = "lower" if klass in ("poor", "low-mid") else "higher"
                if "coarse_income" in image_filter and coarse != image_filter["coarse_income"]:
                    continue
                if "income_classes" in image_filter and klass not in image_filter["income_classes"]:
                    continue
                return True
            return False

        if not keeps_any():
            continue
        try:
            return ExperimentPlan(
                name=f"random-{seed}",
                family=family,
                group_axes=group_axes,
                variant_axes=variant_axes,
                image_filter=image_filter,
                languages=plan_langs if family == "translated" else None,
                pairing=pairing,
                aggregation="micro" if rng.random() < 0.3 else "macro",
                restrict_gt_to_group=bool(rng.random() < 0.2),
            )
        except Exception:
            continue
    # a plain fallback that always evaluates
    return ExperimentPlan(name=f"random-{seed}", family="default",
                          group_axes=("image_income_class",))
