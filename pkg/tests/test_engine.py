"""Retrieval, plan validation, and the aggregation pipeline.

The end-to-end expectations in TestHandComputed were worked out on paper from
unit vectors at known angles: integer hit counts divided by integer
ground-truth sizes, so the asserted values are exact.
"""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import PROFILES, make_dataset, unit_store
from promptstrata import (
    ExperimentPlan,
    QuartileEdges,
    RecallTable,
    alignment_scores,
    group_recall,
    preset_plan,
    retrieval_runs,
    run_experiment,
    topn_retrieve,
)
from promptstrata.engine import RetrievalRun
from promptstrata.errors import (
    DimensionMismatch,
    EmptyGroup,
    EmptyPool,
    InvalidPlan,
    MissingBaseline,
    NotNormalized,
    SpaceTagMismatch,
    UsageError,
)

EDGES = QuartileEdges(95.0, 685.0, 1998.0)


def vec(deg: float) -> list[float]:
    return [math.cos(math.radians(deg)), math.sin(math.radians(deg))]


class TestPlanValidation:
    def test_minimal(self):
        plan = ExperimentPlan(name="p", family="default")
        assert plan.aggregation == "macro"
        assert plan.to_dict()["group_axes"] == []

    @pytest.mark.parametrize("kwargs", [
        {"family": "nonsense"},
        {"family": "default", "group_axes": ("zodiac",)},
        {"family": "default", "group_axes": ("country", "country")},
        {"family": "translated"},  # no languages
        {"family": "default", "variant_axes": ("language",)},  # wrong family
        {"family": "translated", "languages": ("fr",), "pairing": "native_language"},
        {"family": "country_suffix", "group_axes": ("country",),
         "pairing": "native_language"},
        {"family": "default", "aggregation": "median"},
        {"family": "default", "image_filter": {"zodiac": "x"}},
    ])
    def test_rejected(self, kwargs):
        with pytest.raises(InvalidPlan):
            ExperimentPlan(name="p", **kwargs)

    def test_round_trip(self):
        plan = ExperimentPlan(
            name="p", family="translated", group_axes=("country",),
            variant_axes=("language",), languages=("de", "fr"),
            pairing="native_language", image_filter={"coarse_income": "lower"},
            meta={"native_language_by_country": {"BI": "fr"}},
        )
        assert ExperimentPlan.from_dict(plan.to_dict()) == plan

    def test_from_dict_rejects_unknown_fields(self):
        with pytest.raises(InvalidPlan):
            ExperimentPlan.from_dict({"family": "default", "surprise": 1})


class TestScoring:
    def test_alignment_is_dot_product(self):
        store = unit_store(["a", "b"], [[1.0, 0.0], [0.0, 1.0]])
        scores = alignment_scores(store, np.array([1.0, 0.0]))
        assert scores.tolist() == [1.0, 0.0]

    def test_rejects_raw_store(self):
        store = unit_store(["a"], [[3.0, 4.0]], normalized=False)
        with pytest.raises(NotNormalized):
            alignment_scores(store, np.array([1.0, 0.0]))

    def test_rejects_unnormalized_prompt(self):
        store = unit_store(["a"], [[1.0, 0.0]])
        with pytest.raises(NotNormalized):
            alignment_scores(store, np.array([2.0, 0.0]))

    def test_rejects_wrong_dim(self):
        store = unit_store(["a"], [[1.0, 0.0]])
        with pytest.raises(DimensionMismatch):
            alignment_scores(store, np.array([1.0, 0.0, 0.0]))


class TestTopN:
    def test_tie_broken_by_id(self):
        ids, scores = topn_retrieve([0.9, 0.8, 0.8, 0.1], ["a", "b", "c", "d"], 2)
        assert ids == ["a", "b"]
        assert scores == [0.9, 0.8]

    def test_tie_break_ignores_input_order(self):
        ids, _ = topn_retrieve([0.1, 0.8, 0.8, 0.9], ["d", "c", "b", "a"], 2)
        assert ids == ["a", "b"]

    def test_n_clamped_to_pool(self):
        ids, _ = topn_retrieve([0.5, 0.4], ["a", "b"], 10)
        assert ids == ["a", "b"]

    def test_errors(self):
        with pytest.raises(EmptyPool):
            topn_retrieve([], [], 1)
        with pytest.raises(DimensionMismatch):
            topn_retrieve([0.1], ["a", "b"], 1)
        with pytest.raises(UsageError):
            topn_retrieve([0.1], ["a"], 0)

    @given(st.data())
    def test_matches_sort_oracle(self, data):
        n_items = data.draw(st.integers(min_value=1, max_value=30))
        # one decimal place forces plenty of ties
        scores = [round(s, 1) for s in data.draw(st.lists(
            st.floats(min_value=-1, max_value=1), min_size=n_items, max_size=n_items))]
        ids = [f"i{k:03d}" for k in range(n_items)]
        n = data.draw(st.integers(min_value=1, max_value=n_items))
        expected = [i for _, i in sorted(zip(scores, ids),
                                         key=lambda p: (-p[0], p[1]))][:n]
        assert topn_retrieve(scores, ids, n)[0] == expected


class TestGroupRecall:
    RUN = RetrievalRun("t1", "default|t1", 2, ("a", "d"), (1.0, 0.5))

    def test_counts_intersection(self):
        assert group_recall(self.RUN, {"a", "b"}, {"a", "c"}) == 1.0
        assert group_recall(self.RUN, {"a", "b"}, {"b", "c"}) == 0.0

    def test_undefined_when_group_has_no_gt(self):
        assert group_recall(self.RUN, {"a", "b"}, {"c"}) is None


def two_topic_setup(b_deg=80.0):
    """Four images, two topics, prompts at exact angles; see hand notes below.

    t1 ground truth {a, b}, t2 {c, d}. With b at 80 degrees the default
    prompts each retrieve one hit out of two: top2 for t1 is [a, d], for t2
    [c, b].
    """
    ds = make_dataset([
        ("a", "BI", 40.0, "t1"),
        ("b", "CH", 2500.0, "t1"),
        ("c", "BI", 50.0, "t2"),
        ("d", "CH", 3000.0, "t2"),
    ])
    images = unit_store(["a", "b", "c", "d"],
                        [vec(0), vec(b_deg), vec(90), vec(70)], space_tag="s")
    prompts = unit_store(
        ["default|t1", "default|t2",
         "country|t1|BI", "country|t1|CH", "country|t2|BI", "country|t2|CH"],
        [vec(0), vec(90), vec(0), vec(90), vec(90), vec(70)],
        space_tag="s")
    return ds, images, prompts


class TestHandComputed:
    def test_default_by_income_class(self):
        ds, images, prompts = two_topic_setup()
        plan = ExperimentPlan(name="check", family="default",
                              group_axes=("image_income_class",))
        table = run_experiment(plan, ds, images, prompts, edges=EDGES)
        assert [r.to_dict() for r in table.rows] == [
            {"axes": {"image_income_class": "poor"},
             "recall": 1.0, "delta": 0.0, "topic_count": 2},
            {"axes": {"image_income_class": "rich"},
             "recall": 0.0, "delta": 0.0, "topic_count": 2},
        ]

    def test_country_suffix_grid(self):
        # suffix wb poor = BI's prompts (aimed like the defaults), suffix wb
        # rich = CH's prompts (aimed at the other cluster), so the grid is
        # diagonal: recall 1 where suffix class matches image class.
        ds, images, prompts = two_topic_setup()
        plan = ExperimentPlan(name="grid", family="country_suffix",
                              group_axes=("image_income_class",),
                              variant_axes=("suffix_wb_class",))
        table = run_experiment(plan, ds, images, prompts, edges=EDGES)
        cells = {
            (r.axes["image_income_class"], r.axes["suffix_wb_class"]):
                (r.recall, r.delta)
            for r in table.rows
        }
        assert cells == {
            ("poor", "poor"): (1.0, 0.0),
            ("poor", "rich"): (0.0, -1.0),
            ("rich", "poor"): (0.0, 0.0),
            ("rich", "rich"): (1.0, 1.0),
        }

    def test_retrieval_runs_exposes_prefixes(self):
        ds, images, prompts = two_topic_setup()
        plan = ExperimentPlan(name="check", family="default")
        runs = retrieval_runs(plan, ds, images, prompts, edges=EDGES)
        assert runs["default|t1"] == ("a", "d")
        assert runs["default|t2"] == ("c", "b")


def six_image_setup(e_deg: float):
    """Three t1 images (two poor), three t2 images (one poor)."""
    ds = make_dataset([
        ("a", "BI", 40.0, "t1"),
        ("b", "CH", 2500.0, "t1"),
        ("c", "BI", 50.0, "t2"),
        ("d", "CH", 3000.0, "t2"),
        ("e", "BI", 60.0, "t1"),
        ("f", "CH", 4000.0, "t2"),
    ])
    images = unit_store(["a", "b", "c", "d", "e", "f"],
                        [vec(0), vec(80), vec(90), vec(70), vec(e_deg), vec(45)],
                        space_tag="s")
    prompts = unit_store(["default|t1", "default|t2"], [vec(0), vec(90)],
                         space_tag="s")
    return ds, images, prompts


class TestAggregationModes:
    def test_macro_vs_micro(self):
        # Group poor = {a, c, e}. With e at 88 degrees, top3 for t1 is
        # [a, f, d]: t1 hits 1 of 2 in the group; t2's top3 [c, e, b] hits
        # 1 of 1. macro = (1/2 + 1)/2, micro = (1+1)/(2+1).
        ds, images, prompts = six_image_setup(e_deg=88.0)
        base = dict(name="m", family="default", group_axes=("image_income_class",),
                    image_filter={"income_classes": ["poor"]})
        macro = run_experiment(ExperimentPlan(**base), ds, images, prompts, edges=EDGES)
        micro = run_experiment(ExperimentPlan(**base, aggregation="micro"),
                               ds, images, prompts, edges=EDGES)
        assert macro.rows[0].recall == (1 / 2 + 1) / 2
        assert micro.rows[0].recall == 2 / 3

    def test_restrict_gt_to_group(self):
        # With e at 60 degrees t1's top3 is [a, f, e]: both poor-group images
        # of t1 appear, but e only at rank 3. Unrestricted recall sees it;
        # restricting the retrieved list to the group's GT count (2) cuts it.
        ds, images, prompts = six_image_setup(e_deg=60.0)
        base = dict(name="r", family="default", group_axes=("image_income_class",),
                    image_filter={"income_classes": ["poor"]})
        loose = run_experiment(ExperimentPlan(**base), ds, images, prompts, edges=EDGES)
        tight = run_experiment(ExperimentPlan(**base, restrict_gt_to_group=True),
                               ds, images, prompts, edges=EDGES)
        assert loose.rows[0].recall == (1.0 + 1.0) / 2
        assert tight.rows[0].recall == (1 / 2 + 1.0) / 2


class TestGuards:
    def test_space_tag_mismatch(self):
        ds, images, prompts = two_topic_setup()
        other = unit_store(prompts.ids, prompts.matrix, space_tag="other")
        with pytest.raises(SpaceTagMismatch):
            run_experiment(ExperimentPlan(name="x", family="default"),
                           ds, images, other, edges=EDGES)

    def test_missing_baseline(self):
        ds, images, prompts = two_topic_setup()
        partial = unit_store(["default|t1"], [vec(0)], space_tag="s")
        with pytest.raises(MissingBaseline):
            run_experiment(ExperimentPlan(name="x", family="default"),
                           ds, images, partial, edges=EDGES)

    def test_empty_group_filter(self):
        ds, images, prompts = two_topic_setup()
        plan = ExperimentPlan(name="x", family="default",
                              image_filter={"continents": ["Asia"]})
        with pytest.raises(EmptyGroup):
            run_experiment(plan, ds, images, prompts, edges=EDGES)

    def test_empty_pool(self):
        ds = make_dataset([("a", "BI", 40.0, "t1")],
                          topics={"t1": ("anything", True)})
        images = unit_store(["a"], [vec(0)], space_tag="s")
        prompts = unit_store(["default|t1"], [vec(0)], space_tag="s")
        with pytest.raises(EmptyPool):
            run_experiment(ExperimentPlan(name="x", family="default"),
                           ds, images, prompts, edges=EDGES)

    def test_raw_store_rejected(self):
        ds, images, prompts = two_topic_setup()
        raw = unit_store(images.ids, images.matrix * 2.0, normalized=False,
                         space_tag="s")
        with pytest.raises(NotNormalized):
            run_experiment(ExperimentPlan(name="x", family="default"),
                           ds, raw, prompts, edges=EDGES)


class TestDeterminism:
    def make_instance(self, tmp_path, seed=3):
        from promptstrata import load_bundle
        from promptstrata.fixtures import generate_random_instance

        generate_random_instance(seed, tmp_path / "inst")
        return load_bundle(tmp_path / "inst")

    def test_workers_do_not_change_bytes(self, tmp_path):
        bundle = self.make_instance(tmp_path)
        plan = ExperimentPlan(name="w", family="country_suffix",
                              group_axes=("image_income_class",),
                              variant_axes=("suffix_wb_class",))
        serial = run_experiment(plan, bundle.dataset, bundle.images, bundle.prompts,
                                edges=bundle.edges, workers=1)
        threaded = run_experiment(plan, bundle.dataset, bundle.images, bundle.prompts,
                                  edges=bundle.edges, workers=4)
        assert serial.to_bytes() == threaded.to_bytes()

    def test_scale_invariant_in_memory(self, tmp_path):
        bundle = self.make_instance(tmp_path, seed=4)
        plan = ExperimentPlan(name="s", family="income_suffix",
                              group_axes=("image_income_class",),
                              variant_axes=("income_category",))
        reference = run_experiment(plan, bundle.dataset, bundle.images, bundle.prompts,
                                   edges=bundle.edges)
        raw = unit_store(bundle.images.ids, bundle.images.matrix * 1000.0,
                         normalized=False, space_tag=bundle.images.space_tag)
        rescaled = run_experiment(plan, bundle.dataset, raw.normalize(),
                                  bundle.prompts, edges=bundle.edges)
        assert reference.to_bytes() == rescaled.to_bytes()

    @given(seed=st.integers(min_value=0, max_value=200))
    def test_boosting_gt_alignment_never_lowers_hits(self, tmp_path_factory, seed):
        from promptstrata import load_bundle
        from promptstrata.fixtures import generate_random_instance

        tmp = tmp_path_factory.mktemp("boost")
        generate_random_instance(seed, tmp / "i")
        bundle = load_bundle(tmp / "i")
        plan = ExperimentPlan(name="b", family="default")
        runs = retrieval_runs(plan, bundle.dataset, bundle.images, bundle.prompts,
                              edges=bundle.edges)
        pool = bundle.dataset.pool()
        rng = np.random.default_rng(seed)
        topic = sorted({r.topic_id for r in pool})[0]
        gt_ids = [r.image_id for r in pool if r.topic_id == topic]
        target = gt_ids[int(rng.integers(0, len(gt_ids)))]
        before = len(set(runs[f"default|{topic}"]) & set(gt_ids))

        boosted_matrix = bundle.images.matrix.copy()
        prompt_row = bundle.prompts.matrix[bundle.prompts.row_of(f"default|{topic}")]
        boosted_matrix[bundle.images.row_of(target)] = prompt_row
        boosted = unit_store(bundle.images.ids, boosted_matrix,
                             space_tag=bundle.images.space_tag)
        runs_after = retrieval_runs(plan, bundle.dataset, boosted, bundle.prompts,
                                    edges=bundle.edges)
        after = len(set(runs_after[f"default|{topic}"]) & set(gt_ids))
        assert after >= before


class TestPresets:
    def test_rq1_structure(self, planted_dir):
        from promptstrata import load_bundle

        _, directory = planted_dir
        bundle = load_bundle(directory)
        plan = preset_plan("rq1", bundle.dataset, bundle.edges)
        assert plan.family == "translated"
        assert plan.group_axes == ("country",)
        assert plan.variant_axes == ("language",)
        assert plan.image_filter["coarse_income"] == "lower"
        natives = plan.meta["native_language_by_country"]
        assert set(plan.image_filter["countries"]) == set(natives)
        assert set(plan.languages) == set(natives.values())

    def test_rq2_rq3_shape(self, planted_dir):
        from promptstrata import load_bundle

        _, directory = planted_dir
        bundle = load_bundle(directory)
        rq2 = preset_plan("rq2", bundle.dataset, bundle.edges)
        assert (rq2.family, rq2.variant_axes) == ("country_suffix", ("suffix_wb_class",))
        rq3 = preset_plan("rq3", bundle.dataset, bundle.edges)
        assert (rq3.family, rq3.variant_axes) == ("income_suffix", ("income_category",))

    def test_unknown_preset(self, planted_dir):
        from promptstrata import load_bundle

        _, directory = planted_dir
        bundle = load_bundle(directory)
        with pytest.raises(InvalidPlan):
            preset_plan("rq9", bundle.dataset, bundle.edges)

    def test_rq1_native_pairing_restricts_cells(self, planted_dir):
        from promptstrata import load_bundle

        _, directory = planted_dir
        bundle = load_bundle(directory)
        plan = preset_plan("rq1", bundle.dataset, bundle.edges)
        table = run_experiment(plan, bundle.dataset, bundle.images, bundle.prompts,
                               edges=bundle.edges)
        paired = ExperimentPlan.from_dict({**plan.to_dict(), "pairing": "native_language"})
        paired_table = run_experiment(paired, bundle.dataset, bundle.images,
                                      bundle.prompts, edges=bundle.edges)
        natives = plan.meta["native_language_by_country"]
        assert all(
            natives[r.axes["country"]] == r.axes["language"]
            for r in paired_table.rows
        )
        assert len(paired_table.rows) < len(table.rows)
