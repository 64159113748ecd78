"""Rendering tests: markdown/CSV/JSON tables and heatmap construction.

The golden files under tests/golden/ were composed by hand from the
documented formatting rules (percentages with one decimal, signed deltas,
class-ordered axes, canonical JSON). The renderer must reproduce them
byte for byte.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from promptstrata.engine import ExperimentPlan
from promptstrata.errors import EmptyTable, MissingAxis, UsageError
from promptstrata.report import FORMATS, build_heatmap, render_table

GOLDEN = Path(__file__).parent / "golden"

CLASSES = ("poor", "low-mid", "up-mid", "rich")

# (recall, delta) per (suffix_wb_class row, image_income_class column).
GRID_VALUES = {
    "poor": ((0.412, 0.097), (0.388, 0.042), (0.293, -0.014), (0.251, -0.082)),
    "low-mid": ((0.374, 0.059), (0.401, 0.055), (0.322, 0.015), (0.270, -0.063)),
    "up-mid": ((0.331, 0.016), (0.372, 0.026), (0.356, 0.049), (0.301, -0.032)),
    "rich": ((0.286, -0.029), (0.345, -0.001), (0.348, 0.041), (0.365, 0.032)),
}


def grid_table() -> dict:
    plan = ExperimentPlan(
        name="golden_grid",
        family="country_suffix",
        group_axes=("image_income_class",),
        variant_axes=("suffix_wb_class",),
        render_rows="suffix_wb_class",
    )
    rows = []
    for suffix_class, cells in GRID_VALUES.items():
        for image_class, (recall, delta) in zip(CLASSES, cells):
            rows.append({
                "axes": {"image_income_class": image_class,
                         "suffix_wb_class": suffix_class},
                "recall": recall,
                "delta": delta,
                "topic_count": 38,
            })
    # Deliberately scrambled: the renderer owns the ordering.
    random.Random(7).shuffle(rows)
    return {"plan": plan.to_dict(), "groups": rows}


def heatmap_table() -> dict:
    plan = ExperimentPlan(
        name="golden_heatmap",
        family="translated",
        group_axes=("country",),
        variant_axes=("language",),
        languages=("fr", "sw"),
        meta={"native_language_by_country": {"BI": "fr", "CM": "fr", "KE": "sw"}},
    )
    cells = [
        ("BI", "fr", 0.45), ("BI", "sw", 0.61),
        ("CM", "fr", 0.31), ("CM", "sw", 0.31),
        ("KE", "sw", 0.52),  # KE/fr intentionally absent
    ]
    rows = [
        {"axes": {"country": c, "language": lang}, "recall": v,
         "delta": 0.0, "topic_count": 5}
        for c, lang, v in cells
    ]
    return {"plan": plan.to_dict(), "groups": rows}


class TestGoldenFiles:
    def test_grid_markdown_matches_golden(self):
        assert render_table(grid_table(), "md") == (GOLDEN / "grid_table.md").read_bytes()

    def test_grid_csv_matches_golden(self):
        assert render_table(grid_table(), "csv") == (GOLDEN / "grid_table.csv").read_bytes()

    def test_heatmap_matches_golden(self):
        matrix = build_heatmap(heatmap_table())
        assert matrix.to_bytes() == (GOLDEN / "heatmap.json").read_bytes()

    def test_heatmap_structure(self):
        matrix = build_heatmap(heatmap_table())
        assert matrix.rows == ("BI", "CM", "KE")
        assert matrix.cols == ("fr", "sw")
        assert matrix.values[2] == (None, 0.52)
        # Tie at CM resolves to the lexicographically first language.
        assert matrix.markers["CM"]["best"] == "fr"
        assert matrix.markers["CM"]["both"] is True
        # BI's best language is not its native one.
        assert matrix.markers["BI"] == {"native": "fr", "best": "sw", "both": False}


class TestJsonFormat:
    def test_json_is_canonical_dump_of_the_dict(self):
        table = grid_table()
        expected = json.dumps(table, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
        assert render_table(table, "json") == expected.encode("utf-8")

    def test_json_keeps_unicode(self):
        table = {"plan": None, "groups": [
            {"axes": {"country": "Côte"}, "recall": 0.5, "delta": 0.0, "topic_count": 1},
        ]}
        assert "Côte".encode("utf-8") in render_table(table, "json")

    def test_json_allows_empty_groups(self):
        out = render_table({"plan": None, "groups": []}, "json")
        assert json.loads(out) == {"plan": None, "groups": []}


class TestFlatRendering:
    def flat_table(self) -> dict:
        rows = [
            {"axes": {"income_category": cat}, "recall": r, "delta": d, "topic_count": 7}
            for cat, r, d in [("rich", 0.25, -0.05), ("neutral", 0.4, 0.0),
                              ("poor", 0.3, 0.1)]
        ]
        return {"plan": {"group_axes": [], "variant_axes": ["income_category"]},
                "groups": rows}

    def test_single_axis_markdown(self):
        expected = (
            "| income_category | recall | delta | topics |\n"
            "|---|---|---|---|\n"
            "| poor | 30.0 | +10.0 | 7 |\n"
            "| rich | 25.0 | -5.0 | 7 |\n"
            "| neutral | 40.0 | +0.0 | 7 |\n"
        )
        assert render_table(self.flat_table(), "md") == expected.encode("utf-8")

    def test_single_axis_csv(self):
        expected = (
            "income_category,recall_pct,delta_pct,topic_count\n"
            "poor,30.0,+10.0,7\n"
            "rich,25.0,-5.0,7\n"
            "neutral,40.0,+0.0,7\n"
        )
        assert render_table(self.flat_table(), "csv") == expected.encode("utf-8")

    def test_csv_quotes_awkward_values(self):
        table = {"plan": None, "groups": [
            {"axes": {"country": 'a,"b"'}, "recall": 0.5, "delta": 0.0, "topic_count": 1},
        ]}
        out = render_table(table, "csv").decode("utf-8")
        assert out.splitlines()[1] == '"a,""b""",50.0,+0.0,1'

    def test_three_axis_tables_render_flat(self):
        rows = [
            {"axes": {"country": "BI", "language": "fr", "income_category": "poor"},
             "recall": 0.2, "delta": 0.0, "topic_count": 3},
        ]
        out = render_table({"plan": None, "groups": rows}, "md").decode("utf-8")
        assert out.startswith("| country | income_category | language | recall |")


class TestRowAxisOverride:
    def test_override_transposes_the_grid(self):
        out = render_table(grid_table(), "md", row_axis="image_income_class")
        first = out.decode("utf-8").splitlines()[0]
        assert first == "| image_income_class | poor | low-mid | up-mid | rich |"
        # Cell (image poor, suffix rich) is 28.6 (-2.9); it now sits in
        # the first data row, last column.
        data = out.decode("utf-8").splitlines()[2]
        assert data.endswith("| 28.6 (-2.9) |")
        assert data.startswith("| poor | 41.2 (+9.7) |")

    def test_unknown_row_axis(self):
        with pytest.raises(MissingAxis):
            render_table(grid_table(), "md", row_axis="continent")


class TestErrors:
    def test_unknown_format(self):
        with pytest.raises(UsageError, match="unknown format"):
            render_table(grid_table(), "yaml")
        assert FORMATS == ("md", "csv", "json")

    @pytest.mark.parametrize("fmt", ["md", "csv"])
    def test_empty_table(self, fmt):
        with pytest.raises(EmptyTable):
            render_table({"plan": None, "groups": []}, fmt)

    def test_rows_must_share_axes(self):
        rows = [
            {"axes": {"country": "BI"}, "recall": 0.5, "delta": 0.0, "topic_count": 1},
            {"axes": {"language": "fr"}, "recall": 0.5, "delta": 0.0, "topic_count": 1},
        ]
        with pytest.raises(EmptyTable, match="disagree"):
            render_table({"plan": None, "groups": rows}, "md")

    def test_not_a_table(self):
        with pytest.raises(EmptyTable):
            render_table({"rows": []}, "md")

    def test_heatmap_needs_both_axes(self):
        rows = [{"axes": {"country": "BI"}, "recall": 0.5, "delta": 0.0, "topic_count": 1}]
        with pytest.raises(MissingAxis):
            build_heatmap({"plan": None, "groups": rows})

    def test_heatmap_empty_table(self):
        with pytest.raises(EmptyTable):
            build_heatmap({"plan": None, "groups": []})


class TestHeatmapMarkerOracle:
    """Markers recomputed by an independent in-test rule on random matrices.

    best = the highest defined recall in the row, ties resolved to the
    lexicographically first language; rows with no defined value disappear.
    """

    def test_markers_match_oracle_on_random_matrices(self):
        rng = random.Random(20240817)
        for _ in range(120):
            n_countries = rng.randrange(1, 7)
            n_langs = rng.randrange(1, 6)
            countries = [f"C{i:02d}" for i in range(n_countries)]
            langs = sorted(rng.sample(
                ["de", "en", "fr", "hi", "pt", "sw", "tr", "zh"], n_langs))
            natives = {c: rng.choice(langs + [None]) for c in countries}
            cells = {}
            for c in countries:
                for lang in langs:
                    if rng.random() < 0.75:
                        # Coarse grid of values so ties actually happen.
                        cells[(c, lang)] = rng.randrange(0, 10) / 10
            if not cells:
                continue
            rows = [
                {"axes": {"country": c, "language": lang}, "recall": v,
                 "delta": 0.0, "topic_count": 1}
                for (c, lang), v in cells.items()
            ]
            plan = {"group_axes": ["country"], "variant_axes": ["language"],
                    "meta": {"native_language_by_country": {
                        c: n for c, n in natives.items() if n is not None}}}
            matrix = build_heatmap({"plan": plan, "groups": rows})

            seen_langs = sorted({lang for _, lang in cells})
            expected_rows = [c for c in sorted(countries)
                             if any((c, lang) in cells for lang in langs)]
            assert list(matrix.rows) == expected_rows
            assert list(matrix.cols) == seen_langs
            for i, c in enumerate(expected_rows):
                defined = {lang: cells[(c, lang)] for lang in langs if (c, lang) in cells}
                best_value = max(defined.values())
                best = min(lang for lang, v in defined.items() if v == best_value)
                marker = matrix.markers[c]
                assert marker["best"] == best
                assert marker["native"] == natives[c]
                assert marker["both"] is (natives[c] is not None and natives[c] == best)
                for j, lang in enumerate(matrix.cols):
                    assert matrix.values[i][j] == cells.get((c, lang))
