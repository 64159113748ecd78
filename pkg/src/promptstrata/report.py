"""Render recall tables as markdown, CSV, or JSON, and build heatmaps.

Human-facing formats show recall as percentages with one decimal and deltas
with an explicit sign ("31.2 (+9.7)"); the JSON format keeps full float
precision. Rendering is deterministic: fixed axis ordering, fixed number
formatting, newline-terminated output.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .errors import EmptyTable, MissingAxis, UsageError
from .jsonio import canonical_bytes
from .prompts import CATEGORY_ORDER
from .strata import COARSE_GROUPS, CONTINENTS, INCOME_CLASSES

__all__ = ["FORMATS", "HeatmapMatrix", "render_table", "build_heatmap"]

FORMATS: tuple[str, ...] = ("md", "csv", "json")

# Preferred value ordering per axis; unknown values sort lexicographically
# after the known ones, unknown axes sort lexicographically throughout.
_AXIS_ORDER: Mapping[str, Sequence[str]] = {
    "image_income_class": INCOME_CLASSES,
    "country_wb_class": INCOME_CLASSES,
    "suffix_wb_class": INCOME_CLASSES,
    "coarse_income": COARSE_GROUPS,
    "continent": CONTINENTS,
    "suffix_continent": CONTINENTS,
    "income_category": CATEGORY_ORDER,
}


def _table_dict(table: Any) -> dict[str, Any]:
    if hasattr(table, "to_dict"):
        table = table.to_dict()
    if not isinstance(table, Mapping) or "groups" not in table:
        raise EmptyTable("expected a table with a 'groups' list")
    return dict(table)


def _axis_sort_key(axis: str, value: str) -> tuple[int, str]:
    order = _AXIS_ORDER.get(axis)
    if order and value in order:
        return (order.index(value), "")
    return (len(order) if order else 0, value)


def _pct(x: float) -> str:
    return f"{x * 100:.1f}"


def _delta(x: float) -> str:
    return f"{x * 100:+.1f}"


def _axes_of(rows: Sequence[Mapping[str, Any]]) -> list[str]:
    axes = list(rows[0]["axes"].keys())
    for row in rows:
        if set(row["axes"]) != set(axes):
            raise EmptyTable("rows disagree on their axes")
    return axes


def _ordered_axes(table: dict[str, Any], rows: Sequence[Mapping[str, Any]]) -> list[str]:
    plan = table.get("plan") or {}
    declared = list(plan.get("group_axes", ())) + list(plan.get("variant_axes", ()))
    present = set(_axes_of(rows))
    ordered = [a for a in declared if a in present]
    ordered += sorted(present - set(ordered))
    return ordered


def render_table(table: Any, fmt: str, row_axis: str | None = None) -> bytes:
    """Serialize a RecallTable (or its dict form).

    md pivots two-axis tables into a grid of "recall (delta)" cells; the grid's
    row axis is `row_axis`, falling back to the plan's render_rows, then the
    first axis. Other shapes render flat. csv is always flat; json is the
    canonical full-precision form.
    """
    if fmt not in FORMATS:
        raise UsageError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    tdict = _table_dict(table)
    rows = list(tdict["groups"])
    if fmt == "json":
        return canonical_bytes(tdict)
    if not rows:
        raise EmptyTable("table has no rows")
    axes = _ordered_axes(tdict, rows)

    def sort_key(row: Mapping[str, Any]):
        return tuple(_axis_sort_key(a, row["axes"][a]) for a in axes)

    rows.sort(key=sort_key)
    if fmt == "csv":
        return _render_csv(axes, rows)
    if len(axes) == 2:
        plan = tdict.get("plan") or {}
        pivot_rows = row_axis or plan.get("render_rows") or axes[0]
        if pivot_rows not in axes:
            raise MissingAxis(pivot_rows)
        return _render_md_grid(axes, rows, pivot_rows)
    return _render_md_flat(axes, rows)


def _render_csv(axes: Sequence[str], rows: Sequence[Mapping[str, Any]]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*axes, "recall_pct", "delta_pct", "topic_count"])
    for row in rows:
        writer.writerow([
            *(row["axes"][a] for a in axes),
            _pct(row["recall"]), _delta(row["delta"]), row["topic_count"],
        ])
    return buf.getvalue().encode("utf-8")


def _render_md_flat(axes: Sequence[str], rows: Sequence[Mapping[str, Any]]) -> bytes:
    header = [*axes, "recall", "delta", "topics"]
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join(["---"] * len(header)) + "|"]
    for row in rows:
        cells = [*(row["axes"][a] for a in axes),
                 _pct(row["recall"]), _delta(row["delta"]), str(row["topic_count"])]
        lines.append("| " + " | ".join(cells) + " |")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _render_md_grid(axes: Sequence[str], rows: Sequence[Mapping[str, Any]],
                    row_axis: str) -> bytes:
    col_axis = next(a for a in axes if a != row_axis)
    row_vals = sorted({r["axes"][row_axis] for r in rows},
                      key=lambda v: _axis_sort_key(row_axis, v))
    col_vals = sorted({r["axes"][col_axis] for r in rows},
                      key=lambda v: _axis_sort_key(col_axis, v))
    cells = {(r["axes"][row_axis], r["axes"][col_axis]): r for r in rows}
    lines = ["| " + " | ".join([row_axis, *col_vals]) + " |",
             "|" + "|".join(["---"] * (len(col_vals) + 1)) + "|"]
    for rv in row_vals:
        out = [rv]
        for cv in col_vals:
            cell = cells.get((rv, cv))
            out.append("" if cell is None
                       else f"{_pct(cell['recall'])} ({_delta(cell['delta'])})")
        lines.append("| " + " | ".join(out) + " |")
    return ("\n".join(lines) + "\n").encode("utf-8")


@dataclass(frozen=True)
class HeatmapMatrix:
    """country x language recall matrix with per-row markers.

    markers[row] = {"native": col or None, "best": col, "both": bool};
    best is the row argmax, ties resolved to the lexicographically first
    column; both flags rows whose native language is also the best one.
    """

    rows: tuple[str, ...]
    cols: tuple[str, ...]
    values: tuple[tuple[float | None, ...], ...]
    markers: Mapping[str, Mapping[str, Any]]

    def to_dict(self) -> dict[str, Any]:
        return {
            "rows": list(self.rows),
            "cols": list(self.cols),
            "values": [list(row) for row in self.values],
            "markers": {k: dict(v) for k, v in self.markers.items()},
        }

    def to_bytes(self) -> bytes:
        return canonical_bytes(self.to_dict())


def build_heatmap(table: Any) -> HeatmapMatrix:
    """Shape a country x language table into a heatmap.

    Requires 'country' and 'language' axes on every row (MissingAxis
    otherwise). Native languages come from the plan's
    meta.native_language_by_country map when present. Rows with no defined
    value are dropped; missing (country, language) combinations stay None.
    """
    tdict = _table_dict(table)
    rows = list(tdict["groups"])
    if not rows:
        raise EmptyTable("table has no rows")
    for axis in ("country", "language"):
        if any(axis not in r["axes"] for r in rows):
            raise MissingAxis(axis)
    countries = tuple(sorted({r["axes"]["country"] for r in rows}))
    languages = tuple(sorted({r["axes"]["language"] for r in rows}))
    lookup = {(r["axes"]["country"], r["axes"]["language"]): float(r["recall"]) for r in rows}
    natives = (tdict.get("plan") or {}).get("meta", {}).get("native_language_by_country", {})

    values = []
    markers: dict[str, dict[str, Any]] = {}
    kept = []
    for country in countries:
        row = tuple(lookup.get((country, lang)) for lang in languages)
        defined = [(v, lang) for v, lang in zip(row, languages) if v is not None]
        if not defined:
            continue
        best_value = max(v for v, _ in defined)
        best = min(lang for v, lang in defined if v == best_value)
        native = natives.get(country)
        markers[country] = {
            "native": native,
            "best": best,
            "both": native is not None and native == best,
        }
        values.append(row)
        kept.append(country)
    if not kept:
        raise EmptyTable("no row has a defined value")
    return HeatmapMatrix(tuple(kept), languages, tuple(values), markers)
