"""Brute-force reference evaluation over a dataset directory.

This module re-derives recall tables from the raw wire files using nothing but
the standard library: its own CSV and float32 readers, its own normalization,
a plain sorted() ranking, and a from-scratch restatement of the aggregation
rules. It shares no code with the vectorized evaluation, which is the point:
the two routes must agree bitwise on small instances or one of them is wrong.

Semantics restated here in full:

* The pool is every record whose topic is not subjective, ascending image_id.
* A prompt's score for an image is the dot product of unit vectors; raw image
  stores are normalized by dividing each row by the square root of an exactly
  rounded sum of squares.
* Retrieval ranks the pool by descending score, ties by ascending image_id,
  and keeps the first N_t positions where N_t is the topic's pool-wide ground
  truth size.
* Group cells collect filtered pool images by the plan's group axes; variant
  cells collect aggregation units (languages, suffix countries, or income
  categories) by the plan's variant axes. Topics with no ground truth inside
  the group are skipped; a group with no topics at all emits no rows.
* Per-topic recall is hits / denominator with the denominator equal to the
  group's ground-truth count; restrict_gt_to_group additionally truncates the
  retrieved list to that count. Income-suffix synonyms average per topic
  first, ascending synonym index. Macro aggregation averages topics in
  ascending topic order, then units in enumeration order; micro pools the raw
  integer counts and divides once. The baseline applies the same arithmetic
  to the default prompts, and delta is value minus baseline.
* Rows are sorted by the canonical serialization of their axes.

Instances above 500 images are refused: quadratic honesty beats clever speed
here, and anything bigger belongs to the vectorized path.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path
from typing import Any, Mapping

from ..errors import TooLarge

MAX_ORACLE_IMAGES = 500

_CANONICAL_CATEGORIES = ("poor", "rich", "neutral")
_LOWER = ("poor", "low-mid")


def _read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _read_vectors(path: Path) -> tuple[dict[str, int], list[list[float]], bool]:
    with open(str(path) + ".json", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    dim = sidecar["dim"]
    ids = sidecar["ids"]
    payload = path.read_bytes()
    flat = struct.unpack(f"<{sidecar['rows'] * dim}f", payload)
    matrix = [list(flat[r * dim:(r + 1) * dim]) for r in range(sidecar["rows"])]
    return {key: r for r, key in enumerate(ids)}, matrix, bool(sidecar["normalized"])


def _normalize(matrix: list[list[float]]) -> list[list[float]]:
    out = []
    for row in matrix:
        norm = math.sqrt(math.fsum(x * x for x in row))
        out.append([x / norm for x in row])
    return out


def _income_class(value: float, edges: Mapping[str, float]) -> str:
    if value <= edges["e1"]:
        return "poor"
    if value <= edges["e2"]:
        return "low-mid"
    if value <= edges["e3"]:
        return "up-mid"
    return "rich"


def _category_order(categories: Mapping[str, list[str]]) -> list[str]:
    known = [c for c in _CANONICAL_CATEGORIES if c in categories]
    extras = sorted(c for c in categories if c not in _CANONICAL_CATEGORIES)
    return known + extras


def _score(image_row: list[float], prompt_row: list[float]) -> float:
    total = 0.0
    for a, b in zip(image_row, prompt_row):
        total += a * b
    return total


def oracle_evaluate(dataset_dir: str | Path, plan: Mapping[str, Any]) -> dict[str, Any]:
    """Evaluate a plan dict against a dataset directory, the slow honest way."""
    root = Path(dataset_dir)
    records = _read_csv(root / "metadata.csv")
    if len(records) > MAX_ORACLE_IMAGES:
        raise TooLarge(f"{len(records)} images exceed the {MAX_ORACLE_IMAGES} oracle limit")
    records.sort(key=lambda r: r["image_id"])

    subjective = {
        row["topic_id"]
        for row in _read_csv(root / "topics.csv")
        if row["subjective"] == "1"
    }
    profiles = {
        row["country_code"]: row for row in _read_csv(root / "countries.csv")
    }
    with open(root / "edges.json", encoding="utf-8") as fh:
        edges = json.load(fh)
    with open(root / "synonyms.json", encoding="utf-8") as fh:
        synonyms = json.load(fh)

    image_index, image_matrix, images_normalized = _read_vectors(root / "images.f32")
    prompt_index, prompt_matrix, prompts_normalized = _read_vectors(root / "prompts.f32")
    if not images_normalized:
        image_matrix = _normalize(image_matrix)
    if not prompts_normalized:
        prompt_matrix = _normalize(prompt_matrix)

    pool = [r for r in records if r["topic_id"] not in subjective]
    ids = [r["image_id"] for r in pool]
    vectors = [image_matrix[image_index[i]] for i in ids]
    topics = sorted({r["topic_id"] for r in pool})
    gt = {t: {i for i, r in enumerate(pool) if r["topic_id"] == t} for t in topics}
    klass = [_income_class(float(r["monthly_income_usd"]), edges) for r in pool]

    def axis_value(axis: str, i: int) -> str:
        code = pool[i]["country_code"]
        if axis == "country":
            return code
        if axis == "image_income_class":
            return klass[i]
        if axis == "country_wb_class":
            return profiles[code]["wb_class"]
        if axis == "continent":
            return profiles[code]["continent"]
        return "lower" if klass[i] in _LOWER else "higher"

    flt = plan.get("image_filter") or {}

    def passes(i: int) -> bool:
        if "coarse_income" in flt and axis_value("coarse_income", i) != flt["coarse_income"]:
            return False
        if "income_classes" in flt and klass[i] not in flt["income_classes"]:
            return False
        if "countries" in flt and pool[i]["country_code"] not in flt["countries"]:
            return False
        if "continents" in flt:
            if profiles[pool[i]["country_code"]]["continent"] not in flt["continents"]:
                return False
        return True

    family = plan["family"]
    if family == "default":
        units = ["default"]
    elif family == "translated":
        units = sorted(plan.get("languages") or ())
    elif family == "country_suffix":
        units = sorted({r["country_code"] for r in pool})
    else:
        units = _category_order(synonyms)

    def prompt_key(topic: str, unit: str, syn: int | None = None) -> str:
        if family == "default":
            return f"default|{topic}"
        if family == "translated":
            return f"translated|{topic}|{unit}"
        if family == "country_suffix":
            return f"country|{topic}|{unit}"
        return f"income|{topic}|{unit}|{syn}"

    needed = {f"default|{t}" for t in topics}
    for t in topics:
        for unit in units:
            if family == "income_suffix":
                for i in range(len(synonyms[unit])):
                    needed.add(prompt_key(t, unit, i))
            else:
                needed.add(prompt_key(t, unit))

    key_topic = {}
    for key in needed:
        key_topic[key] = key.split("|")[1]
    prefixes: dict[str, list[int]] = {}
    for key in needed:
        row = prompt_matrix[prompt_index[key]]
        scores = [_score(v, row) for v in vectors]
        order = sorted(range(len(pool)), key=lambda i: (-scores[i], ids[i]))
        prefixes[key] = order[: len(gt[key_topic[key]])]
    prefix_sets = {key: set(p) for key, p in prefixes.items()}

    filtered = [i for i in range(len(pool)) if passes(i)]
    if not filtered:
        raise ValueError("image filter excludes every record")
    group_axes = list(plan.get("group_axes") or ())
    variant_axes = list(plan.get("variant_axes") or ())
    groups: dict[tuple[str, ...], set[int]] = {}
    for i in filtered:
        gkey = tuple(axis_value(a, i) for a in group_axes)
        groups.setdefault(gkey, set()).add(i)

    def unit_axis(axis: str, unit: str) -> str:
        if axis in ("language", "suffix_country", "income_category"):
            return unit
        if axis == "suffix_wb_class":
            return profiles[unit]["wb_class"]
        return profiles[unit]["continent"]

    vcells: dict[tuple[str, ...], list[str]] = {}
    for unit in units:
        vkey = tuple(unit_axis(a, unit) for a in variant_axes)
        vcells.setdefault(vkey, []).append(unit)

    meta = plan.get("meta") or {}
    natives = meta.get("native_language_by_country", {})
    pairing = plan.get("pairing")
    restrict = bool(plan.get("restrict_gt_to_group"))
    micro = plan.get("aggregation") == "micro"

    def unit_applies(unit: str, gvals: Mapping[str, str]) -> bool:
        if pairing == "native_language":
            if natives:
                return natives.get(gvals["country"]) == unit
            return (profiles[gvals["country"]]["major_language"] or None) == unit
        if pairing == "own_country":
            return gvals["country"] == unit
        return True

    def recall_counts(key: str, members_gt: set[int]) -> tuple[int, int]:
        denom = len(members_gt)
        if restrict:
            retrieved = set(prefixes[key][:denom])
        else:
            retrieved = prefix_sets[key]
        return len(retrieved & members_gt), denom

    rows = []
    for gkey in sorted(groups):
        members = groups[gkey]
        gvals = dict(zip(group_axes, gkey))
        members_gt = {t: gt[t] & members for t in topics if gt[t] & members}
        topics_defined = sorted(members_gt)
        if not topics_defined:
            continue
        for vkey in sorted(vcells):
            cell_units = [u for u in vcells[vkey] if unit_applies(u, gvals)]
            if not cell_units:
                continue
            axes = dict(gvals)
            axes.update(zip(variant_axes, vkey))

            def counts_for(unit: str, topic: str) -> list[tuple[int, int]]:
                mgt = members_gt[topic]
                if family == "income_suffix":
                    return [
                        recall_counts(prompt_key(topic, unit, i), mgt)
                        for i in range(len(synonyms[unit]))
                    ]
                return [recall_counts(prompt_key(topic, unit), mgt)]

            baseline_counts = [
                recall_counts(f"default|{t}", members_gt[t]) for t in topics_defined
            ]
            if micro:
                hits = 0
                denom = 0
                for unit in cell_units:
                    for t in topics_defined:
                        for h, d in counts_for(unit, t):
                            hits += h
                            denom += d
                value = hits / denom
                baseline = (
                    sum(h for h, _ in baseline_counts)
                    / sum(d for _, d in baseline_counts)
                )
            else:
                unit_macros = []
                for unit in cell_units:
                    per_topic = []
                    for t in topics_defined:
                        counts = counts_for(unit, t)
                        per_topic.append(sum(h / d for h, d in counts) / len(counts))
                    unit_macros.append(sum(per_topic) / len(per_topic))
                value = sum(unit_macros) / len(unit_macros)
                baseline = sum(h / d for h, d in baseline_counts) / len(baseline_counts)
            rows.append({
                "axes": axes,
                "recall": value,
                "delta": value - baseline,
                "topic_count": len(topics_defined),
            })

    rows.sort(key=lambda r: json.dumps(r["axes"], sort_keys=True, ensure_ascii=False))
    return {"plan": dict(plan), "groups": rows}
