"""Walkthrough: a planted dataset where every retrieval should be perfect.

Generates a synthetic corpus whose image embeddings sit inside tight cones
around per-topic axes with a guaranteed score margin, evaluates the canned
plans over it, and renders the results. Every stratum must report 100.0.

Run with: python3 demos/03_planted_retrieval.py
"""

import tempfile
from pathlib import Path

from promptstrata.engine import preset_plan
from promptstrata.fixtures import PlantedSpec, generate
from promptstrata.report import build_heatmap, render_table
from promptstrata.runner import evaluate, load_bundle

with tempfile.TemporaryDirectory() as tmp:
    spec = PlantedSpec(seed=11, n_topics=3, images_per_class=2, dim=6, margin=0.3)
    fixture = generate(spec, Path(tmp) / "planted")
    print(f"planted {fixture.summary['images']} images over "
          f"{fixture.summary['topics']} topics -> {fixture.directory}\n")

    bundle = load_bundle(fixture.directory)

    plan = preset_plan("rq2", bundle.dataset, bundle.edges)
    table = evaluate(bundle, plan)
    print("suffix class x image class grid (recall, with delta vs unsuffixed):")
    print(render_table(table, "md").decode("utf-8"))

    plan = preset_plan("rq1", bundle.dataset, bundle.edges)
    heatmap = build_heatmap(evaluate(bundle, plan))
    print("translated prompts, lower-income images, country x language:")
    print(f"  columns: {heatmap.cols}")
    for country, row in zip(heatmap.rows, heatmap.values):
        marker = heatmap.markers[country]
        flag = " (native is best)" if marker["both"] else ""
        cells = "  ".join("   -" if v is None else f"{v:.2f}" for v in row)
        print(f"  {country}: {cells}   best={marker['best']}{flag}")
