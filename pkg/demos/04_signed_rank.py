"""Walkthrough: deciding whether a prompt change helped, not just by how much.

Pairs per-group recalls from two evaluations of the same dataset and runs the
exact two-sided signed-rank test over the differences.

Run with: python3 demos/04_signed_rank.py
"""

import dataclasses
import json
import tempfile
from pathlib import Path

from promptstrata.engine import preset_plan
from promptstrata.fixtures import generate_random_instance
from promptstrata.runner import evaluate, load_bundle
from promptstrata.stats import delta_summary, wilcoxon_signed_rank

# The textbook-sized example first: five pairs, four small gains and one
# larger one. All differences share a sign, so W = 0 and the exact two-sided
# p over the 32 sign assignments is 2/32 = 0.0625 - suggestive, but shy of
# the 0.05 line with so few pairs.
baseline = [1.0, 2.0, 3.0, 4.0, 5.0]
shifted = [2.0, 3.0, 4.0, 5.0, 7.0]
result = wilcoxon_signed_rank(baseline, shifted)
print(f"worked pair: W={result.w_statistic}, p={result.p_value}, "
      f"significant={result.significant}, method={result.method}\n")

# Now on actual evaluation output: compare macro vs micro aggregation of the
# same plan over a random corpus, pairing the rows by their group axes.
with tempfile.TemporaryDirectory() as tmp:
    fixture = generate_random_instance(5, Path(tmp) / "inst")
    bundle = load_bundle(fixture.directory)
    plan = preset_plan("rq2", bundle.dataset, bundle.edges)
    macro_rows = evaluate(bundle, plan).to_dict()["groups"]
    micro_plan = dataclasses.replace(plan, aggregation="micro")
    micro_rows = evaluate(bundle, micro_plan).to_dict()["groups"]

    deltas = delta_summary(macro_rows, micro_rows)
    moved = sum(1 for d in deltas if d["sign"] != "0")
    print(f"{len(deltas)} paired groups, {moved} moved under micro averaging")

    if moved:
        def by_axes(rows):
            return {json.dumps(r["axes"], sort_keys=True): r["recall"] for r in rows}
        macro_by, micro_by = by_axes(macro_rows), by_axes(micro_rows)
        keys = sorted(macro_by)
        test = wilcoxon_signed_rank([macro_by[k] for k in keys],
                                    [micro_by[k] for k in keys])
        print(f"signed-rank: n={test.n_effective}, W={test.w_statistic}, "
              f"p={test.p_value:.4f} ({test.method})")
    else:
        print("macro and micro agree exactly on this corpus; nothing to test")
