"""Paired significance testing between recall vectors.

Wilcoxon signed-rank, two-sided, alpha 0.05. Zero differences are dropped
before ranking (documented policy); ties in |difference| receive average
ranks. The statistic W is the smaller of the positive and negative rank sums.
For n_effective <= 25 the p-value is exact, from full enumeration of the 2^n
sign assignments (implemented as a subset-sum count over doubled ranks so ties
stay exact); above that a normal approximation with tie correction and a 0.5
continuity correction is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .errors import AllZeroDifferences, GroupMismatch, LengthMismatch
from .jsonio import canonical_dumps

__all__ = [
    "EXACT_LIMIT",
    "ALPHA",
    "WilcoxonResult",
    "wilcoxon_signed_rank",
    "exact_signed_rank_p",
    "normal_approx_p",
    "delta_summary",
]

EXACT_LIMIT = 25
ALPHA = 0.05


@dataclass(frozen=True)
class WilcoxonResult:
    n_effective: int
    w_statistic: float
    p_value: float
    significant: bool
    method: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n_effective,
            "w": self.w_statistic,
            "p": self.p_value,
            "significant": self.significant,
            "method": self.method,
        }


def _doubled_ranks(abs_diffs: Sequence[float]) -> list[int]:
    """Average ranks of |d|, doubled so ties stay integral.

    A tie group spanning 1-based positions a..b gets rank (a+b)/2, so the
    doubled rank is the exact integer a+b.
    """
    order = sorted(range(len(abs_diffs)), key=lambda i: abs_diffs[i])
    doubled = [0] * len(abs_diffs)
    start = 0
    while start < len(order):
        stop = start
        while stop + 1 < len(order) and abs_diffs[order[stop + 1]] == abs_diffs[order[start]]:
            stop += 1
        for k in range(start, stop + 1):
            doubled[order[k]] = (start + 1) + (stop + 1)
        start = stop + 1
    return doubled


def exact_signed_rank_p(doubled_ranks: Sequence[int], w2: int) -> float:
    """Two-sided exact p for a doubled rank-sum of w2 under random signs.

    Counts, over all 2^n sign assignments, how many positive-rank-sums land at
    or below w2 or at or beyond total - w2 (the symmetric tail).
    """
    total = sum(doubled_ranks)
    if 2 * w2 >= total:
        return 1.0
    counts = [0] * (total + 1)
    counts[0] = 1
    for d in doubled_ranks:
        for s in range(total - d, -1, -1):
            if counts[s]:
                counts[s + d] += counts[s]
    tail = sum(counts[: w2 + 1]) + sum(counts[total - w2:])
    return tail / (1 << len(doubled_ranks))


def normal_approx_p(doubled_ranks: Sequence[int], w: float) -> float:
    """Two-sided normal approximation with tie and continuity corrections."""
    n = len(doubled_ranks)
    mean = n * (n + 1) / 4.0
    variance = n * (n + 1) * (2 * n + 1) / 24.0
    seen: dict[int, int] = {}
    for d in doubled_ranks:
        seen[d] = seen.get(d, 0) + 1
    for count in seen.values():
        if count > 1:
            variance -= (count ** 3 - count) / 48.0
    sd = math.sqrt(variance)
    z = (w - mean + 0.5) / sd
    # two-sided: 2 * Phi(z) for the lower tail
    p = math.erfc(-z / math.sqrt(2.0))
    return min(p, 1.0)


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> WilcoxonResult:
    """Paired two-sided test of a vs b.

    Raises LengthMismatch when the samples disagree in length and
    AllZeroDifferences when every pair is identical.
    """
    if len(a) != len(b):
        raise LengthMismatch(f"paired samples of length {len(a)} and {len(b)}")
    diffs = [float(x) - float(y) for x, y in zip(a, b)]
    diffs = [d for d in diffs if d != 0.0]
    n = len(diffs)
    if n == 0:
        raise AllZeroDifferences("every paired difference is zero")
    doubled = _doubled_ranks([abs(d) for d in diffs])
    pos2 = sum(r for d, r in zip(diffs, doubled) if d > 0)
    neg2 = sum(r for d, r in zip(diffs, doubled) if d < 0)
    w2 = min(pos2, neg2)
    w = w2 / 2.0
    if n <= EXACT_LIMIT:
        p = exact_signed_rank_p(doubled, w2)
        method = "exact_enumeration"
    else:
        p = normal_approx_p(doubled, w)
        method = "normal_approximation"
    return WilcoxonResult(n, w, p, p <= ALPHA, method)


def _row_key(axes: Mapping[str, str]) -> str:
    return canonical_dumps(dict(axes))


def delta_summary(
    baseline_rows: Sequence[Mapping[str, Any]],
    intervention_rows: Sequence[Mapping[str, Any]],
) -> list[dict[str, Any]]:
    """Per-group recall deltas between two tables with identical axes.

    Rows are {"axes": ..., "recall": ...} mappings (RecallTable group rows).
    Axes must match one-to-one; GroupMismatch otherwise. Output rows carry the
    delta and its sign ('+', '-', or '0').
    """
    base = {_row_key(r["axes"]): r for r in baseline_rows}
    other = {_row_key(r["axes"]): r for r in intervention_rows}
    if set(base) != set(other):
        missing = sorted(set(base) ^ set(other))
        raise GroupMismatch(f"tables disagree on {len(missing)} group(s)")
    out = []
    for key in sorted(base):
        delta = float(other[key]["recall"]) - float(base[key]["recall"])
        sign = "+" if delta > 0 else "-" if delta < 0 else "0"
        out.append({"axes": dict(base[key]["axes"]), "delta": delta, "sign": sign})
    return out
