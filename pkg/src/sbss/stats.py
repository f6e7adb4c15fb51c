"""Paired Wilcoxon signed-rank test and win/tie/loss tallies."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

# Largest number of non-zero differences for which the null distribution is
# enumerated exactly; above it the normal approximation is used.
EXACT_MAX_N = 20


@dataclass(frozen=True)
class PairedSeries:
    a: tuple
    b: tuple
    dataset: str = ""
    model: str = ""
    kind: str = ""

    def __post_init__(self):
        a = tuple(float(x) for x in self.a)
        b = tuple(float(x) for x in self.b)
        if len(a) != len(b):
            raise ValueError(f"paired series differ in length: {len(a)} vs {len(b)}")
        if not a:
            raise ValueError("paired series must not be empty")
        if not all(math.isfinite(x) for x in a + b):
            raise ValueError("paired series must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class ComparisonVerdict:
    statistic: float
    p_value: float
    alpha: float
    outcome: str
    n_effective: int
    n_pairs: int
    method: str = "exact"
    dataset: str = ""
    model: str = ""
    kind: str = ""

    def to_json(self):
        return {
            "dataset": self.dataset,
            "model": self.model,
            "kind": self.kind,
            "n_pairs": self.n_pairs,
            "n_effective": self.n_effective,
            "W": self.statistic,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "outcome": self.outcome,
            "method": self.method,
        }

    @classmethod
    def from_json(cls, doc):
        return cls(
            statistic=float(doc["W"]),
            p_value=float(doc["p_value"]),
            alpha=float(doc["alpha"]),
            outcome=doc["outcome"],
            n_effective=int(doc["n_effective"]),
            n_pairs=int(doc["n_pairs"]),
            method=doc.get("method", "exact"),
            dataset=doc.get("dataset", ""),
            model=doc.get("model", ""),
            kind=doc.get("kind", ""),
        )

    def headline(self):
        return f"{self.outcome.upper()} (p={self.p_value:.6g})"


def _exact_p(doubled_ranks, w_doubled):
    """P(min(W+, W-) <= w) under the sign-flip null, by counting all 2**n assignments.

    Ranks are doubled so that average ranks are integers and counting is exact.
    """
    total = sum(doubled_ranks)
    counts = {0: 1}
    for r in doubled_ranks:
        nxt = dict(counts)
        for s, c in counts.items():
            nxt[s + r] = nxt.get(s + r, 0) + c
        counts = nxt
    hits = sum(c for s, c in counts.items() if min(s, total - s) <= w_doubled)
    return hits / 2 ** len(doubled_ranks)


def _normal_p(abs_d, ranks, w):
    n = len(ranks)
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, ties = np.unique(abs_d, return_counts=True)
    var -= float(np.sum(ties**3 - ties)) / 48.0
    if var <= 0:
        return 1.0
    z = max(0.0, abs(w - mean) - 0.5) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def wilcoxon_signed_rank(s, alpha=0.05):
    """Two-sided signed-rank test of ``s.a`` against ``s.b``.

    Zero differences are dropped and tied magnitudes get average ranks.
    The statistic is ``min(W+, W-)``. With at most :data:`EXACT_MAX_N`
    non-zero differences the p-value is exact; otherwise it uses the normal
    approximation with tie and continuity corrections.

    ``outcome`` is ``"win"`` when ``p < alpha`` and the differences sum
    positive, ``"loss"`` when they sum negative, ``"tie"`` otherwise.
    """
    if not isinstance(s, PairedSeries):
        s = PairedSeries(*s)
    diffs = np.asarray(s.a) - np.asarray(s.b)
    diffs = diffs[diffs != 0]
    n = diffs.size
    context = dict(dataset=s.dataset, model=s.model, kind=s.kind)
    if n == 0:
        return ComparisonVerdict(0.0, 1.0, alpha, "tie", 0, len(s.a), "exact", **context)

    abs_d = np.abs(diffs)
    ranks = rankdata(abs_d, method="average")
    w_plus = float(ranks[diffs > 0].sum())
    w_minus = float(ranks[diffs < 0].sum())
    w = min(w_plus, w_minus)

    if n <= EXACT_MAX_N:
        doubled = [int(round(2 * r)) for r in ranks]
        p = _exact_p(doubled, int(round(2 * w)))
        method = "exact"
    else:
        p = _normal_p(abs_d, ranks, w)
        method = "normal"
    p = min(1.0, max(0.0, p))

    total = float(np.sum(diffs))
    if p < alpha and total > 0:
        outcome = "win"
    elif p < alpha and total < 0:
        outcome = "loss"
    else:
        outcome = "tie"
    return ComparisonVerdict(w, p, alpha, outcome, n, len(s.a), method, **context)


OUTCOMES = ("loss", "tie", "win")


def _pct(count, total):
    return round(100.0 * count / total, 2) if total else 0.0


def score_comparisons(verdicts):
    """Tally outcomes per (model, kind), per kind, and overall.

    Groups without verdicts are omitted.
    """
    verdicts = list(verdicts)
    if not verdicts:
        raise ValueError("no verdicts to score")

    def tally(items):
        counts = {o: sum(1 for v in items if v.outcome == o) for o in OUTCOMES}
        total = len(items)
        return {
            **counts,
            "n": total,
            "percent": {o: _pct(counts[o], total) for o in OUTCOMES},
        }

    models = sorted({v.model for v in verdicts})
    kinds = sorted({v.kind for v in verdicts})
    cells = []
    for model in models:
        for kind in kinds:
            group = [v for v in verdicts if v.model == model and v.kind == kind]
            if group:
                cells.append({"model": model, "kind": kind, **tally(group)})
    by_kind = [{"kind": kind, **tally([v for v in verdicts if v.kind == kind])} for kind in kinds]
    return {"cells": cells, "by_kind": by_kind, "overall": tally(verdicts)}


def render_score_table(table):
    """Aligned text: one row per model, loss/tie/win columns per kind, then totals and percentages."""
    kinds = [row["kind"] for row in table["by_kind"]]
    models = sorted({c["model"] for c in table["cells"]})
    lookup = {(c["model"], c["kind"]): c for c in table["cells"]}
    header = ["model"] + [f"{kind or '-'}:{o}" for kind in kinds for o in OUTCOMES]
    rows = []
    for model in models:
        row = [model or "-"]
        for kind in kinds:
            cell = lookup.get((model, kind))
            row += [str(cell[o]) if cell else "" for o in OUTCOMES]
        rows.append(row)
    rows.append(["total"] + [str(r[o]) for r in table["by_kind"] for o in OUTCOMES])
    rows.append(["%"] + [f"{r['percent'][o]:g}" for r in table["by_kind"] for o in OUTCOMES])
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in [header] + rows]
    overall = table["overall"]
    lines.append(
        f"overall: {overall['loss']} loss, {overall['tie']} tie, {overall['win']} win "
        f"of {overall['n']}"
    )
    return "\n".join(lines)

