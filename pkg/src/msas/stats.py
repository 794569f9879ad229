"""Sampling and nonparametric statistics used by the optimizer and the harness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

EXACT_MAX_TOTAL = 20


def latin_hypercube(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` points in ``[0, 1]^d`` with one point per stratum in every column."""
    if n < 1 or d < 1:
        raise ValueError(f"latin_hypercube needs n >= 1 and d >= 1, got n={n}, d={d}")
    offsets = rng.random((n, d))
    strata = np.empty((n, d), dtype=np.int64)
    for c in range(d):
        strata[:, c] = rng.permutation(n)
    return (strata + offsets) / n


def spearman(a, b) -> float:
    """Spearman rank correlation with average ranks for ties.

    Returns 0 when either rank vector is constant.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"spearman needs two 1-d vectors of equal length, got {a.shape} and {b.shape}")
    if a.size < 3:
        raise ValueError("spearman needs at least 3 observations")
    ra = rankdata(a)
    rb = rankdata(b)
    ra -= ra.mean()
    rb -= rb.mean()
    denom = math.sqrt(float(ra @ ra) * float(rb @ rb))
    if denom == 0.0:
        return 0.0
    rho = float(ra @ rb) / denom
    return min(1.0, max(-1.0, rho))


def _doubled_ranks(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, int]:
    ranks = rankdata(np.concatenate([a, b]))
    return np.rint(2 * ranks).astype(np.int64), a.size


def _rank_sum_counts(doubled: np.ndarray, n1: int) -> dict[int, int]:
    """Number of size-``n1`` subsets per (doubled) rank sum, by dynamic programming."""
    # table[m] maps doubled-sum -> number of subsets of size m seen so far
    table: list[dict[int, int]] = [dict() for _ in range(n1 + 1)]
    table[0][0] = 1
    for r in doubled.tolist():
        for m in range(min(n1, len(table) - 1), 0, -1):
            prev = table[m - 1]
            if not prev:
                continue
            cur = table[m]
            for s, c in prev.items():
                cur[s + r] = cur.get(s + r, 0) + c
    return table[n1]


def ranksum(a, b) -> float:
    """Two-sided Wilcoxon rank-sum (Mann-Whitney) p-value.

    Small samples (at most 20 observations in total) use the exact
    permutation distribution of the rank sum of ``a``, ties included via
    midranks. Larger samples use the normal approximation with tie and
    continuity corrections.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < 3 or b.size < 3:
        raise ValueError("ranksum needs at least 3 observations per sample")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("ranksum needs finite observations")
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        return 1.0
    n1, n2 = a.size, b.size
    n = n1 + n2
    if n <= EXACT_MAX_TOTAL:
        doubled, _ = _doubled_ranks(a, b)
        w = int(doubled[:n1].sum())
        counts = _rank_sum_counts(doubled, n1)
        total = sum(counts.values())
        c_le = sum(c for s, c in counts.items() if s <= w)
        c_ge = sum(c for s, c in counts.items() if s >= w)
        return min(1.0, 2 * min(c_le, c_ge) / total)

    ranks = rankdata(pooled)
    u = float(ranks[:n1].sum()) - n1 * (n1 + 1) / 2.0
    mu = n1 * n2 / 2.0
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0.0:
        return 1.0
    z = (abs(u - mu) - 0.5) / math.sqrt(var)
    if z <= 0.0:
        return 1.0
    return float(min(1.0, 2.0 * ndtr(-z)))


def holm(pvals) -> list[float]:
    """Holm step-down adjusted p-values, in the input order."""
    p = np.asarray(pvals, dtype=float)
    if p.size == 0:
        return []
    if np.any((p <= 0) | (p > 1)):
        raise ValueError("holm expects p-values in (0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    adjusted = np.empty(m)
    running = 0.0
    for rank, idx in enumerate(order):
        running = max(running, min(1.0, (m - rank) * p[idx]))
        adjusted[idx] = running
    return adjusted.tolist()


@dataclass
class ComparisonSummary:
    """Win/tie/loss verdicts of a candidate against a baseline (minimization)."""

    labels: list[str]
    pvalues: list[float]
    adjusted: list[float]
    verdicts: list[str]
    alpha: float
    candidate_means: list[float] = field(default_factory=list)
    baseline_means: list[float] = field(default_factory=list)

    @property
    def wins(self) -> int:
        return self.verdicts.count("win")

    @property
    def ties(self) -> int:
        return self.verdicts.count("tie")

    @property
    def losses(self) -> int:
        return self.verdicts.count("loss")

    def wtl(self) -> str:
        return f"{self.wins}/{self.ties}/{self.losses}"


def verdict(candidate, baseline, p_adjusted: float, alpha: float = 0.05) -> str:
    """Classify one comparison; lower objective values are better."""
    if p_adjusted >= alpha:
        return "tie"
    mc, mb = float(np.mean(candidate)), float(np.mean(baseline))
    if mc < mb:
        return "win"
    if mc > mb:
        return "loss"
    return "tie"


def compare_samples(
    labels: list[str],
    candidate: list,
    baseline: list,
    alpha: float = 0.05,
    correction: str | None = "holm",
) -> ComparisonSummary:
    """Rank-sum comparison per label, optionally Holm-corrected across labels.

    Holm is only applied when there are at least two comparisons.
    """
    if not (len(labels) == len(candidate) == len(baseline)):
        raise ValueError("labels, candidate and baseline must have equal length")
    pvals = [ranksum(c, b) for c, b in zip(candidate, baseline)]
    if correction == "holm" and len(pvals) >= 2:
        adjusted = holm(pvals)
    elif correction in (None, "none", "holm"):
        adjusted = list(pvals)
    else:
        raise ValueError(f"unknown correction {correction!r}")
    verdicts = [verdict(c, b, p, alpha) for c, b, p in zip(candidate, baseline, adjusted)]
    return ComparisonSummary(
        labels=list(labels),
        pvalues=pvals,
        adjusted=adjusted,
        verdicts=verdicts,
        alpha=alpha,
        candidate_means=[float(np.mean(c)) for c in candidate],
        baseline_means=[float(np.mean(b)) for b in baseline],
    )
