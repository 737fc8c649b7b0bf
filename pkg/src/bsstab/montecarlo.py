"""Confidence intervals and goodness-of-fit helpers for Monte Carlo checks."""
from __future__ import annotations

import math

from scipy import stats


def binomial_ci(hits: int, n: int, level: float = 0.99) -> tuple[float, float]:
    """Exact (Clopper-Pearson) interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    res = stats.binomtest(hits, n).proportion_ci(confidence_level=level, method="exact")
    return float(res.low), float(res.high)


def half_width(hits: int, n: int, level: float = 0.99) -> float:
    lo, hi = binomial_ci(hits, n, level)
    return (hi - lo) / 2


def sigma(prob: float, n: int) -> float:
    return math.sqrt(prob * (1 - prob) / n)


def chi_square_uniform(counts) -> float:
    """p-value of the chi-square test against the uniform distribution."""
    return float(stats.chisquare(list(counts)).pvalue)
