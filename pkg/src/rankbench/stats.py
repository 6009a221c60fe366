"""Percentile confidence intervals, the one-sided bootstrap test and the
Holm-Bonferroni step-down correction.

Quantiles everywhere are nearest-rank: the q-quantile of k sorted samples is
the element at 1-based index ceil(q * k), clamped to [1, k], with no
interpolation.  Bounds are therefore always observed sample values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .resampling import ScoreMatrix

__all__ = [
    "ConfidenceInterval",
    "TestOutcome",
    "bootstrap_p",
    "holm_bonferroni",
    "nearest_rank_index",
    "nearest_rank_quantile",
    "percentile_ci",
]

# Absolute slack when taking ceil(q * k): decimal quantiles like 0.025 are
# not exact binary floats, and 0.025 * 10000 must select index 250, not 251.
_CEIL_EPS = 1e-9


@dataclass(frozen=True)
class ConfidenceInterval:
    """Two-sided (1 - alpha) percentile interval [lower, upper]."""

    lower: float
    upper: float
    alpha: float


@dataclass(frozen=True)
class TestOutcome:
    """One-sided bootstrap test result; rejected iff p_value < alpha (strict)."""

    p_value: float
    rejected: bool


def nearest_rank_index(q: float, k: int) -> int:
    """1-based nearest-rank index for quantile ``q`` of ``k`` samples."""
    index = math.ceil(q * k - _CEIL_EPS)
    return min(max(index, 1), k)


def nearest_rank_quantile(sorted_samples: np.ndarray, q: float) -> float:
    """Quantile of an ascending-sorted sample array (nearest-rank rule)."""
    return float(sorted_samples[nearest_rank_index(q, len(sorted_samples)) - 1])


def percentile_ci(samples: Sequence[float] | np.ndarray, alpha: float) -> ConfidenceInterval:
    """Percentile-method CI: the alpha/2 and (1 - alpha/2) sample quantiles."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("percentile_ci requires a non-empty sample list")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    ordered = np.sort(samples)
    return ConfidenceInterval(
        lower=nearest_rank_quantile(ordered, alpha / 2.0),
        upper=nearest_rank_quantile(ordered, 1.0 - alpha / 2.0),
        alpha=alpha,
    )


def bootstrap_p(m: "ScoreMatrix", s1: str, s2: str, alpha: float = 0.05) -> TestOutcome:
    """Test H0: s1 performs equal to or worse than s2.

    The p-value is the fraction of bootstrap replicates in which the score
    of ``s1`` is less than or equal to that of ``s2``; H0 is rejected iff
    that fraction is strictly below ``alpha``.
    """
    if s1 == s2:
        raise ValueError("bootstrap_p requires two distinct solvers")
    c1 = m.column(s1)
    c2 = m.column(s2)
    p = float(np.count_nonzero(c1 <= c2)) / m.k
    return TestOutcome(p_value=p, rejected=p < alpha)


def holm_bonferroni(p_values: Sequence[float], alpha: float) -> set[int]:
    """Step-down Holm correction; returns indices of rejected hypotheses.

    Sort the m p-values ascending (stable) and walk i = 1..m comparing
    against alpha / (m + 1 - i).  The walk stops at the first index whose
    p-value fails (is >= ) its threshold; everything strictly before it is
    rejected.  If the first comparison fails nothing is rejected; if none
    fails everything is.
    """
    m = len(p_values)
    if m < 1:
        raise ValueError("holm_bonferroni requires at least one p-value")
    for p in p_values:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-values must lie in [0, 1], got {p}")
    order = sorted(range(m), key=lambda j: p_values[j])
    rejected: set[int] = set()
    for step, j in enumerate(order, start=1):
        if p_values[j] >= alpha / (m + 1 - step):
            break
        rejected.add(j)
    return rejected
