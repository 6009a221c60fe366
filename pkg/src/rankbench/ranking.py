"""Robust grouped ranking over a bootstrap score matrix, plus diagnostics.

The grouping loop: pick the replicate-level winner among the solvers still
in play, test every other remaining solver against it one-sidedly, correct
the family with Holm, fold the non-rejected solvers into the winner's
group, and continue on the rejected rest.  Groups receive fractional
mid-ranks so the rank sum is invariant under grouping.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .resampling import ScoreMatrix
from .scoring import OfficialRanking
from .stats import bootstrap_p, holm_bonferroni, nearest_rank_quantile

__all__ = [
    "IterationRecord",
    "RankGroup",
    "RobustRanking",
    "WinTable",
    "empirical_win_fractions",
    "fractional_ranks",
    "inversion_count",
    "mean_rank_iqr",
    "mean_score_iqr",
    "robust_ranking",
    "select_winner",
    "tied_pair_count",
]


@dataclass(frozen=True)
class WinTable:
    """Fraction of replicates each solver places first in, ties included.

    A replicate's firsts are the solvers no one strictly out-scores in that
    row, so the fractions can sum past 1.
    """

    fractions: dict[str, float]

    def __getitem__(self, solver: str) -> float:
        return self.fractions[solver]


@dataclass(frozen=True)
class RankGroup:
    """One block of statistically indistinguishable solvers.

    Members are ordered by median replicate score descending, then
    solver_id ascending; every member shares ``fractional_rank``.
    """

    index: int
    members: tuple[str, ...]
    fractional_rank: float


@dataclass(frozen=True)
class IterationRecord:
    """One grouping round: the winner, its pairwise p-values against every
    other remaining solver, the Holm-rejected solvers, and the resulting
    group membership."""

    winner: str
    p_values: dict[str, float]
    rejected: tuple[str, ...]
    members: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class RobustRanking:
    """Ordered groups partitioning the solver set, with the grouping log."""

    groups: tuple[RankGroup, ...]
    iteration_log: tuple[IterationRecord, ...]

    @cached_property
    def group_index(self) -> dict[str, int]:
        return {s: g.index for g in self.groups for s in g.members}

    @cached_property
    def fractional_rank(self) -> dict[str, float]:
        return {s: g.fractional_rank for g in self.groups for s in g.members}

    @cached_property
    def solvers(self) -> frozenset[str]:
        return frozenset(self.group_index)


def _first_place_mask(scores: np.ndarray) -> np.ndarray:
    """(k x S) bool: solver ties-or-takes the row maximum score."""
    return scores == scores.max(axis=1, keepdims=True)


def empirical_win_fractions(m: ScoreMatrix) -> WinTable:
    """Share of replicates in which each solver attains the top raw score."""
    counts = _first_place_mask(m.scores).sum(axis=0)
    return WinTable(
        {s: float(c) / m.k for s, c in zip(m.solver_order, counts)}
    )


def _median_scores(scores: np.ndarray) -> np.ndarray:
    """Nearest-rank medians of each score column."""
    ordered = np.sort(scores, axis=0)
    return np.array(
        [nearest_rank_quantile(ordered[:, j], 0.5) for j in range(scores.shape[1])]
    )


def _winner_position(scores: np.ndarray, solver_ids: tuple[str, ...]) -> int:
    """Column index of the winner among the given columns.

    Most first places; ties by highest nearest-rank median score, then
    solver_id ascending.
    """
    counts = _first_place_mask(scores).sum(axis=0)
    medians = _median_scores(scores)
    best = min(
        range(len(solver_ids)),
        key=lambda j: (-counts[j], -medians[j], solver_ids[j]),
    )
    return best


def select_winner(m: ScoreMatrix) -> str:
    """The solver placing first in the most replicates (ties: median, id)."""
    if not m.solver_order:
        raise ValueError("score matrix has no solvers")
    return m.solver_order[_winner_position(m.scores, m.solver_order)]


def fractional_ranks(group_sizes: list[int]) -> list[float]:
    """Mid-rank of each group: positions a..b collapse to (a + b) / 2."""
    ranks = []
    start = 1
    for size in group_sizes:
        if size < 1:
            raise ValueError(f"group sizes must be positive, got {size}")
        end = start + size - 1
        ranks.append((start + end) / 2)
        start = end + 1
    return ranks


def robust_ranking(m: ScoreMatrix, alpha: float) -> RobustRanking:
    """Group solvers that cannot be statistically separated from the round
    winner, Holm-corrected at level ``alpha``, iterating on the rest."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    medians = _median_scores(m.scores)
    median_of = dict(zip(m.solver_order, medians))

    remaining = list(m.solver_order)
    raw_groups: list[tuple[str, ...]] = []
    log: list[IterationRecord] = []
    while remaining:
        columns = np.array([m.solver_idx(s) for s in remaining])
        winner = remaining[
            _winner_position(m.scores[:, columns], tuple(remaining))
        ]
        others = [s for s in remaining if s != winner]
        p_values = {s: bootstrap_p(m, winner, s, alpha).p_value for s in others}
        rejected_idx = holm_bonferroni([p_values[s] for s in others], alpha) if others else set()
        rejected = tuple(s for j, s in enumerate(others) if j in rejected_idx)
        members = [winner] + [s for j, s in enumerate(others) if j not in rejected_idx]
        members.sort(key=lambda s: (-median_of[s], s))
        raw_groups.append(tuple(members))
        log.append(
            IterationRecord(
                winner=winner,
                p_values=p_values,
                rejected=rejected,
                members=tuple(members),
            )
        )
        remaining = [s for s in remaining if s in rejected]

    ranks = fractional_ranks([len(g) for g in raw_groups])
    groups = tuple(
        RankGroup(index=i, members=g, fractional_rank=r)
        for i, (g, r) in enumerate(zip(raw_groups, ranks), start=1)
    )
    return RobustRanking(groups=groups, iteration_log=tuple(log))


def _resolve_subset(universe: tuple[str, ...], subset) -> set[str]:
    if subset is None:
        return set(universe)
    subset = set(subset)
    unknown = subset - set(universe)
    if unknown:
        raise ValueError(f"unknown solver ids in subset: {sorted(unknown)}")
    return subset


def tied_pair_count(robust: RobustRanking, subset=None) -> int:
    """Number of within-group solver pairs, optionally restricted."""
    chosen = _resolve_subset(tuple(robust.solvers), subset)
    total = 0
    for group in robust.groups:
        n = sum(1 for s in group.members if s in chosen)
        total += n * (n - 1) // 2
    return total


def inversion_count(
    official: OfficialRanking, robust: RobustRanking, subset=None
) -> tuple[int, list[tuple[str, str]]]:
    """Pairs the two rankings order oppositely.

    A pair (worse, better) is inverted when the official ranks put ``worse``
    strictly below ``better`` but the robust grouping puts ``worse`` in a
    strictly earlier group.  Pairs are listed in official-listing order of
    the better-ranked solver, then of the worse-ranked one.
    """
    if set(official.order) != robust.solvers:
        raise ValueError("official and robust rankings cover different solvers")
    chosen = _resolve_subset(official.order, subset)
    listing = [s for s in official.order if s in chosen]
    pairs = []
    for i, better in enumerate(listing):
        for worse in listing[i + 1 :]:
            if official.ranks[worse] <= official.ranks[better]:
                continue
            if robust.group_index[worse] < robust.group_index[better]:
                pairs.append((worse, better))
    return len(pairs), pairs


def _column_iqr(column: np.ndarray) -> float:
    ordered = np.sort(column)
    return float(
        nearest_rank_quantile(ordered, 0.75) - nearest_rank_quantile(ordered, 0.25)
    )


def mean_rank_iqr(m: ScoreMatrix, subset=None) -> float:
    """Mean interquartile range of per-replicate min-ranks over the subset."""
    chosen = _resolve_subset(m.solver_order, subset)
    if not chosen:
        raise ValueError("subset must be non-empty")
    spans = [
        _column_iqr(m.rank_column(s)) for s in m.solver_order if s in chosen
    ]
    return float(np.mean(spans))


def mean_score_iqr(m: ScoreMatrix, subset=None) -> float:
    """Score-unit variant of :func:`mean_rank_iqr`, kept as a diagnostic."""
    chosen = _resolve_subset(m.solver_order, subset)
    if not chosen:
        raise ValueError("subset must be non-empty")
    spans = [_column_iqr(m.column(s)) for s in m.solver_order if s in chosen]
    return float(np.mean(spans))
