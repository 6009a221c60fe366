"""Competition scoring mechanisms and the official-style ranking.

Every mechanism reduces a multiset of runs to one real score per solver,
oriented higher-is-better (penalized-runtime scores are negated).  All
mechanisms are per-run additive: each (solver, run) pair has a fixed
contribution and a multiset is scored by summing (or averaging) the
contributions of its entries, so duplicated entries count twice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Dataset, Mechanism, MECHANISM_IDS, RunKey

__all__ = [
    "OfficialRanking",
    "RunMultiset",
    "ScoreVector",
    "ScoringError",
    "UnknownMechanismError",
    "compute_scores",
    "full_multiset",
    "official_ranking",
    "run_contributions",
    "tiebreak_vectors",
]


class ScoringError(Exception):
    """A mechanism could not be evaluated on the given data."""


class UnknownMechanismError(ScoringError):
    """The mechanism identifier is not one of the supported ids."""


# Aggregation of per-run contributions over a multiset.
_SUM = "sum"
_MEAN = "mean"
_NEG_MEAN = "neg_mean"

_MECHANISM_KINDS = {
    "solved_count": _SUM,
    "optimal_count": _SUM,
    "par_k": _NEG_MEAN,
    "ipc_quality": _SUM,
    "ipc_agile": _SUM,
    "mean_metric": _MEAN,
}


@dataclass(frozen=True, eq=False)
class RunMultiset:
    """A multiset of runs, stored as indices into ``Dataset.runs``.

    Entries repeat; the array is treated as read-only.
    """

    entries: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", np.asarray(self.entries, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.entries)

    def keys(self, d: Dataset) -> list[RunKey]:
        return [d.runs[i] for i in self.entries]

    def check(self, d: Dataset) -> None:
        n = len(d.runs)
        if len(self.entries) and (self.entries.min() < 0 or self.entries.max() >= n):
            raise ValueError("multiset entry out of range for dataset runs")


def full_multiset(d: Dataset) -> RunMultiset:
    """The original run set R, once each, in dataset order."""
    return RunMultiset(np.arange(len(d.runs), dtype=np.int64))


@dataclass(frozen=True)
class ScoreVector:
    """Per-solver scores for one multiset of runs; higher is better."""

    scores: dict[str, float]

    def as_array(self, solver_order: tuple[str, ...]) -> np.ndarray:
        return np.array([self.scores[s] for s in solver_order], dtype=np.float64)


@dataclass(frozen=True)
class OfficialRanking:
    """Solvers sorted by (score desc, tiebreak chain, solver_id asc).

    ``ranks`` are competition min-ranks ("1224"): solvers tied on score and
    the whole tiebreak chain share the smallest position of their tie block.
    The final solver_id key orders the listing only and never affects ranks.
    """

    order: tuple[str, ...]
    ranks: dict[str, int]

    def top(self, depth: int) -> tuple[str, ...]:
        return self.order[:depth]


def _as_mechanism(mechanism: Mechanism | str) -> Mechanism:
    if isinstance(mechanism, str):
        mechanism = Mechanism(mechanism)
    if mechanism.name not in MECHANISM_IDS:
        raise UnknownMechanismError(f"unknown scoring mechanism {mechanism.name!r}")
    if mechanism.name == "par_k" and mechanism.par_penalty < 1:
        raise ScoringError(f"par_k penalty must be >= 1, got {mechanism.par_penalty}")
    return mechanism


def run_contributions(d: Dataset, mechanism: Mechanism | str) -> np.ndarray:
    """Per-(solver, run) contribution matrix for ``mechanism``.

    Shape (|S|, |R|), float64.  Entries that cannot be evaluated (missing
    quality or reference data) are NaN; they only become an error when a
    scored multiset actually selects them.
    """
    mech = _as_mechanism(mechanism)
    success = d.success_matrix
    within = d.cpu_time_matrix <= d.cutoff

    if mech.name == "solved_count":
        return (success & within).astype(np.float64)

    if mech.name == "optimal_count":
        return d.optimal_matrix.astype(np.float64)

    if mech.name == "par_k":
        if not math.isfinite(d.cutoff):
            raise ScoringError(
                "par_k requires a finite cutoff; provide cutoff_seconds in the config"
            )
        return np.where(success & within, d.cpu_time_matrix, mech.par_penalty * d.cutoff)

    if mech.name == "ipc_quality":
        quality = d.quality_matrix
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = d.best_known_vector[None, :] / quality
        ratio = np.where(quality == 0, np.nan, ratio)
        return np.where(success, ratio, 0.0)

    if mech.name == "ipc_agile":
        times = np.maximum(d.cpu_time_matrix, 1.0)
        ref = np.maximum(d.reference_time_vector, 1.0)[None, :]
        with np.errstate(divide="ignore"):
            raw = 1.0 / (1.0 + np.log10(times / ref))
        value = np.clip(raw, 0.0, 1.0)
        return np.where(success & within, value, 0.0)

    # mean_metric: quality is required on every record, solved or not.
    return d.quality_matrix.copy()


def _explain_nan(d: Dataset, mech: Mechanism, solver_idx: int, run_idx: int) -> str:
    solver = d.solvers[solver_idx]
    rk = d.runs[run_idx]
    rec = d.results[(solver, rk)]
    where = f"solver {solver!r} on run {rk.label()}"
    if mech.name == "ipc_quality":
        if rec.quality is None:
            return f"ipc_quality: {where} is solved but has no quality value"
        if rec.quality == 0:
            return f"ipc_quality: {where} has quality 0 (ratio undefined)"
        return f"ipc_quality: no best_known_quality reference for run {rk.label()}"
    if mech.name == "ipc_agile":
        return f"ipc_agile: no reference_time reference for run {rk.label()}"
    return f"mean_metric: {where} has no quality value"


def aggregate_contributions(
    contributions: np.ndarray, entries: np.ndarray, mechanism: Mechanism
) -> np.ndarray:
    """Score every solver on one multiset given its contribution matrix."""
    if len(entries) == 0:
        return np.zeros(contributions.shape[0])
    selected = contributions[:, entries]
    kind = _MECHANISM_KINDS[mechanism.name]
    if kind == _SUM:
        return selected.sum(axis=1)
    if kind == _MEAN:
        return selected.mean(axis=1)
    return -selected.mean(axis=1)


def find_missing_entry(
    d: Dataset, mechanism: Mechanism, contributions: np.ndarray, entries: np.ndarray
) -> str | None:
    """Message for the first NaN contribution selected by ``entries``, if any."""
    selected = contributions[:, entries]
    if not np.isnan(selected).any():
        return None
    bad = np.argwhere(np.isnan(selected))
    # First failing entry in multiset order, then solver order.
    entry_pos, solver_idx = min((int(e), int(s)) for s, e in bad)
    return _explain_nan(d, mechanism, solver_idx, int(entries[entry_pos]))


def compute_scores(
    d: Dataset, mechanism: Mechanism | str, rs: RunMultiset | None = None
) -> ScoreVector:
    """Score every solver over the multiset ``rs`` (default: all of R).

    Raises :class:`ScoringError` when the mechanism needs data the dataset
    does not carry for a selected run (quality, reference entry, or a finite
    cutoff for par_k), naming the first offending entry.
    """
    mech = _as_mechanism(mechanism)
    if rs is None:
        rs = full_multiset(d)
    rs.check(d)
    contributions = run_contributions(d, mech)
    message = find_missing_entry(d, mech, contributions, rs.entries)
    if message is not None:
        raise ScoringError(message)
    values = aggregate_contributions(contributions, rs.entries, mech)
    return ScoreVector({s: float(v) for s, v in zip(d.solvers, values)})


# ---------------------------------------------------------------------------
# Official ranking


def tiebreak_run_matrices(d: Dataset, tiebreak: tuple[str, ...]) -> list[np.ndarray]:
    """Per-(solver, run) contribution matrices of the tiebreak chain.

    A multiset's key value is the sum of its entries' contributions;
    ``total_time`` contributes the cpu_time of successful within-cutoff
    runs and 0 otherwise.
    """
    matrices = []
    for key in tiebreak:
        if key == "total_time":
            within = d.cpu_time_matrix <= d.cutoff
            matrices.append(np.where(d.success_matrix & within, d.cpu_time_matrix, 0.0))
        else:
            raise ValueError(f"unknown tiebreak key {key!r}")
    return matrices


def tiebreak_vectors(
    d: Dataset, tiebreak: tuple[str, ...], restrict_to: np.ndarray | None = None
) -> list[np.ndarray]:
    """Per-solver key arrays for the configured chain, ascending-is-better.

    ``restrict_to`` limits the totals to the given run entries (each
    occurrence counted once per appearance).
    """
    vectors = []
    for spent in tiebreak_run_matrices(d, tiebreak):
        if restrict_to is not None:
            spent = spent[:, restrict_to]
        vectors.append(spent.sum(axis=1))
    return vectors


def official_ranking(
    sv: ScoreVector,
    d: Dataset,
    tiebreak: tuple[str, ...] = (),
    restrict_to: np.ndarray | None = None,
) -> OfficialRanking:
    """Rank solvers by score with min-rank ties.

    The listing is sorted by score descending, then by the tiebreak chain
    (currently ``total_time``: total cpu_time over successful runs,
    ascending), then solver_id ascending.  Ranks ignore the solver_id step:
    solvers equal on score and the whole chain share a rank.
    ``restrict_to`` narrows the tiebreak totals to the given run entries.
    """
    chain = tiebreak_vectors(d, tiebreak, restrict_to)
    keyed = []
    for idx, solver in enumerate(d.solvers):
        key = (-sv.scores[solver], *(float(vec[idx]) for vec in chain))
        keyed.append((key, solver))
    keyed.sort(key=lambda item: (item[0], item[1]))

    ranks: dict[str, int] = {}
    previous_key = None
    block_rank = 1
    for position, (key, solver) in enumerate(keyed, start=1):
        if key != previous_key:
            block_rank = position
            previous_key = key
        ranks[solver] = block_rank
    return OfficialRanking(order=tuple(solver for _, solver in keyed), ranks=ranks)
