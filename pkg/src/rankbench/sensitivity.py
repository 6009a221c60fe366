"""Leave-one-instance-out fragility analysis of the official ranking.

Each instance is removed with all of its seeds, the competition is
re-scored on the remainder, and the resulting ranking is compared to the
baseline: over the full listing and over the top-10 / top-3 prefixes,
distinguishing composition changes (the prefix set differs) from pure
order changes (same set, different sequence).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .model import AnalysisConfig, Dataset
from .scoring import (
    OfficialRanking,
    ScoreVector,
    ScoringError,
    _as_mechanism,
    aggregate_contributions,
    find_missing_entry,
    official_ranking,
    run_contributions,
)

__all__ = [
    "InstanceFlags",
    "RankingChange",
    "SensitivityReport",
    "aggregate_json_obj",
    "compare_rankings",
    "leave_one_out_analysis",
    "write_flags_csv",
]

FLAG_NAMES = ("any_change", "top10_comp", "top10_order", "top3_comp", "top3_order")


class RankingChange(Enum):
    UNCHANGED = "unchanged"
    COMP_CHANGED = "comp_changed"
    ORDER_CHANGED = "order_changed"


@dataclass(frozen=True)
class InstanceFlags:
    """Change flags for one removed instance."""

    any_change: bool
    top10_comp: bool
    top10_order: bool
    top3_comp: bool
    top3_order: bool

    def as_dict(self) -> dict[str, bool]:
        return {name: getattr(self, name) for name in FLAG_NAMES}


@dataclass(frozen=True, eq=False)
class SensitivityReport:
    """Per-instance flags, aggregate counts, and the baseline ranking.

    ``depths`` records the prefix lengths actually compared (10 and 3,
    clamped to the solver count).
    """

    baseline: OfficialRanking
    flags: dict[str, InstanceFlags]
    counts: dict[str, int]
    depths: dict[str, int]


def compare_rankings(
    base: OfficialRanking, variant: OfficialRanking, depth: int
) -> RankingChange:
    """Classify how the first ``depth`` listed solvers moved.

    The prefixes are taken from the tie-broken listings; a set difference
    is a composition change, a reordering of the same set an order change.
    """
    if set(base.order) != set(variant.order):
        raise ValueError("rankings cover different solver sets")
    if not 1 <= depth <= len(base.order):
        raise ValueError(f"depth {depth} out of range [1, {len(base.order)}]")
    base_top = base.top(depth)
    variant_top = variant.top(depth)
    if set(base_top) != set(variant_top):
        return RankingChange.COMP_CHANGED
    if base_top != variant_top:
        return RankingChange.ORDER_CHANGED
    return RankingChange.UNCHANGED


def _instance_run_indices(d: Dataset) -> dict[str, np.ndarray]:
    groups: dict[str, list[int]] = {instance: [] for instance in d.instances}
    for idx, rk in enumerate(d.runs):
        groups[rk.instance_id].append(idx)
    return {inst: np.array(idxs, dtype=np.int64) for inst, idxs in groups.items()}


def leave_one_out_analysis(
    d: Dataset, cfg: AnalysisConfig, threads: int = 1, any_change_on: str = "listing"
) -> SensitivityReport:
    """Remove each instance in turn and compare the re-scored ranking.

    ``any_change_on`` selects what the full-ranking comparison looks at:
    the tie-broken listing order (default) or just the rank numbers.
    """
    if any_change_on not in ("listing", "ranks"):
        raise ValueError(f"any_change_on must be 'listing' or 'ranks', got {any_change_on!r}")
    if len(d.instances) < 2:
        raise ValueError("leave-one-out analysis needs at least 2 instances")

    mech = _as_mechanism(cfg.mechanism)
    contributions = run_contributions(d, mech)
    by_instance = _instance_run_indices(d)
    all_indices = np.arange(len(d.runs), dtype=np.int64)

    baseline = _ranking_for(d, cfg, mech, contributions, all_indices)
    depth10 = min(10, len(d.solvers))
    depth3 = min(3, len(d.solvers))

    def flags_for(instance: str) -> InstanceFlags:
        kept = np.setdiff1d(all_indices, by_instance[instance], assume_unique=True)
        variant = _ranking_for(d, cfg, mech, contributions, kept)
        if any_change_on == "listing":
            changed = variant.order != baseline.order
        else:
            changed = variant.ranks != baseline.ranks
        at10 = compare_rankings(baseline, variant, depth10)
        at3 = compare_rankings(baseline, variant, depth3)
        return InstanceFlags(
            any_change=changed,
            top10_comp=at10 is RankingChange.COMP_CHANGED,
            top10_order=at10 is RankingChange.ORDER_CHANGED,
            top3_comp=at3 is RankingChange.COMP_CHANGED,
            top3_order=at3 is RankingChange.ORDER_CHANGED,
        )

    instances = list(d.instances)
    if threads > 1 and len(instances) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_instance = list(pool.map(flags_for, instances))
    else:
        per_instance = [flags_for(inst) for inst in instances]

    flags = dict(zip(instances, per_instance))
    counts = {
        name: sum(1 for f in flags.values() if getattr(f, name)) for name in FLAG_NAMES
    }
    return SensitivityReport(
        baseline=baseline,
        flags=flags,
        counts=counts,
        depths={"top10": depth10, "top3": depth3},
    )


def _ranking_for(
    d: Dataset,
    cfg: AnalysisConfig,
    mech,
    contributions: np.ndarray,
    entries: np.ndarray,
) -> OfficialRanking:
    """Official ranking of the dataset restricted to the given run entries."""
    message = find_missing_entry(d, mech, contributions, entries)
    if message is not None:
        raise ScoringError(message)
    values = aggregate_contributions(contributions, entries, mech)
    sv = ScoreVector({s: float(v) for s, v in zip(d.solvers, values)})
    return official_ranking(sv, d, cfg.tiebreak, restrict_to=entries)


def write_flags_csv(report: SensitivityReport, path: str | Path) -> None:
    """Per-instance flag table, one 0/1 row per removed instance."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write("instance," + ",".join(FLAG_NAMES) + "\n")
        for instance, f in report.flags.items():
            bits = ",".join(str(int(getattr(f, name))) for name in FLAG_NAMES)
            fh.write(f"{instance},{bits}\n")


def aggregate_json_obj(report: SensitivityReport) -> dict:
    """Aggregate block: counts per flag plus the compared prefix depths."""
    return {
        "instances": len(report.flags),
        "counts": dict(report.counts),
        "depths": dict(report.depths),
    }
