"""Shared dataset builders and independent brute-force oracles.

The oracles here transcribe the intended definitions directly in pure
Python (no vectorization, no shared code paths with the package) so the
optimized implementations can be checked against them.
"""

from __future__ import annotations

import math
from fractions import Fraction

from rankbench.model import (
    AnalysisConfig,
    Dataset,
    Mechanism,
    RunKey,
    RunRecord,
    RunStatus,
)

# ---------------------------------------------------------------------------
# Dataset builders


def record(solved: bool, cpu_time: float = 10.0, quality: float | None = None,
           optimal: bool = False) -> RunRecord:
    if optimal:
        status = RunStatus.SOLVED_OPTIMAL
    elif solved:
        status = RunStatus.SOLVED
    else:
        status = RunStatus.TIMEOUT
    return RunRecord(status=status, cpu_time=cpu_time, quality=quality)


def build_dataset(solvers, runs, record_for, strata=None, cutoff=math.inf,
                  reference=None) -> Dataset:
    """``record_for(solver, run_key) -> RunRecord`` fills the results table."""
    runs = tuple(RunKey(*rk) if not isinstance(rk, RunKey) else rk for rk in runs)
    results = {(s, rk): record_for(s, rk) for s in solvers for rk in runs}
    return Dataset(
        solvers=tuple(solvers),
        runs=runs,
        results=results,
        strata=strata or {},
        cutoff=cutoff,
        reference=reference or {},
    )


def success_table_dataset(table: dict[str, list[bool]], cutoff: float = 1000.0,
                          times: dict[str, list[float]] | None = None,
                          instances: list[str] | None = None,
                          strata: dict[str, str] | None = None) -> Dataset:
    """One seed-0 run per instance; ``table[solver][i]`` says run i succeeds."""
    solvers = list(table)
    n = len(next(iter(table.values())))
    names = instances or [f"i{j}" for j in range(n)]
    runs = [RunKey(name, 0) for name in names]

    def rec(solver, rk):
        j = names.index(rk.instance_id)
        t = times[solver][j] if times else 10.0
        return record(table[solver][j], cpu_time=t)

    return build_dataset(solvers, runs, rec, strata=strata, cutoff=cutoff)


def quality_table_dataset(table: dict[str, list[float]], cutoff: float = 1000.0) -> Dataset:
    """mean_metric-shaped data: every run solved, with the given qualities."""
    solvers = list(table)
    n = len(next(iter(table.values())))
    runs = [RunKey(f"i{j}", 0) for j in range(n)]

    def rec(solver, rk):
        j = int(rk.instance_id[1:])
        return record(True, cpu_time=10.0, quality=table[solver][j])

    return build_dataset(solvers, runs, rec, cutoff=cutoff)


def config(mechanism="solved_count", **kwargs) -> AnalysisConfig:
    if isinstance(mechanism, str):
        mechanism = Mechanism(mechanism)
    return AnalysisConfig(mechanism=mechanism, **kwargs)


def matrix_from_columns(**columns):
    """Hand-built ScoreMatrix with rank-1 placeholders for rank columns."""
    import numpy as np

    from rankbench.resampling import ScoreMatrix, min_ranks_rows

    names = tuple(columns)
    scores = np.column_stack(
        [np.asarray(columns[name], dtype=np.float64) for name in names]
    )
    return ScoreMatrix(
        k=scores.shape[0],
        scores=scores,
        replicate_ranks=min_ranks_rows(scores, []),
        solver_order=names,
        provenance={},
    )


# ---------------------------------------------------------------------------
# Brute-force oracles


def oracle_nearest_rank_index(q: str, k: int) -> int:
    """Exact-rational nearest-rank index for a decimal quantile string."""
    index = math.ceil(Fraction(q) * k)
    return min(max(index, 1), k)


def oracle_holm(p_values: list[float], alpha: float) -> set[int]:
    """Literal step-down: sort ascending (stable), reject the prefix before
    the first index i (1-based) with p'_i >= alpha / (m + 1 - i)."""
    m = len(p_values)
    order = sorted(range(m), key=lambda j: p_values[j])
    rejected: set[int] = set()
    for step, j in enumerate(order, start=1):
        if p_values[j] >= alpha / (m + 1 - step):
            break
        rejected.add(j)
    return rejected


def oracle_median(column: list[float]) -> float:
    """Nearest-rank 0.5 quantile."""
    ordered = sorted(column)
    return ordered[oracle_nearest_rank_index("0.5", len(ordered)) - 1]


def oracle_first_place_counts(rows: list[list[float]], cols: list[int]) -> dict[int, int]:
    counts = {j: 0 for j in cols}
    for row in rows:
        best = max(row[j] for j in cols)
        for j in cols:
            if row[j] == best:
                counts[j] += 1
    return counts


def oracle_robust_partition(rows: list[list[float]], solver_ids: list[str],
                            alpha: float) -> list[frozenset[str]]:
    """Direct transcription of the grouping loop over a k x S score table."""
    k = len(rows)
    remaining = list(range(len(solver_ids)))
    groups: list[frozenset[str]] = []
    while remaining:
        counts = oracle_first_place_counts(rows, remaining)
        winner = min(
            remaining,
            key=lambda j: (
                -counts[j],
                -oracle_median([row[j] for row in rows]),
                solver_ids[j],
            ),
        )
        others = [j for j in remaining if j != winner]
        p = {
            j: sum(1 for row in rows if row[winner] <= row[j]) / k
            for j in others
        }
        rejected_pos = oracle_holm([p[j] for j in others], alpha)
        rejected = {others[pos] for pos in rejected_pos}
        groups.append(
            frozenset(solver_ids[j] for j in remaining if j not in rejected)
        )
        remaining = [j for j in remaining if j in rejected]
    return groups


def oracle_min_ranks(keys: list[tuple]) -> list[int]:
    """Competition min-ranks of comparable sort keys (smaller is better)."""
    return [1 + sum(1 for other in keys if other < key) for key in keys]


def oracle_official_order(scores: dict[str, float],
                          chain: dict[str, tuple] | None = None) -> list[str]:
    chain = chain or {}
    return sorted(scores, key=lambda s: (-scores[s], *chain.get(s, ()), s))


def brute_contribution(d: Dataset, mech: Mechanism, solver: str, rk: RunKey) -> float:
    """Per-run score contribution computed straight from the record."""
    rec = d.results[(solver, rk)]
    ok = rec.status.is_success
    within = rec.cpu_time <= d.cutoff
    if mech.name == "solved_count":
        return 1.0 if ok and within else 0.0
    if mech.name == "optimal_count":
        return 1.0 if rec.status is RunStatus.SOLVED_OPTIMAL else 0.0
    if mech.name == "par_k":
        return rec.cpu_time if ok and within else mech.par_penalty * d.cutoff
    if mech.name == "ipc_quality":
        if not ok:
            return 0.0
        best = d.reference[rk].best_known_quality
        return best / rec.quality
    if mech.name == "ipc_agile":
        if not (ok and within):
            return 0.0
        ref = max(d.reference[rk].reference_time, 1.0)
        raw = 1.0 / (1.0 + math.log10(max(rec.cpu_time, 1.0) / ref))
        return min(max(raw, 0.0), 1.0)
    return rec.quality  # mean_metric


def brute_scores(d: Dataset, mech: Mechanism, entries: list[int] | None = None) -> dict[str, float]:
    """Pure-Python multiset scoring; ``entries`` indexes ``d.runs``."""
    if entries is None:
        entries = list(range(len(d.runs)))
    out = {}
    for s in d.solvers:
        values = [brute_contribution(d, mech, s, d.runs[i]) for i in entries]
        if mech.name == "par_k":
            out[s] = -sum(values) / len(values)
        elif mech.name == "mean_metric":
            out[s] = sum(values) / len(values)
        else:
            out[s] = sum(values)
    return out
