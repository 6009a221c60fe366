"""Bootstrap-based robustness analysis of solver competition rankings."""

from .model import (
    AnalysisConfig,
    CompletenessError,
    DataError,
    Dataset,
    DuplicateEntryError,
    Mechanism,
    ParseError,
    ReferenceEntry,
    RunKey,
    RunRecord,
    RunStatus,
    default_stratified,
    load_dataset,
    save_dataset,
    validate_dataset,
)
from .ranking import (
    RankGroup,
    RobustRanking,
    WinTable,
    empirical_win_fractions,
    fractional_ranks,
    inversion_count,
    mean_rank_iqr,
    robust_ranking,
    select_winner,
    tied_pair_count,
)
from .report import AnalysisReport, build_report, emit_csv, emit_json, emit_plot_data
from .resampling import (
    ReplicateStream,
    ScoreMatrix,
    draw_stratified_replicate,
    draw_uniform_replicate,
    generate_score_matrix,
)
from .scoring import (
    OfficialRanking,
    RunMultiset,
    ScoreVector,
    ScoringError,
    UnknownMechanismError,
    compute_scores,
    official_ranking,
)
from .sensitivity import (
    RankingChange,
    SensitivityReport,
    compare_rankings,
    leave_one_out_analysis,
)
from .stats import (
    ConfidenceInterval,
    TestOutcome,
    bootstrap_p,
    holm_bonferroni,
    percentile_ci,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig",
    "AnalysisReport",
    "CompletenessError",
    "ConfidenceInterval",
    "DataError",
    "Dataset",
    "DuplicateEntryError",
    "Mechanism",
    "OfficialRanking",
    "ParseError",
    "RankGroup",
    "RankingChange",
    "ReferenceEntry",
    "ReplicateStream",
    "RobustRanking",
    "RunKey",
    "RunMultiset",
    "RunRecord",
    "RunStatus",
    "ScoreMatrix",
    "ScoreVector",
    "ScoringError",
    "SensitivityReport",
    "TestOutcome",
    "UnknownMechanismError",
    "WinTable",
    "bootstrap_p",
    "build_report",
    "compare_rankings",
    "compute_scores",
    "default_stratified",
    "draw_stratified_replicate",
    "draw_uniform_replicate",
    "emit_csv",
    "emit_json",
    "emit_plot_data",
    "empirical_win_fractions",
    "fractional_ranks",
    "generate_score_matrix",
    "holm_bonferroni",
    "inversion_count",
    "leave_one_out_analysis",
    "load_dataset",
    "mean_rank_iqr",
    "official_ranking",
    "percentile_ci",
    "robust_ranking",
    "save_dataset",
    "select_winner",
    "tied_pair_count",
    "validate_dataset",
]
