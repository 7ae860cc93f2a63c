"""fairaudit: staged bias audits for LLM-generated text.

Python bindings over the C++ core: registry access, dataset validation and
sampling, prompt building, evaluator-output parsing, and the statistics used
by scorecards and correlation reports.
"""

from ._core import (
    EvalParseError,
    IntegrityError,
    StatsError,
    ValidationError,
    box_stats,
    build_eval_prompt,
    build_generation_prompt,
    cot_block,
    dataset_stats,
    kendall_tau,
    parse_evaluation,
    pearson,
    registry_load,
    sample_dataset,
    slugify,
    spearman,
    stage_performance,
    validate_dataset,
    weighted_kappa,
)

__all__ = [
    "EvalParseError",
    "IntegrityError",
    "StatsError",
    "ValidationError",
    "box_stats",
    "build_eval_prompt",
    "build_generation_prompt",
    "cot_block",
    "dataset_stats",
    "kendall_tau",
    "parse_evaluation",
    "pearson",
    "registry_load",
    "sample_dataset",
    "slugify",
    "spearman",
    "stage_performance",
    "validate_dataset",
    "weighted_kappa",
]
