"""Toolkit for grading, diagnosing, and evolving LLM-generated OpenACC pragmas."""

from .assets import PROMPT_ASSETS, load_prompt
from .bench import (
    BenchmarkCase,
    CaseSummary,
    CompileResult,
    SpeedupRecord,
    aggregate_report,
    best_of_n,
    compile_case,
    outputs_match,
    run_timed,
)
from .dataset import (
    DatasetSplit,
    GoldProgram,
    TaskInstance,
    categorize_pragma,
    extract_tasks,
    insert_pragma,
    load_dataset,
    load_gold_program,
    scan_gold_program,
)
from .errors import (
    BackendError,
    EmptyPoolError,
    EmptyReflectionError,
    ExtractionError,
    GepaccError,
    ParseError,
    RunError,
    SchemaError,
    TagError,
    ValidationError,
)
from .feedback import FeedbackCategory, FeedbackItem, FeedbackReport, diff_feedback, render_feedback_text
from .gepa import (
    OptimizerConfig,
    ParetoState,
    PromptCandidate,
    accept_or_reject,
    pareto_update,
    rollout,
    run_optimization,
    select_final,
    select_parent,
)
from .llm import Completion, ModelConfig, ModelRole, generate_pragma, mock_script, reflect
from .pipeline import AnnotationJob, JobReport, annotate, stage_dm, stage_lp
from .pragma import (
    CanonicalPragma,
    ClauseToken,
    normalize,
    parse_reduction,
    render_canonical,
    split_clauses,
)
from .scoring import ScoreWeights, SimilarityReport, multiset_intersection_size, score

__version__ = "0.1.0"
