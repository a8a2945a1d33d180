"""Desk-scale knowledge-distillation engine for quality scoring.

A five-level prompt bank turns an embedding into a quality distribution
and an expected score; a teacher encoder is fine-tuned against
subjective scores; its knowledge (frozen text bank plus precomputed
image features) is distilled into a smaller student with a
cosine-annealed blend of soft alignment and hard score regression.
"""

from .data import Dataset, Sample, generate, normalize_mos, split
from .errors import (
    ConfigError,
    CorruptionError,
    DataError,
    DomainError,
    EngineError,
    FormatError,
    NumericError,
    ShapeError,
    UndefinedCorrelationError,
    UsageError,
)
from .losses import (
    BlendSchedule,
    LossValue,
    blended_loss,
    hard_score_loss,
    lambda_at,
    mse_loss,
    soft_cosine_loss,
)
from .metrics import CorrelationReport, average_ranks, correlation_report, plcc, srcc
from .nets import (
    EncoderParams,
    FiniteDiffReport,
    RegressionHead,
    backward,
    finite_diff_check,
    forward,
    forward_batch,
    init_params,
    parameter_count,
)
from .optim import AdamWState, LrSchedule, adamw_step, lr_at
from .pipeline import (
    AblationReport,
    ArchConfig,
    MedianReport,
    RunReport,
    TeacherKnowledge,
    TrainConfig,
    bank_fingerprint,
    distill_student,
    extract_knowledge,
    finetune_teacher,
    knowledge_fingerprint,
    knowledge_from_features,
    median_of_runs,
    run_ablation,
    stage_guidance,
)
from .scoring import (
    LEVELS,
    PromptBank,
    QualityDistribution,
    cosine_similarity,
    default_bank,
    expected_score,
    quality_distribution,
    score_batch,
    score_embedding,
    synthetic_bank,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
