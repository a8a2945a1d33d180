"""Three-stage training pipeline plus the ablation harness.

Stage one scores a dataset zero-shot through the prompt bank. Stage two
fine-tunes the teacher encoder against subjective scores. Stage three
extracts the teacher's knowledge once (text bank plus per-sample image
features) and distills it into a smaller student with a blended
soft/hard objective.

Everything here is deterministic given (config, seed, dataset): batch
order is keyed by (seed, epoch), sub-seeds come from a spawned seed
sequence, and reports carry enough to reproduce the run.
"""

from __future__ import annotations

import hashlib
import math
import statistics
import struct
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, split
from .errors import ConfigError, DataError, NumericError, ShapeError
from .losses import (
    BlendSchedule,
    blended_loss,
    hard_score_loss,
    lambda_at,
    mse_loss,
    soft_cosine_loss,
)
from .metrics import CorrelationReport, correlation_report
from .nets import (
    EncoderParams,
    RegressionHead,
    backward,
    forward_batch,
    head_backward,
    init_params,
    regression_batch,
)
from .optim import AdamWState, LrSchedule, adamw_step, lr_at
from .scoring import PromptBank, score_batch, synthetic_bank

SCHEDULE_KINDS = ("cosine", "fixed")


@dataclass(frozen=True)
class TrainConfig:
    """Shared knobs for every training stage."""

    epochs: int = 100
    batch_size: int = 64
    lr0_teacher: float = 5e-6
    lr0_student: float = 1e-4
    schedule: str = "cosine"
    lambda_fixed: float | None = None
    granularity: str = "epoch"
    seed: int = 0
    repeat_count: int = 5

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.granularity not in ("epoch", "step"):
            raise ConfigError(f"granularity must be 'epoch' or 'step', got {self.granularity!r}")
        if self.lr0_teacher < 0 or self.lr0_student < 0:
            raise ConfigError("learning rates must be nonnegative")
        if self.schedule not in SCHEDULE_KINDS:
            raise ConfigError(f"schedule must be one of {SCHEDULE_KINDS}, got {self.schedule!r}")
        if self.schedule == "fixed":
            if self.lambda_fixed is None:
                raise ConfigError("fixed schedule needs lambda_fixed")
            if not 0.0 <= self.lambda_fixed <= 1.0:
                raise ConfigError(f"lambda_fixed must lie in [0, 1], got {self.lambda_fixed}")
        elif self.lambda_fixed is not None:
            raise ConfigError("lambda_fixed is only meaningful with schedule='fixed'")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")
        if self.repeat_count < 1 or self.repeat_count % 2 == 0:
            raise ConfigError(f"repeat_count must be odd and >= 1, got {self.repeat_count}")


@dataclass(frozen=True)
class ArchConfig:
    """Network shapes and softmax temperature for the synthetic benchmark.

    Hidden sizes exclude the input and embedding layers; the teacher is
    deliberately wider than the student.
    """

    embed_dim: int = 32
    teacher_hidden: tuple[int, ...] = (128, 64)
    student_hidden: tuple[int, ...] = (32,)
    activation: str = "tanh"
    tau: float = 0.07

    def __post_init__(self):
        if self.embed_dim < 2:
            raise ConfigError(f"embed_dim must be >= 2, got {self.embed_dim}")
        if any(h < 1 for h in self.teacher_hidden) or any(h < 1 for h in self.student_hidden):
            raise ConfigError("hidden sizes must be positive")
        if self.tau <= 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")

    def teacher_sizes(self, obs_dim: int) -> list[int]:
        return [obs_dim, *self.teacher_hidden, self.embed_dim]

    def student_sizes(self, obs_dim: int) -> list[int]:
        return [obs_dim, *self.student_hidden, self.embed_dim]


@dataclass(frozen=True)
class TeacherKnowledge:
    """Frozen distillation source: the text bank plus one image feature
    per training sample, extracted once."""

    bank: PromptBank
    image_features: tuple[np.ndarray, ...]

    def __post_init__(self):
        feats = []
        for i, f in enumerate(self.image_features):
            f = np.asarray(f, dtype=np.float64)
            if f.ndim != 1 or f.shape[0] != self.bank.dim:
                raise ShapeError(f"image feature {i} has shape {f.shape}, expected ({self.bank.dim},)")
            if not np.all(np.isfinite(f)):
                raise DataError(f"image feature {i} has non-finite entries")
            f = f.copy()
            f.setflags(write=False)
            feats.append(f)
        object.__setattr__(self, "image_features", tuple(feats))

    def feature_matrix(self) -> np.ndarray:
        return np.stack(self.image_features)


def bank_fingerprint(bank: PromptBank) -> str:
    """SHA-256 over the float64 text features, the weights, and tau."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(bank.text_features, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(bank.weights, dtype="<f8").tobytes())
    h.update(struct.pack("<d", bank.temperature))
    return h.hexdigest()


def knowledge_fingerprint(knowledge: TeacherKnowledge) -> str:
    h = hashlib.sha256()
    h.update(bank_fingerprint(knowledge.bank).encode())
    h.update(np.ascontiguousarray(knowledge.feature_matrix(), dtype="<f8").tobytes())
    return h.hexdigest()


def params_fingerprint(params: EncoderParams) -> str:
    h = hashlib.sha256()
    h.update(params.activation.encode())
    for w, b in params.layers:
        h.update(np.ascontiguousarray(w, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return h.hexdigest()


@dataclass(frozen=True)
class EpochRow:
    """One training epoch: mean batch losses, blend weight, learning rate.

    A side that was never evaluated that epoch is recorded as nan.
    """

    epoch: int
    soft: float
    hard: float
    lam: float
    lr: float


@dataclass(frozen=True)
class RunReport:
    kind: str
    cfg: TrainConfig
    rows: tuple[EpochRow, ...]
    test: CorrelationReport | None = None
    hard_evals: int = 0
    soft_evals: int = 0
    knowledge_fingerprint: str | None = None

    def __post_init__(self):
        if len(self.rows) != self.cfg.epochs:
            raise ShapeError(f"report has {len(self.rows)} rows for {self.cfg.epochs} epochs")


def _epoch_total(epochs: int) -> int:
    # Schedules hit their endpoints at the last epoch index; a one-epoch
    # run has no decay to perform.
    return epochs - 1 if epochs > 1 else 1


def _batches(n: int, batch_size: int, seed: int, epoch: int):
    order = np.random.default_rng((seed, epoch)).permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def _encode(encoder, obs: np.ndarray, dim: int) -> np.ndarray:
    if isinstance(encoder, EncoderParams):
        emb, _ = forward_batch(encoder, obs)
    else:
        emb = np.asarray(encoder(obs), dtype=np.float64)
    if emb.ndim != 2 or emb.shape != (obs.shape[0], dim):
        raise ShapeError(f"encoder produced shape {emb.shape}, expected ({obs.shape[0]}, {dim})")
    return emb


def stage_guidance(bank: PromptBank, encoder, ds: Dataset) -> CorrelationReport:
    """Zero-shot pass: score every sample through the bank, correlate with
    the subjective scores. Nothing is trained."""
    emb = _encode(encoder, ds.obs_matrix(), bank.dim)
    scores = score_batch(list(emb), bank)
    return correlation_report(scores, ds.mos_array())


def finetune_teacher(
    cfg: TrainConfig,
    bank: PromptBank,
    teacher_params: EncoderParams,
    train: Dataset,
    test: Dataset | None = None,
) -> tuple[EncoderParams, RunReport]:
    """Minimize squared score error through the frozen bank; only the
    encoder parameters move."""
    params = teacher_params
    arrays = params.arrays()
    state = AdamWState.init(arrays, decay_mask=params.decay_mask())
    sched = LrSchedule(lr0=cfg.lr0_teacher, total_epochs=_epoch_total(cfg.epochs))
    obs = train.obs_matrix()
    mos = train.mos_array()
    rows = []
    for epoch in range(cfg.epochs):
        lr = lr_at(sched, min(epoch, sched.total_epochs))
        losses = []
        for bi, idx in enumerate(_batches(len(train), cfg.batch_size, cfg.seed, epoch)):
            try:
                emb, cache = forward_batch(params, obs[idx])
                hard = hard_score_loss(emb, bank, mos[idx])
                grads = backward(params, cache, hard.grad)
                arrays, state = adamw_step(arrays, grads.arrays(), state, lr)
            except NumericError as exc:
                raise NumericError(f"epoch {epoch} batch {bi}: {exc}") from exc
            params = params.replace_arrays(arrays)
            losses.append(hard.value)
        rows.append(EpochRow(epoch=epoch, soft=math.nan, hard=float(np.mean(losses)), lam=math.nan, lr=lr))
    report = RunReport(
        kind="teacher",
        cfg=cfg,
        rows=tuple(rows),
        test=None if test is None else stage_guidance(bank, params, test),
        hard_evals=_eval_count(len(train), cfg),
        knowledge_fingerprint=bank_fingerprint(bank),
    )
    return params, report


def _eval_count(n: int, cfg: TrainConfig) -> int:
    per_epoch = -(-n // cfg.batch_size)
    return per_epoch * cfg.epochs


def extract_knowledge(bank: PromptBank, teacher_params: EncoderParams, train: Dataset) -> TeacherKnowledge:
    """Run the teacher over the training set once and freeze the result."""
    emb, _ = forward_batch(teacher_params, train.obs_matrix())
    return TeacherKnowledge(bank=bank, image_features=tuple(emb))


def knowledge_from_features(bank: PromptBank, features, train: Dataset) -> TeacherKnowledge:
    """Build knowledge from precomputed image features (e.g. an imported
    embedding file) instead of a live encoder."""
    features = tuple(np.asarray(f, dtype=np.float64) for f in features)
    if len(features) != len(train):
        raise DataError(f"{len(features)} image features for {len(train)} training samples")
    return TeacherKnowledge(bank=bank, image_features=features)


def distill_student(
    cfg: TrainConfig,
    knowledge: TeacherKnowledge,
    student_params: EncoderParams,
    train: Dataset,
    test: Dataset | None = None,
) -> tuple[EncoderParams, RunReport]:
    """Blend embedding alignment against the teacher (soft) with score
    regression against the subjective labels (hard), annealing the blend
    weight across epochs. The knowledge never changes; a side whose weight
    is exactly 0 or 1 is not evaluated at all."""
    if len(knowledge.image_features) != len(train):
        raise DataError(
            f"knowledge holds {len(knowledge.image_features)} features for {len(train)} training samples"
        )
    fingerprint = knowledge_fingerprint(knowledge)
    bank = knowledge.bank
    teacher = knowledge.feature_matrix()
    params = student_params
    arrays = params.arrays()
    state = AdamWState.init(arrays, decay_mask=params.decay_mask())
    lr_sched = LrSchedule(lr0=cfg.lr0_student, total_epochs=_epoch_total(cfg.epochs))
    steps_per_epoch = -(-len(train) // cfg.batch_size)
    if cfg.schedule == "fixed":
        blend = BlendSchedule.fixed(cfg.lambda_fixed)
    elif cfg.granularity == "step":
        blend = BlendSchedule.cosine(_epoch_total(cfg.epochs * steps_per_epoch))
    else:
        blend = BlendSchedule.cosine(_epoch_total(cfg.epochs))
    obs = train.obs_matrix()
    mos = train.mos_array()

    def blend_at(epoch: int, step: int) -> float:
        if blend.kind == "fixed":
            return lambda_at(blend, 0)
        t = epoch * steps_per_epoch + step if cfg.granularity == "step" else epoch
        return lambda_at(blend, min(t, blend.total_steps))

    rows = []
    hard_evals = 0
    soft_evals = 0
    for epoch in range(cfg.epochs):
        lr = lr_at(lr_sched, min(epoch, lr_sched.total_epochs))
        # the report row carries the weight at the epoch's first step
        row_lam = blend_at(epoch, 0)
        soft_losses = []
        hard_losses = []
        for bi, idx in enumerate(_batches(len(train), cfg.batch_size, cfg.seed, epoch)):
            try:
                lam = blend_at(epoch, bi)
                emb, cache = forward_batch(params, obs[idx])
                soft = hard = None
                if lam > 0.0:
                    soft = soft_cosine_loss(emb, teacher[idx])
                    soft_evals += 1
                    soft_losses.append(soft.value)
                if lam < 1.0:
                    hard = hard_score_loss(emb, bank, mos[idx])
                    hard_evals += 1
                    hard_losses.append(hard.value)
                if soft is None:
                    total = hard
                elif hard is None:
                    total = soft
                else:
                    total = blended_loss(soft, hard, lam)
                grads = backward(params, cache, total.grad)
                arrays, state = adamw_step(arrays, grads.arrays(), state, lr)
            except NumericError as exc:
                raise NumericError(f"epoch {epoch} batch {bi}: {exc}") from exc
            params = params.replace_arrays(arrays)
        rows.append(
            EpochRow(
                epoch=epoch,
                soft=float(np.mean(soft_losses)) if soft_losses else math.nan,
                hard=float(np.mean(hard_losses)) if hard_losses else math.nan,
                lam=row_lam,
                lr=lr,
            )
        )
    if knowledge_fingerprint(knowledge) != fingerprint:
        raise DataError("teacher knowledge changed during distillation")
    report = RunReport(
        kind="distill",
        cfg=cfg,
        rows=tuple(rows),
        test=None if test is None else stage_guidance(bank, params, test),
        hard_evals=hard_evals,
        soft_evals=soft_evals,
        knowledge_fingerprint=fingerprint,
    )
    return params, report


def train_regression_baseline(
    cfg: TrainConfig,
    student_params: EncoderParams,
    head: RegressionHead,
    train: Dataset,
    test: Dataset | None = None,
) -> tuple[EncoderParams, RegressionHead, RunReport]:
    """Baseline without any teacher: encoder plus linear head trained
    jointly with squared error on the raw regression output."""
    params = student_params
    # the scalar head bias rides along as a 1-element array
    arrays = params.arrays() + [head.weight.copy(), np.array([head.bias])]
    mask = params.decay_mask() + [True, False]
    state = AdamWState.init(arrays, decay_mask=mask)
    sched = LrSchedule(lr0=cfg.lr0_student, total_epochs=_epoch_total(cfg.epochs))
    obs = train.obs_matrix()
    mos = train.mos_array()
    rows = []
    for epoch in range(cfg.epochs):
        lr = lr_at(sched, min(epoch, sched.total_epochs))
        losses = []
        for bi, idx in enumerate(_batches(len(train), cfg.batch_size, cfg.seed, epoch)):
            try:
                emb, cache = forward_batch(params, obs[idx])
                pred = regression_batch(head, emb)
                loss = mse_loss(pred, mos[idx])
                dw, db, demb = head_backward(head, emb, loss.grad)
                grads = backward(params, cache, demb)
                flat = grads.arrays() + [dw, np.array([db])]
                new_arrays, state = adamw_step(arrays, flat, state, lr)
            except NumericError as exc:
                raise NumericError(f"epoch {epoch} batch {bi}: {exc}") from exc
            arrays = new_arrays
            params = params.replace_arrays(arrays[:-2])
            head = RegressionHead(weight=arrays[-2], bias=float(arrays[-1][0]))
            losses.append(loss.value)
        rows.append(EpochRow(epoch=epoch, soft=math.nan, hard=float(np.mean(losses)), lam=math.nan, lr=lr))
    test_report = None
    if test is not None:
        emb, _ = forward_batch(params, test.obs_matrix())
        test_report = correlation_report(regression_batch(head, emb), test.mos_array())
    report = RunReport(kind="regression", cfg=cfg, rows=tuple(rows), test=test_report)
    return params, head, report


VARIANT_LABELS = ("regression_head", "hard_only", "soft_only", "annealed_blend")


@dataclass(frozen=True)
class AblationReport:
    """One row per strategy variant, all sharing the same split, seeds,
    epochs, and fine-tuned teacher."""

    cfg: TrainConfig
    arch: ArchConfig
    teacher: CorrelationReport
    regression_head: CorrelationReport
    hard_only: CorrelationReport
    soft_only: CorrelationReport
    annealed_blend: CorrelationReport
    guidance_baseline: CorrelationReport | None = None

    def variants(self) -> tuple[tuple[str, CorrelationReport], ...]:
        return (
            ("regression_head", self.regression_head),
            ("hard_only", self.hard_only),
            ("soft_only", self.soft_only),
            ("annealed_blend", self.annealed_blend),
        )


def _sub_seed(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class StageSeeds:
    """Independent sub-seeds for every randomized stage, derived from the
    one configured seed."""

    bank: int
    teacher: int
    student: int
    head: int


def stage_seeds(seed: int) -> StageSeeds:
    children = np.random.SeedSequence(seed).spawn(4)
    return StageSeeds(*(_sub_seed(c) for c in children))


def run_ablation(cfg: TrainConfig, ds: Dataset, arch: ArchConfig = ArchConfig()) -> AblationReport:
    """Train the four strategy variants on one dataset with shared seeds
    and return their test correlations alongside the teacher's."""
    train, test = split(ds, train_fraction=0.8, seed=cfg.seed)
    seeds = stage_seeds(cfg.seed)
    bank_seed, teacher_seed, student_seed, head_seed = (
        seeds.bank,
        seeds.teacher,
        seeds.student,
        seeds.head,
    )
    bank = synthetic_bank(arch.embed_dim, temperature=arch.tau, seed=bank_seed)
    teacher0 = init_params(arch.teacher_sizes(ds.obs_dim), seed=teacher_seed, activation=arch.activation)
    guidance = None
    try:
        guidance = stage_guidance(bank, teacher0, test)
    except DataError:
        pass  # degenerate zero-shot output; baseline simply not recorded
    teacher, teacher_report = finetune_teacher(cfg, bank, teacher0, train, test)
    knowledge = extract_knowledge(bank, teacher, train)

    student0 = init_params(arch.student_sizes(ds.obs_dim), seed=student_seed, activation=arch.activation)
    head_rng = np.random.default_rng(head_seed)
    head0 = RegressionHead(
        weight=head_rng.uniform(-1, 1, size=arch.embed_dim) / math.sqrt(arch.embed_dim),
        bias=0.0,
    )
    _, _, reg_report = train_regression_baseline(cfg, student0, head0, train, test)
    variant_cfgs = {
        "hard_only": replace(cfg, schedule="fixed", lambda_fixed=0.0),
        "soft_only": replace(cfg, schedule="fixed", lambda_fixed=1.0),
        "annealed_blend": replace(cfg, schedule="cosine", lambda_fixed=None),
    }
    results = {}
    for label, vcfg in variant_cfgs.items():
        _, rep = distill_student(vcfg, knowledge, student0, train, test)
        results[label] = rep
    if results["soft_only"].hard_evals != 0:
        raise DataError("soft-only variant consulted the subjective scores during training")
    return AblationReport(
        cfg=cfg,
        arch=arch,
        teacher=teacher_report.test,
        regression_head=reg_report.test,
        hard_only=results["hard_only"].test,
        soft_only=results["soft_only"].test,
        annealed_blend=results["annealed_blend"].test,
        guidance_baseline=guidance,
    )


@dataclass(frozen=True)
class MedianReport:
    """Elementwise median over an odd number of repeated runs."""

    plcc: float
    srcc: float
    runs: tuple[CorrelationReport, ...]


def median_of_runs(cfg: TrainConfig, job) -> MedianReport:
    """Repeat `job(cfg_with_seed)` with seeds seed+0 .. seed+k-1 and take
    the elementwise median of the correlations."""
    runs = []
    for k in range(cfg.repeat_count):
        run_cfg = replace(cfg, seed=cfg.seed + k)
        out = job(run_cfg)
        if isinstance(out, RunReport):
            out = out.test
        if not isinstance(out, CorrelationReport):
            raise ConfigError("job must yield a correlation report")
        runs.append(out)
    return MedianReport(
        plcc=statistics.median(r.plcc for r in runs),
        srcc=statistics.median(r.srcc for r in runs),
        runs=tuple(runs),
    )
