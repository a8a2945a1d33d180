"""Training objectives and the soft/hard blend-weight schedules.

Every loss returns its value together with the analytic gradient with respect
to the stated differentiation target, so encoders can be trained without an
autograd framework and the gradients can be checked against central finite
differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, NumericError, ShapeError
from .scoring import PromptBank


@dataclass(frozen=True)
class LossValue:
    """Scalar loss plus the gradient w.r.t. the differentiation target."""

    value: float
    grad: np.ndarray

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise NumericError(f"loss value is not finite: {self.value}")


def _as_matrix(items, name: str) -> np.ndarray:
    m = np.asarray(items, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2 or m.shape[0] == 0:
        raise ShapeError(f"{name} must be a nonempty batch of vectors, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError(f"{name} contains non-finite entries")
    return m


def _unit_rows(m: np.ndarray, name: str) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(m, axis=1)
    for i, nrm in enumerate(norms):
        if nrm == 0.0:
            raise DomainError(f"{name} vector at sample {i} has zero norm")
    return m / norms[:, None], norms


def mse_loss(pred, target) -> LossValue:
    """Mean squared error; grad is taken w.r.t. pred."""
    p = np.asarray(pred, dtype=np.float64).reshape(-1)
    t = np.asarray(target, dtype=np.float64).reshape(-1)
    if p.size != t.size or p.size == 0:
        raise ShapeError(f"length mismatch: pred has {p.size}, target has {t.size}")
    d = p - t
    n = p.size
    return LossValue(value=float(np.dot(d, d) / n), grad=(2.0 / n) * d)


def soft_cosine_loss(student, teacher) -> LossValue:
    """1 minus the mean pairwise cosine similarity; grad w.r.t. the student rows.

    The teacher rows are treated as constants. Zero at perfect alignment
    (any positive scaling of the teacher rows), at most 2.
    """
    u = _as_matrix(student, "student")
    v = _as_matrix(teacher, "teacher")
    if u.shape != v.shape:
        raise ShapeError(f"batch shape mismatch: student {u.shape} vs teacher {v.shape}")
    n = u.shape[0]
    uhat, unorm = _unit_rows(u, "student")
    vhat, _ = _unit_rows(v, "teacher")
    cos = np.sum(uhat * vhat, axis=1)
    # d cos/d u = (vhat - cos * uhat) / |u|
    grad = -(vhat - cos[:, None] * uhat) / (n * unorm[:, None])
    return LossValue(value=float(1.0 - cos.mean()), grad=grad)


def batch_scores(embeddings, bank: PromptBank) -> np.ndarray:
    """Vectorized expected scores for a batch; used by the hard objective."""
    u = _as_matrix(embeddings, "embeddings")
    if u.shape[1] != bank.dim:
        raise ShapeError(f"embedding dim {u.shape[1]} does not match bank dim {bank.dim}")
    uhat, _ = _unit_rows(u, "embedding")
    that, _ = _unit_rows(np.asarray(bank.text_features), "text feature")
    sims = uhat @ that.T  # (n, 5)
    z = sims / bank.temperature
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    probs = e / e.sum(axis=1, keepdims=True)
    return probs @ bank.weights


def hard_score_loss(student, bank: PromptBank, mos) -> LossValue:
    """MSE between head-predicted scores and subjective scores.

    The gradient w.r.t. each student embedding chains the MSE derivative
    through the scoring head: expected score -> softmax -> cosine rows.
    """
    u = _as_matrix(student, "student")
    targets = np.asarray(mos, dtype=np.float64).reshape(-1)
    n = u.shape[0]
    if targets.size != n:
        raise ShapeError(f"batch size mismatch: {n} embeddings vs {targets.size} scores")
    if u.shape[1] != bank.dim:
        raise ShapeError(f"embedding dim {u.shape[1]} does not match bank dim {bank.dim}")

    uhat, unorm = _unit_rows(u, "student")
    that, _ = _unit_rows(np.asarray(bank.text_features), "text feature")
    sims = uhat @ that.T
    z = sims / bank.temperature
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    probs = e / e.sum(axis=1, keepdims=True)
    shat = probs @ bank.weights

    # d shat/d sims_j = p_j (w_j - shat) / tau
    c = probs * (bank.weights[None, :] - shat[:, None]) / bank.temperature
    # d sims_j/d u = (that_j - sims_j * uhat) / |u|
    dshat_du = (c @ that - np.sum(c * sims, axis=1)[:, None] * uhat) / unorm[:, None]

    d = shat - targets
    grad = (2.0 / n) * d[:, None] * dshat_du
    return LossValue(value=float(np.dot(d, d) / n), grad=grad)


@dataclass(frozen=True)
class BlendSchedule:
    """Soft-label weight over training: a fixed value or a cosine anneal
    from 1 down to 0 across total_steps."""

    kind: str  # "fixed" | "cosine"
    lambda_fixed: float | None = None
    total_steps: int | None = None

    def __post_init__(self):
        if self.kind == "fixed":
            lam = self.lambda_fixed
            if lam is None or not (0.0 <= lam <= 1.0):
                raise ConfigError(f"fixed schedule needs lambda in [0, 1], got {lam}")
        elif self.kind == "cosine":
            if self.total_steps is None or self.total_steps < 1:
                raise ConfigError(f"cosine schedule needs total_steps >= 1, got {self.total_steps}")
        else:
            raise ConfigError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def fixed(cls, lam: float) -> "BlendSchedule":
        return cls(kind="fixed", lambda_fixed=lam)

    @classmethod
    def cosine(cls, total_steps: int) -> "BlendSchedule":
        return cls(kind="cosine", total_steps=total_steps)


def lambda_at(sched: BlendSchedule, t: int) -> float:
    """Soft-label weight at integer step t.

    Cosine kind: 0.5 * (1 + cos(pi t / T)); exactly 1 at t=0 and 0 at t=T.
    Fixed kind ignores t.
    """
    if sched.kind == "fixed":
        return float(sched.lambda_fixed)
    total = sched.total_steps
    if not 0 <= t <= total:
        raise DomainError(f"step {t} outside [0, {total}]; no extrapolation")
    return 0.5 * (1.0 + math.cos(math.pi * t / total))


def blended_loss(soft: LossValue, hard: LossValue, lam: float) -> LossValue:
    """lam * soft + (1 - lam) * hard, blending values and gradients alike.

    Endpoints short-circuit so lam=1 is bit-exactly the soft loss and lam=0
    bit-exactly the hard loss.
    """
    if not (0.0 <= lam <= 1.0):
        raise DomainError(f"blend weight must lie in [0, 1], got {lam}")
    if soft.grad.shape != hard.grad.shape:
        raise ShapeError(
            f"gradients target different shapes: {soft.grad.shape} vs {hard.grad.shape}"
        )
    if lam == 1.0:
        return LossValue(value=soft.value, grad=soft.grad.copy())
    if lam == 0.0:
        return LossValue(value=hard.value, grad=hard.grad.copy())
    return LossValue(
        value=lam * soft.value + (1.0 - lam) * hard.value,
        grad=lam * soft.grad + (1.0 - lam) * hard.grad,
    )
