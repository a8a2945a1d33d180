"""Prompt-guided quality scoring head.

An image embedding is compared against five fixed text embeddings (one per
quality level, bad through perfect), the cosine similarities are sharpened by
a temperature softmax, and the resulting five-way distribution is collapsed
to a scalar score via the level weights (1..5).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EngineError, NumericError, ShapeError

LEVELS = ("bad", "poor", "fair", "good", "perfect")
LEVEL_WEIGHTS = (1.0, 2.0, 3.0, 4.0, 5.0)


def as_embedding(values) -> np.ndarray:
    """Coerce to a 1-D float64 vector, requiring finite entries."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"embedding must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NumericError("embedding contains non-finite entries")
    return v


@dataclass(frozen=True)
class PromptBank:
    """Frozen quality-semantic knowledge: five text features, level weights,
    and the softmax temperature."""

    text_features: np.ndarray  # (5, dim), row order bad -> perfect
    weights: np.ndarray  # (5,), exactly (1, 2, 3, 4, 5)
    temperature: float

    def __post_init__(self):
        feats = np.asarray(self.text_features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] != len(LEVELS):
            raise ShapeError(
                f"text_features must be ({len(LEVELS)}, dim), got shape {feats.shape}"
            )
        if not np.all(np.isfinite(feats)):
            raise NumericError("text_features contain non-finite entries")
        for i, row in enumerate(feats):
            if not np.any(row):
                raise DomainError(f"text feature row {i} ({LEVELS[i]}) is the zero vector")
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.shape != (len(LEVELS),) or not np.array_equal(weights, LEVEL_WEIGHTS):
            raise DomainError(f"weights must be exactly {LEVEL_WEIGHTS}")
        if not (float(self.temperature) > 0.0):
            raise DomainError(f"temperature must be strictly positive, got {self.temperature}")
        feats.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "text_features", feats)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "temperature", float(self.temperature))

    @property
    def dim(self) -> int:
        return self.text_features.shape[1]


def default_bank(text_features, temperature: float) -> PromptBank:
    """Bank with the canonical level weights (1..5)."""
    return PromptBank(
        text_features=np.asarray(text_features, dtype=np.float64),
        weights=np.array(LEVEL_WEIGHTS),
        temperature=temperature,
    )


def synthetic_bank(dim: int, temperature: float, seed: int) -> PromptBank:
    """Deterministic stand-in bank for runs without exported text features.

    The five rows are unit vectors spread along an arc in a random 2-D plane,
    so quality levels vary smoothly along one latent direction and an encoder
    can be trained against them.
    """
    if dim < 2:
        raise DomainError(f"synthetic bank needs dim >= 2, got {dim}")
    rng = np.random.default_rng(seed)
    a = rng.normal(size=dim)
    a /= np.linalg.norm(a)
    b = rng.normal(size=dim)
    b -= (b @ a) * a
    b /= np.linalg.norm(b)
    angles = np.linspace(-1.2, 1.2, len(LEVELS))
    rows = np.outer(np.cos(angles), a) + np.outer(np.sin(angles), b)
    return default_bank(rows, temperature)


@dataclass(frozen=True)
class QualityDistribution:
    """Probabilities of the five quality grades, summing to 1.

    Entries live in the closed [0, 1]: a sharp enough temperature
    saturates the softmax to float-exact 0/1 masses, which are valid
    limiting outputs.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.shape != (len(LEVELS),):
            raise ShapeError(f"probs must have shape ({len(LEVELS)},), got {p.shape}")
        if not np.all((p >= 0.0) & (p <= 1.0)):
            raise DomainError("probabilities must lie in [0, 1]")
        if abs(float(p.sum()) - 1.0) > 1e-9:
            raise DomainError(f"probabilities sum to {p.sum()!r}, expected 1 within 1e-9")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)


def cosine_similarity(a, b) -> float:
    """a.b / (|a||b|), in [-1, 1]. Symmetric, scale invariant."""
    va = as_embedding(a)
    vb = as_embedding(b)
    if va.shape != vb.shape:
        raise ShapeError(f"dim mismatch: {va.shape[0]} vs {vb.shape[0]}")
    na = np.linalg.norm(va)
    if na == 0.0:
        raise DomainError("cosine_similarity: argument 'a' has zero norm")
    nb = np.linalg.norm(vb)
    if nb == 0.0:
        raise DomainError("cosine_similarity: argument 'b' has zero norm")
    return float(np.dot(va, vb) / (na * nb))


def quality_distribution(img, bank: PromptBank) -> QualityDistribution:
    """Temperature softmax over the five cosine similarities.

    Uses max-subtraction so extreme similarity/temperature ratios stay finite.
    """
    v = as_embedding(img)
    sims = np.array([cosine_similarity(v, row) for row in bank.text_features])
    if np.any(np.isnan(sims)):
        raise NumericError("NaN similarity in quality_distribution")
    z = sims / bank.temperature
    z = z - z.max()
    e = np.exp(z)
    return QualityDistribution(probs=e / e.sum())


def expected_score(p: QualityDistribution, bank: PromptBank) -> float:
    """Weighted sum of the grade probabilities; lies in [1, 5].

    fsum keeps the result correctly rounded regardless of platform
    reduction order; normalized probabilities can carry an ulp or two of
    dust past either end, which is clamped away.
    """
    s = math.fsum(p * w for p, w in zip(p.probs, bank.weights))
    return min(5.0, max(1.0, s))


def score_embedding(img, bank: PromptBank) -> float:
    """Scalar path: distribution then expected score."""
    return expected_score(quality_distribution(img, bank), bank)


def score_batch(imgs, bank: PromptBank) -> list[float]:
    """Score each embedding via the scalar path.

    Results are elementwise identical to calling score_embedding in a loop;
    errors report the index of the first offending element.
    """
    items = list(imgs)
    if not items:
        raise ShapeError("score_batch: empty batch")
    scores = []
    for i, img in enumerate(items):
        try:
            scores.append(score_embedding(img, bank))
        except EngineError as exc:
            raise type(exc)(f"sample {i}: {exc}") from exc
    return scores
