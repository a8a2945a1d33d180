"""Pearson and Spearman rank correlation between predicted and subjective scores.

Spearman is computed as Pearson on average ranks, which stays exact under
ties (the n(n^2-1) shortcut formula does not).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, ShapeError, UndefinedCorrelationError


@dataclass(frozen=True)
class CorrelationReport:
    plcc: float
    srcc: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise DataError(f"correlation needs n >= 3, got n={self.n}")


def _paired(x, y) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x, dtype=np.float64).reshape(-1)
    b = np.asarray(y, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise ShapeError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 3:
        raise DataError(f"correlation needs at least 3 samples, got {a.size}")
    return a, b


def average_ranks(x) -> np.ndarray:
    """1-based ranks; tied values receive the mean rank of their block."""
    a = np.asarray(x, dtype=np.float64).reshape(-1)
    n = a.size
    order = np.argsort(a, kind="mergesort")
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and a[order[j + 1]] == a[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def plcc(x, y) -> float:
    """Pearson linear correlation coefficient."""
    a, b = _paired(x, y)
    a = a - a.mean()
    b = b - b.mean()
    sa = float(np.dot(a, a))
    sb = float(np.dot(b, b))
    if sa == 0.0:
        raise UndefinedCorrelationError("first input is constant; correlation undefined")
    if sb == 0.0:
        raise UndefinedCorrelationError("second input is constant; correlation undefined")
    r = float(np.dot(a, b) / np.sqrt(sa * sb))
    # rounding can overshoot the closed interval by an ulp
    return min(1.0, max(-1.0, r))


def srcc(x, y) -> float:
    """Spearman rank-order correlation: Pearson on average ranks."""
    a, b = _paired(x, y)
    try:
        return plcc(average_ranks(a), average_ranks(b))
    except UndefinedCorrelationError as exc:
        raise UndefinedCorrelationError(f"all-tied input: {exc}") from exc


def correlation_report(predicted, subjective) -> CorrelationReport:
    a, b = _paired(predicted, subjective)
    return CorrelationReport(plcc=plcc(a, b), srcc=srcc(a, b), n=int(a.size))
