"""AdamW updates and the cosine learning-rate decay.

adamw_step is functional: it returns fresh parameter arrays and a fresh
state, so two calls on bit-identical inputs give bit-identical outputs.
The learning rate interpolates along a cosine to a 0.1 floor rather than
decaying to zero, so the final-epoch rate is exactly a tenth of the initial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, NumericError, ShapeError


@dataclass(frozen=True)
class AdamWState:
    m: list[np.ndarray]  # first-moment accumulators
    v: list[np.ndarray]  # second-moment accumulators
    step: int
    beta1: float
    beta2: float
    eps: float
    weight_decay: float
    decay_mask: tuple[bool, ...]  # True where decoupled decay applies

    @classmethod
    def init(
        cls,
        params: list[np.ndarray],
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.01,
        decay_mask: list[bool] | None = None,
    ) -> "AdamWState":
        if decay_mask is None:
            decay_mask = [True] * len(params)
        if len(decay_mask) != len(params):
            raise ShapeError("decay mask length does not match parameter count")
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            step=0,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            weight_decay=weight_decay,
            decay_mask=tuple(decay_mask),
        )


def adamw_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamWState,
    lr: float,
) -> tuple[list[np.ndarray], AdamWState]:
    """One bias-corrected AdamW update with decoupled weight decay.

    p <- p - lr * (mhat / (sqrt(vhat) + eps) + wd * p), decay only where the
    state's mask says so.
    """
    if len(params) != len(state.m) or len(grads) != len(params):
        raise ShapeError("parameter, gradient, and state lengths do not agree")
    if lr < 0.0:
        raise DomainError(f"learning rate must be nonnegative, got {lr}")
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape or p.shape != state.m[i].shape:
            raise ShapeError(
                f"entry {i}: param {p.shape}, grad {g.shape}, moment {state.m[i].shape}"
            )
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient at entry {i}")

    step = state.step + 1
    bc1 = 1.0 - state.beta1**step
    bc2 = 1.0 - state.beta2**step
    new_params, new_m, new_v = [], [], []
    for p, g, m, v, decayed in zip(params, grads, state.m, state.v, state.decay_mask):
        m2 = state.beta1 * m + (1.0 - state.beta1) * g
        v2 = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        update = (m2 / bc1) / (np.sqrt(v2 / bc2) + state.eps)
        if decayed and state.weight_decay != 0.0:
            update = update + state.weight_decay * p
        new_params.append(p - lr * update)
        new_m.append(m2)
        new_v.append(v2)
    return new_params, AdamWState(
        m=new_m,
        v=new_v,
        step=step,
        beta1=state.beta1,
        beta2=state.beta2,
        eps=state.eps,
        weight_decay=state.weight_decay,
        decay_mask=state.decay_mask,
    )


@dataclass(frozen=True)
class LrSchedule:
    """Cosine decay from lr0 down to floor_fraction * lr0 across total_epochs."""

    lr0: float
    total_epochs: int
    floor_fraction: float = 0.1

    def __post_init__(self):
        if self.lr0 < 0.0:
            raise ConfigError(f"initial learning rate must be nonnegative, got {self.lr0}")
        if self.total_epochs < 1:
            raise ConfigError(f"total_epochs must be >= 1, got {self.total_epochs}")
        if not (0.0 < self.floor_fraction < 1.0):
            raise ConfigError(f"floor_fraction must lie in (0, 1), got {self.floor_fraction}")


def lr_at(sched: LrSchedule, epoch: int) -> float:
    """Learning rate at an integer epoch; endpoints are lr0 and 0.1 * lr0 exactly."""
    if not 0 <= epoch <= sched.total_epochs:
        raise DomainError(f"epoch {epoch} outside [0, {sched.total_epochs}]")
    floor = sched.floor_fraction
    shape = 0.5 * (1.0 + math.cos(math.pi * epoch / sched.total_epochs))
    return sched.lr0 * (floor + (1.0 - floor) * shape)
