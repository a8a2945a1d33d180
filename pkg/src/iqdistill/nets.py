"""Small trainable feedforward encoders with hand-written backprop.

Teacher and student share this implementation and differ only in their layer
sizes. Hidden layers apply tanh or relu; the output layer is linear. Exact
reverse-mode gradients are produced for every weight and bias, and a central
finite-difference harness verifies any loss chained through an encoder.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError, ShapeError, UsageError
from .losses import LossValue

_ACT = {
    "tanh": (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
    "relu": (lambda z: np.maximum(z, 0.0), lambda z: (z > 0.0).astype(np.float64)),
}


@dataclass
class EncoderParams:
    layers: list[tuple[np.ndarray, np.ndarray]]  # (weight out x in, bias out)
    activation: str = "tanh"

    def __post_init__(self):
        if not self.layers:
            raise ConfigError("encoder needs at least one layer")
        if self.activation not in _ACT:
            raise ConfigError(f"unknown activation {self.activation!r}")
        prev_out = None
        for k, (w, b) in enumerate(self.layers):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ShapeError(f"layer {k}: weight {w.shape} and bias {b.shape} do not pair")
            if prev_out is not None and w.shape[1] != prev_out:
                raise ShapeError(
                    f"layer {k}: input size {w.shape[1]} does not chain from previous output {prev_out}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NumericError(f"layer {k} has non-finite parameters")
            prev_out = w.shape[0]

    @property
    def in_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.layers[-1][0].shape[0]

    def arrays(self) -> list[np.ndarray]:
        """Flat parameter list, [W0, b0, W1, b1, ...]."""
        out = []
        for w, b in self.layers:
            out.extend((w, b))
        return out

    def decay_mask(self) -> list[bool]:
        """Weight decay applies to weights, never biases."""
        return [True, False] * len(self.layers)

    def replace_arrays(self, arrays: list[np.ndarray]) -> "EncoderParams":
        if len(arrays) != 2 * len(self.layers):
            raise ShapeError("array count does not match layer count")
        layers = [(arrays[2 * k], arrays[2 * k + 1]) for k in range(len(self.layers))]
        return EncoderParams(layers=layers, activation=self.activation)


def parameter_count(params: EncoderParams) -> int:
    return sum(w.size + b.size for w, b in params.layers)


def init_params(sizes, seed: int, activation: str = "tanh") -> EncoderParams:
    """Deterministic init: weights uniform in +-1/sqrt(fan_in), biases zero."""
    sizes = list(sizes)
    if len(sizes) < 2:
        raise ConfigError(f"layer spec needs an input size and at least one layer, got {sizes}")
    if any(s < 1 for s in sizes):
        raise ConfigError(f"layer sizes must be >= 1, got {sizes}")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append((w, np.zeros(fan_out)))
    return EncoderParams(layers=layers, activation=activation)


@dataclass
class ForwardCache:
    params: EncoderParams = field(repr=False)
    inputs: list[np.ndarray] = field(repr=False)  # layer inputs, (n, size) each
    zs: list[np.ndarray] = field(repr=False)  # pre-activations, (n, size) each
    single: bool = False


@dataclass
class GradBundle:
    """Partials mirroring EncoderParams, plus head partials when present."""

    layers: list[tuple[np.ndarray, np.ndarray]]
    head_weight: np.ndarray | None = None
    head_bias: float | None = None

    def arrays(self) -> list[np.ndarray]:
        out = []
        for dw, db in self.layers:
            out.extend((dw, db))
        return out


def _forward_matrix(params: EncoderParams, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    act, _ = _ACT[params.activation]
    inputs, zs = [], []
    a = x
    last = len(params.layers) - 1
    for k, (w, b) in enumerate(params.layers):
        inputs.append(a)
        z = a @ w.T + b
        zs.append(z)
        a = z if k == last else act(z)
    return a, ForwardCache(params=params, inputs=inputs, zs=zs)


def forward(params: EncoderParams, x) -> tuple[np.ndarray, ForwardCache]:
    """Encode one observation vector; returns the embedding and the cache
    backward needs."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != params.in_dim:
        raise ShapeError(f"input shape {v.shape} does not match encoder input {params.in_dim}")
    out, cache = _forward_matrix(params, v.reshape(1, -1))
    cache.single = True
    return out[0], cache


def forward_batch(params: EncoderParams, x) -> tuple[np.ndarray, ForwardCache]:
    """Encode a batch of observations, one per row."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != params.in_dim:
        raise ShapeError(f"batch shape {m.shape} does not match encoder input {params.in_dim}")
    return _forward_matrix(params, m)


def backward(params: EncoderParams, cache: ForwardCache, upstream) -> GradBundle:
    """Exact reverse-mode partials for every weight and bias.

    upstream is the gradient w.r.t. the embedding: a vector for a single
    forward, a matrix (one row per sample, summed into the bundle) for a
    batch forward.
    """
    if cache.params is not params:
        raise UsageError("cache was produced by a different parameter set")
    g = np.asarray(upstream, dtype=np.float64)
    if cache.single:
        if g.ndim != 1:
            raise ShapeError(f"upstream must be a vector for a single forward, got {g.shape}")
        g = g.reshape(1, -1)
    n_rows = cache.inputs[0].shape[0]
    if g.ndim != 2 or g.shape != (n_rows, params.out_dim):
        raise ShapeError(f"upstream shape {g.shape} does not match ({n_rows}, {params.out_dim})")

    _, dact = _ACT[params.activation]
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(params.layers)
    delta = g
    for k in range(len(params.layers) - 1, -1, -1):
        w, _ = params.layers[k]
        grads[k] = (delta.T @ cache.inputs[k], delta.sum(axis=0))
        if k > 0:
            delta = (delta @ w) * dact(cache.zs[k - 1])
    return GradBundle(layers=grads)


@dataclass
class RegressionHead:
    """Linear score head for the regression baseline; output is not clamped."""

    weight: np.ndarray
    bias: float

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=np.float64)
        if w.ndim != 1:
            raise ShapeError(f"head weight must be a vector, got shape {w.shape}")
        if not (np.all(np.isfinite(w)) and np.isfinite(self.bias)):
            raise NumericError("head has non-finite parameters")
        self.weight = w
        self.bias = float(self.bias)


def zero_head(dim: int) -> RegressionHead:
    return RegressionHead(weight=np.zeros(dim), bias=0.0)


def regression_forward(head: RegressionHead, e) -> float:
    """w.e + b for one embedding."""
    v = np.asarray(e, dtype=np.float64)
    if v.shape != head.weight.shape:
        raise ShapeError(f"dim mismatch: embedding {v.shape} vs head {head.weight.shape}")
    return float(np.dot(head.weight, v)) + head.bias


def regression_batch(head: RegressionHead, emb: np.ndarray) -> np.ndarray:
    if emb.ndim != 2 or emb.shape[1] != head.weight.shape[0]:
        raise ShapeError(f"batch shape {emb.shape} vs head dim {head.weight.shape[0]}")
    return emb @ head.weight + head.bias


def head_backward(
    head: RegressionHead, emb: np.ndarray, upstream: np.ndarray
) -> tuple[np.ndarray, float, np.ndarray]:
    """Partials of sum_i upstream_i * (w.e_i + b): (dw, db, demb)."""
    up = np.asarray(upstream, dtype=np.float64).reshape(-1)
    if emb.shape[0] != up.shape[0]:
        raise ShapeError(f"batch size mismatch: {emb.shape[0]} vs {up.shape[0]}")
    return up @ emb, float(up.sum()), up[:, None] * head.weight[None, :]


@dataclass(frozen=True)
class FiniteDiffEntry:
    name: str
    rel_error: float
    passed: bool


@dataclass(frozen=True)
class FiniteDiffReport:
    entries: list[FiniteDiffEntry]
    max_rel_error: float
    tolerance: float
    passed: bool


def finite_diff_check(
    params: EncoderParams, x, loss_fn, tolerance: float = 1e-4, h: float = 1e-6
) -> FiniteDiffReport:
    """Compare analytic parameter gradients against central differences.

    loss_fn maps the encoder's batch embedding matrix to a LossValue whose
    grad is taken w.r.t. that matrix. The relative error per parameter array
    is max|analytic - numeric| / max(|analytic|_inf, |numeric|_inf, 1e-12).
    Failures never raise; they show up as report entries.
    """
    xm = np.atleast_2d(np.asarray(x, dtype=np.float64))
    emb, cache = forward_batch(params, xm)
    analytic = backward(params, cache, loss_fn(emb).grad)

    entries = []
    for k, (w, b) in enumerate(params.layers):
        for name, arr, a_grad in (
            (f"layer{k}.weight", w, analytic.layers[k][0]),
            (f"layer{k}.bias", b, analytic.layers[k][1]),
        ):
            numeric = np.zeros_like(arr)
            flat = arr.reshape(-1)
            nflat = numeric.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = loss_fn(forward_batch(params, xm)[0]).value
                flat[i] = orig - h
                down = loss_fn(forward_batch(params, xm)[0]).value
                flat[i] = orig
                nflat[i] = (up - down) / (2.0 * h)
            scale = max(np.abs(a_grad).max(), np.abs(numeric).max(), 1e-12)
            rel = float(np.abs(a_grad - numeric).max() / scale)
            entries.append(FiniteDiffEntry(name=name, rel_error=rel, passed=rel < tolerance))
    worst = max(e.rel_error for e in entries)
    return FiniteDiffReport(
        entries=entries, max_rel_error=worst, tolerance=tolerance, passed=worst < tolerance
    )
