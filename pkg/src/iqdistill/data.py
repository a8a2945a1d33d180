"""Synthetic quality-assessment datasets, score normalization, and splitting.

Each synthetic sample is driven by a latent distortion level z in [0, 1]:
the subjective score is the exact linear map mos = 1 + 4(1 - z), and the
observation is a fixed content vector plus a projection of oscillatory
features of z plus jitter.  Recovering quality from the observation requires
combining several harmonics, so a linear probe stalls well below a nonlinear
encoder and the task separates shallow from genuine readouts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, NumericError

JITTER_SIGMA = 0.45


@dataclass(frozen=True)
class Sample:
    obs: np.ndarray
    mos: float

    def __post_init__(self):
        v = np.asarray(self.obs, dtype=np.float64)
        if not np.all(np.isfinite(v)):
            raise NumericError("observation contains non-finite entries")
        if not 1.0 <= self.mos <= 5.0:
            raise DataError(f"mos {self.mos} outside [1, 5]")
        object.__setattr__(self, "obs", v)
        object.__setattr__(self, "mos", float(self.mos))


@dataclass(frozen=True)
class Dataset:
    samples: tuple[Sample, ...]
    obs_dim: int
    seed: int
    provenance: str  # "synthetic" | "imported"
    latents: tuple[float, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.samples:
            raise ConfigError("dataset must be nonempty")
        for i, s in enumerate(self.samples):
            if s.obs.shape != (self.obs_dim,):
                raise ConfigError(f"sample {i} has obs length {s.obs.shape[0]}, expected {self.obs_dim}")
        if self.latents is not None and len(self.latents) != len(self.samples):
            raise ConfigError("latents are not aligned with samples")

    def __len__(self) -> int:
        return len(self.samples)

    def obs_matrix(self) -> np.ndarray:
        return np.stack([s.obs for s in self.samples])

    def mos_array(self) -> np.ndarray:
        return np.array([s.mos for s in self.samples])


def _latent_features(z: np.ndarray) -> np.ndarray:
    # Harmonics at three incommensurate-looking frequencies plus a weak linear
    # cue.  The cue keeps z identifiable at the endpoints (where every harmonic
    # column repeats); the harmonics carry most of the signal, so a linear
    # readout of the observation cannot reach encoder-level accuracy.
    return np.stack(
        [
            np.sin(4.0 * np.pi * z),
            np.cos(4.0 * np.pi * z),
            np.sin(6.0 * np.pi * z),
            np.cos(6.0 * np.pi * z),
            np.sin(10.0 * np.pi * z),
            np.cos(10.0 * np.pi * z),
            0.25 * (2.0 * z - 1.0),
        ],
        axis=1,
    )


def generate(n: int, obs_dim: int, seed: int) -> Dataset:
    """Deterministic synthetic dataset with a known obs -> quality ground truth.

    Draw order is fixed (latents, content vector, projection, jitter) so a
    given seed always yields a bit-identical dataset.
    """
    if n < 10:
        raise ConfigError(f"need at least 10 samples, got {n}")
    if obs_dim < 4:
        raise ConfigError(f"need obs_dim >= 4, got {obs_dim}")
    rng = np.random.default_rng(seed)
    z = rng.uniform(0.0, 1.0, size=n)
    feats = _latent_features(z)
    n_feats = feats.shape[1]
    content = rng.normal(size=obs_dim)
    projection = rng.normal(size=(obs_dim, n_feats)) / math.sqrt(n_feats)
    jitter = rng.normal(0.0, JITTER_SIGMA, size=(n, obs_dim))

    obs = content[None, :] + feats @ projection.T + jitter
    mos = 1.0 + 4.0 * (1.0 - z)
    samples = tuple(Sample(obs=obs[i], mos=float(mos[i])) for i in range(n))
    return Dataset(
        samples=samples,
        obs_dim=obs_dim,
        seed=seed,
        provenance="synthetic",
        latents=tuple(float(v) for v in z),
    )


def normalize_mos(raw, lo: float, hi: float, invert: bool = False) -> list[float]:
    """Linear map from [lo, hi] onto [1, 5].

    invert flips orientation for lower-is-better inputs (distortion scores),
    so raw = lo maps to 5 and raw = hi maps to 1.
    """
    if not hi > lo:
        raise ConfigError(f"normalization bounds need hi > lo, got [{lo}, {hi}]")
    out = []
    for i, r in enumerate(raw):
        if not lo <= r <= hi:
            raise DataError(f"raw score at index {i} is {r}, outside [{lo}, {hi}]")
        t = (r - lo) / (hi - lo)
        out.append(5.0 - 4.0 * t if invert else 1.0 + 4.0 * t)
    return out


def split(ds: Dataset, train_fraction: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded shuffle into disjoint, exhaustive train/test parts.

    The train size is round-half-up of train_fraction * n.
    """
    n = len(ds)
    if n < 5:
        raise ConfigError(f"need at least 5 samples to split, got {n}")
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(math.floor(train_fraction * n + 0.5))
    n_train = min(max(n_train, 1), n - 1)  # both parts stay nonempty

    def take(idx) -> Dataset:
        return Dataset(
            samples=tuple(ds.samples[i] for i in idx),
            obs_dim=ds.obs_dim,
            seed=ds.seed,
            provenance=ds.provenance,
            latents=None if ds.latents is None else tuple(ds.latents[i] for i in idx),
        )

    return take(perm[:n_train]), take(perm[n_train:])
