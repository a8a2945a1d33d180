import math

import numpy as np
import pytest

from iqdistill.errors import DomainError, NumericError, ShapeError
from iqdistill.scoring import (
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

from conftest import bank_with_sims

# Golden values computed with an arbitrary-precision softmax oracle
# (mpmath, 60 digits) before the implementation existed: similarities
# (0.1, 0.2, 0.3, 0.4, 0.5) at temperature 1.
GOLDEN_SIMS = (0.1, 0.2, 0.3, 0.4, 0.5)
GOLDEN_PROBS = (
    0.1621203478685732,
    0.17917069369265443,
    0.19801424004056153,
    0.21883957945767904,
    0.2418551389405318,
)
GOLDEN_SCORE = 3.199138467908942


def test_cosine_identity():
    v = np.array([0.3, -1.2, 4.0])
    assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-15)


def test_cosine_orthogonal():
    assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0


def test_cosine_antipodal():
    v = np.array([2.0, -3.0, 0.5])
    assert cosine_similarity(v, -v) == pytest.approx(-1.0, abs=1e-15)


def test_cosine_symmetric(rng):
    for _ in range(20):
        a, b = rng.normal(size=(2, 7))
        assert cosine_similarity(a, b) == cosine_similarity(b, a)


def test_cosine_zero_norm_names_argument():
    with pytest.raises(DomainError, match="'a'"):
        cosine_similarity([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(DomainError, match="'b'"):
        cosine_similarity([1.0, 0.0], [0.0, 0.0])


def test_cosine_dim_mismatch():
    with pytest.raises(ShapeError):
        cosine_similarity([1.0, 0.0], [1.0, 0.0, 0.0])


def test_cosine_scale_invariance(rng):
    for _ in range(50):
        a, b = rng.normal(size=(2, 5))
        alpha, beta = rng.uniform(0.01, 100.0, size=2)
        assert cosine_similarity(alpha * a, beta * b) == pytest.approx(
            cosine_similarity(a, b), abs=1e-12
        )


def test_bank_validation():
    rows = np.eye(5, 8)
    bank = default_bank(rows, temperature=0.5)
    assert bank.dim == 8
    assert tuple(bank.weights) == (1.0, 2.0, 3.0, 4.0, 5.0)
    with pytest.raises(ShapeError):
        default_bank(np.eye(4, 8), temperature=0.5)
    with pytest.raises(DomainError):
        default_bank(rows, temperature=0.0)
    bad = rows.copy()
    bad[2] = 0.0
    with pytest.raises(DomainError):
        default_bank(bad, temperature=0.5)


def test_bank_is_frozen():
    bank = synthetic_bank(8, temperature=0.2, seed=3)
    with pytest.raises(ValueError):
        bank.text_features[0, 0] = 9.9


def test_levels_order():
    assert LEVELS == ("bad", "poor", "fair", "good", "perfect")


def test_uniform_similarities_give_uniform_distribution():
    bank, probe = bank_with_sims((0.4,) * 5, tau=0.7)
    p = quality_distribution(probe, bank)
    assert np.allclose(p.probs, 0.2, atol=1e-12)


def test_saturation_at_small_temperature():
    bank, probe = bank_with_sims((1.0, 0.0, 0.0, 0.0, 0.0), tau=1e-3)
    p = quality_distribution(probe, bank)
    assert p.probs[0] == pytest.approx(1.0, abs=1e-6)
    assert expected_score(p, bank) == pytest.approx(1.0, abs=1e-5)


def test_golden_distribution():
    bank, probe = bank_with_sims(GOLDEN_SIMS, tau=1.0)
    p = quality_distribution(probe, bank)
    assert np.allclose(p.probs, GOLDEN_PROBS, atol=1e-13)
    assert expected_score(p, bank) == pytest.approx(GOLDEN_SCORE, abs=1e-12)


def test_golden_distribution_against_fresh_oracle():
    # recompute the golden with mpmath at runtime as a second, independent
    # derivation of the same numbers
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 60
    es = [mp.exp(mp.mpf(s)) for s in GOLDEN_SIMS]
    total = sum(es)
    probs = [e / total for e in es]
    score = sum(p * w for p, w in zip(probs, range(1, 6)))
    assert np.allclose([float(p) for p in probs], GOLDEN_PROBS, atol=1e-15)
    assert float(score) == pytest.approx(GOLDEN_SCORE, abs=1e-15)


def test_shift_invariance_of_softmax():
    base = (0.05, 0.1, 0.2, 0.25, 0.3)
    bank_a, probe = bank_with_sims(base, tau=0.3)
    bank_b, _ = bank_with_sims(tuple(s + 0.4 for s in base), tau=0.3)
    pa = quality_distribution(probe, bank_a)
    pb = quality_distribution(probe, bank_b)
    assert np.allclose(pa.probs, pb.probs, atol=1e-9)


def test_monotonicity_in_one_similarity():
    lo, probe = bank_with_sims((0.1, 0.2, 0.3, 0.4, 0.5), tau=0.5)
    hi, _ = bank_with_sims((0.1, 0.2, 0.45, 0.4, 0.5), tau=0.5)
    p_lo = quality_distribution(probe, lo)
    p_hi = quality_distribution(probe, hi)
    assert p_hi.probs[2] > p_lo.probs[2]


def test_uniform_distribution_scores_exactly_three():
    bank, probe = bank_with_sims((0.25,) * 5, tau=0.07)
    assert score_embedding(probe, bank) == 3.0


def test_distribution_validation():
    with pytest.raises(DomainError):
        QualityDistribution(probs=np.array([0.3, 0.3, 0.3, 0.3, 0.3]))  # sums to 1.5
    with pytest.raises(DomainError):
        QualityDistribution(probs=np.array([1.2, -0.2, 0.0, 0.0, 0.0]))  # out of range
    # saturated masses are legal limiting outputs
    QualityDistribution(probs=np.array([1.0, 0.0, 0.0, 0.0, 0.0]))


def test_degenerate_mass_scores_one():
    bank, _ = bank_with_sims((0.1, 0.2, 0.3, 0.4, 0.5), tau=1.0)
    p = QualityDistribution(probs=np.array([1.0, 0.0, 0.0, 0.0, 0.0]))
    assert expected_score(p, bank) == 1.0


def test_expected_score_range(rng):
    bank = synthetic_bank(12, temperature=0.07, seed=0)
    for _ in range(200):
        s = score_embedding(rng.normal(size=12), bank)
        assert 1.0 <= s <= 5.0


def test_nan_similarity_is_numeric_error():
    bank, _ = bank_with_sims((0.1, 0.2, 0.3, 0.4, 0.5), tau=1.0)
    with pytest.raises(NumericError):
        quality_distribution(np.array([np.nan, 0, 0, 0, 0, 0]), bank)


def test_score_batch_singleton_equals_scalar():
    bank = synthetic_bank(6, temperature=0.2, seed=1)
    v = np.array([0.3, -0.1, 0.5, 0.2, -0.7, 0.9])
    assert score_batch([v], bank) == [score_embedding(v, bank)]


def test_score_batch_identical_inputs():
    bank = synthetic_bank(6, temperature=0.2, seed=1)
    v = np.array([0.3, -0.1, 0.5, 0.2, -0.7, 0.9])
    a, b = score_batch([v, v], bank)
    assert a == b


def test_score_batch_matches_scalar_loop_exactly(rng):
    bank = synthetic_bank(10, temperature=0.11, seed=5)
    batch = [rng.normal(size=10) for _ in range(100)]
    got = score_batch(batch, bank)
    want = [score_embedding(v, bank) for v in batch]
    assert got == want  # bit-exact, same code path


def test_score_batch_reports_offending_index():
    bank = synthetic_bank(4, temperature=0.2, seed=2)
    batch = [np.ones(4), np.zeros(4), np.ones(4)]
    with pytest.raises(DomainError, match="sample 1"):
        score_batch(batch, bank)


def test_synthetic_bank_deterministic():
    a = synthetic_bank(16, temperature=0.07, seed=9)
    b = synthetic_bank(16, temperature=0.07, seed=9)
    assert np.array_equal(a.text_features, b.text_features)
    c = synthetic_bank(16, temperature=0.07, seed=10)
    assert not np.array_equal(a.text_features, c.text_features)
