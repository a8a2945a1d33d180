import math

import numpy as np
import pytest

from iqdistill.scoring import default_bank


def bank_with_sims(sims, tau):
    """Bank in R^6 whose rows have the prescribed cosine similarity with
    the probe embedding e0. Row i = s_i*e0 + sqrt(1-s_i^2)*e_{i+1}."""
    rows = np.zeros((5, 6))
    for i, s in enumerate(sims):
        rows[i, 0] = s
        rows[i, i + 1] = math.sqrt(1.0 - s * s)
    probe = np.zeros(6)
    probe[0] = 1.0
    return default_bank(rows, temperature=tau), probe


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)
