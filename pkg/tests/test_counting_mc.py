import math

import numpy as np
import pytest

from tablecount.errors import PermanentSizeError, ValidationError
from tablecount.rng import derive_seed_block, exponential_matrix
from tablecount.counting import (
    Margins,
    WeightMatrix,
    chebyshev_sample_count,
    exact_count_bruteforce,
    mc_estimate_count,
    mc_sample_values,
    mc_weighted_count,
    variance_ratio_report,
    weighted_count_bruteforce,
)


def test_single_sample_matches_hand_permanent():
    # for unit margins the block matrix is the raw exponential matrix, so each
    # sample value must equal g00*g11 + g01*g10 for the drawn cells
    m = Margins([1, 1], [1, 1])
    seed = 7
    values = mc_sample_values(m, 4, seed)
    cells = exponential_matrix(derive_seed_block(seed, 4), 4).reshape(4, 2, 2)
    for i in range(4):
        g = cells[i]
        assert values[i] == pytest.approx(g[0, 0] * g[1, 1] + g[0, 1] * g[1, 0], rel=1e-12)


def test_sample_values_repeat_block_structure():
    # margins (2,1)x(2,1): block matrix repeats the row-0 draws twice and the
    # col-0 draws twice, so every sample permanent is a polynomial in 4 cells
    m = Margins([2, 1], [2, 1])
    seed = 11
    values = mc_sample_values(m, 8, seed)
    cells = exponential_matrix(derive_seed_block(seed, 8), 4).reshape(8, 2, 2)
    for i in range(8):
        a, b, c, d = cells[i, 0, 0], cells[i, 0, 1], cells[i, 1, 0], cells[i, 1, 1]
        block = np.array([[a, a, b], [a, a, b], [c, c, d]])
        per = sum(
            block[0, p[0]] * block[1, p[1]] * block[2, p[2]]
            for p in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
        )
        assert values[i] == pytest.approx(per, rel=1e-12)


def test_estimate_deterministic_and_chunk_invariant():
    m = Margins([2, 2, 2], [2, 2, 2])
    a = mc_estimate_count(m, 3000, seed=5)
    b = mc_estimate_count(m, 3000, seed=5)
    c = mc_estimate_count(m, 3000, seed=5, chunk_size=17)
    assert a == b
    assert a.mean == c.mean and a.std_err == c.std_err
    d = mc_estimate_count(m, 3000, seed=6)
    assert d.mean != a.mean


def test_estimate_ci_contains_truth():
    m = Margins([2, 2, 2], [2, 2, 2])
    est = mc_estimate_count(m, 40000, seed=3)
    assert est.ci_low <= 21 <= est.ci_high
    assert est.exact_divisor_applied
    assert est.num_samples == 40000


def test_estimate_mean_near_truth_small_case():
    m = Margins([2, 2], [2, 2])
    est = mc_estimate_count(m, 60000, seed=1)
    assert abs(est.mean - 3) < 4 * est.std_err


def test_needs_two_samples():
    with pytest.raises(ValidationError):
        mc_estimate_count(Margins([1, 1], [1, 1]), 1, seed=0)


def test_size_limit_guard():
    m = Margins([5] * 5, [5] * 5)
    with pytest.raises(PermanentSizeError):
        mc_sample_values(m, 2, seed=0, size_limit=22)


def test_weighted_unit_weights_match_plain_scaled():
    # with all weights 1 the weighted sampler targets the raw table count
    m = Margins([2, 2], [2, 2])
    w = WeightMatrix([[1, 1], [1, 1]])
    est = mc_weighted_count(m, w, 30000, seed=9)
    assert abs(est.mean - 3) < 4 * est.std_err
    plain = mc_sample_values(m, 30000, seed=9)
    weighted = mc_sample_values(m, 30000, seed=9, weights=w)
    assert np.array_equal(plain, weighted)


def test_weighted_estimate_tracks_bruteforce_target():
    m = Margins([2, 1], [1, 1, 1])
    w = WeightMatrix([[0.5, 1.0, 2.0], [1.5, 0.25, 1.0]])
    target = weighted_count_bruteforce(m, w, include_factorials=False)
    est = mc_weighted_count(m, w, 80000, seed=13)
    assert abs(est.mean - target) < 4 * est.std_err


def test_weighted_scaling_by_constant():
    # doubling every weight multiplies each degree-N term by 2^N
    m = Margins([1, 1], [1, 1])
    w1 = WeightMatrix([[1, 1], [1, 1]])
    w2 = WeightMatrix([[2, 2], [2, 2]])
    v1 = mc_sample_values(m, 500, seed=2, weights=w1)
    v2 = mc_sample_values(m, 500, seed=2, weights=w2)
    assert np.allclose(v2, 4 * v1)


def test_chebyshev_sample_count_formula():
    m = Margins([1, 1], [1, 1])
    assert chebyshev_sample_count(m, 0.5) == math.ceil((2 ** 4 - 1) / ((1 / 3) * 0.25))
    assert chebyshev_sample_count(m, 0.5, failure=0.05) == math.ceil(15 / (0.05 * 0.25))
    with pytest.raises(ValidationError):
        chebyshev_sample_count(m, 0.0)


def test_variance_report_unit_margins():
    m = Margins([1, 1], [1, 1])
    rep = variance_ratio_report(m, 200000, seed=4)
    # E[per^2]/E[per]^2 = 10/4 for two unit margins
    assert abs(rep.empirical_ratio - 2.5) < 3 * rep.slack
    assert rep.bound_part2 == 16.0
    assert rep.rho == 1
    assert rep.bound_part3_exponent == pytest.approx(2.0)
    assert rep.bound_part3 == pytest.approx(math.exp(2.0))
    assert rep.within_part2


def test_variance_report_overflow_exponent_reported():
    m = Margins([3, 3], [3, 3])
    rep = variance_ratio_report(m, 1000, seed=4)
    assert rep.rho == 3
    assert rep.bound_part3_exponent == pytest.approx(9 * math.factorial(6))
    assert rep.bound_part3 is None
