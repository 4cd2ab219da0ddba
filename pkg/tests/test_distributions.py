from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_maxent
from scriplab.distributions import (
    MoneyDistribution,
    entropy,
    euclidean_distance,
    in_epsilon_set,
    max_entropy_distribution,
    solve_lambda,
    squared_distance,
)
from scriplab.errors import DimensionError, DomainError

# Pattern-search oracle output for K=5, m=2 (see tests/oracles.py), rounded to 1e-6.
ORACLE_K5_M2 = np.array([0.246782, 0.207240, 0.174035, 0.146148, 0.122730, 0.103065])
ORACLE_K5_M2_ENTROPY = 1.7485062488724061


def test_entropy_basics():
    assert entropy(MoneyDistribution.from_probs([0, 1, 0])) == 0.0
    assert entropy(MoneyDistribution.from_probs([0.5, 0.5])) == pytest.approx(math.log(2), abs=1e-15)
    assert entropy(MoneyDistribution.from_probs(np.full(6, 1 / 6))) == pytest.approx(math.log(6))


def test_distribution_validation():
    with pytest.raises(DomainError):
        MoneyDistribution(np.array([0.5, 0.6]), 0.6)
    with pytest.raises(DomainError):
        MoneyDistribution(np.array([0.5, 0.5]), 0.7)
    with pytest.raises(DomainError):
        MoneyDistribution(np.array([-0.1, 1.1]), 1.1)
    d = MoneyDistribution.from_probs([0.25, 0.75])
    with pytest.raises(ValueError):
        d.probs[0] = 1.0


def test_small_closed_forms():
    np.testing.assert_allclose(max_entropy_distribution(1, 0.5).probs, [0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(max_entropy_distribution(2, 1.0).probs, [1 / 3] * 3, atol=1e-12)


def test_endpoints_are_point_masses():
    assert max_entropy_distribution(4, 0).probs.tolist() == [1, 0, 0, 0, 0]
    assert max_entropy_distribution(4, 4).probs.tolist() == [0, 0, 0, 0, 1]


def test_k5_m2_matches_frozen_oracle():
    d = max_entropy_distribution(5, 2.0)
    np.testing.assert_allclose(d.probs, ORACLE_K5_M2, atol=2e-6)
    assert entropy(d) == pytest.approx(ORACLE_K5_M2_ENTROPY, abs=1e-6)
    assert entropy(d) >= ORACLE_K5_M2_ENTROPY - 1e-9


@pytest.mark.parametrize("K", [1, 2, 3])
def test_oracle_equivalence_small_supports(K):
    for i in range(10 * K + 1):
        m = i / 10
        d = max_entropy_distribution(K, m)
        ref = brute_force_maxent(K, m)
        q = ref[ref > 0]
        h_ref = float(-(q * np.log(q)).sum())
        assert entropy(d) == pytest.approx(h_ref, abs=1e-6)
        assert entropy(d) >= h_ref - 1e-9
        np.testing.assert_allclose(d.probs, ref, atol=1e-4)


def test_out_of_range_mean():
    with pytest.raises(DomainError):
        max_entropy_distribution(3, 3.5)
    with pytest.raises(DomainError):
        max_entropy_distribution(3, -0.1)
    with pytest.raises(DomainError):
        max_entropy_distribution(0, 0)


@settings(max_examples=60, deadline=None)
@given(K=st.integers(1, 12), frac=st.floats(0.001, 0.999))
def test_mean_and_mirror_symmetry(K, frac):
    m = frac * K
    d = max_entropy_distribution(K, m)
    assert d.mean == pytest.approx(m, abs=1e-10)
    mirrored = max_entropy_distribution(K, K - m)
    np.testing.assert_allclose(d.probs, mirrored.probs[::-1], atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(K=st.integers(1, 10), a=st.floats(0.01, 0.98), b=st.floats(0.01, 0.98))
def test_lambda_monotone_in_mean(K, a, b):
    if abs(a - b) < 1e-6:
        return
    lo, hi = sorted((a * K, b * K))
    assert solve_lambda(K, lo) < solve_lambda(K, hi)


def test_uniform_at_half_support():
    assert solve_lambda(4, 2.0) == pytest.approx(1.0, abs=1e-10)


def test_distances():
    a = MoneyDistribution.from_probs([1.0, 0.0])
    b = MoneyDistribution.from_probs([0.0, 1.0])
    assert euclidean_distance(a, a) == 0
    assert euclidean_distance(a, b) == pytest.approx(math.sqrt(2))
    assert squared_distance(a, b) == pytest.approx(2.0)
    with pytest.raises(DimensionError):
        squared_distance(a, MoneyDistribution.from_probs([1.0, 0.0, 0.0]))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4), min_size=3, max_size=3))
def test_triangle_inequality(raw):
    ds = []
    for r in raw:
        v = np.array(r) + 1e-3
        ds.append(MoneyDistribution.from_probs(v / v.sum()))
    x, y, z = ds
    assert euclidean_distance(x, z) <= euclidean_distance(x, y) + euclidean_distance(y, z) + 1e-12


def test_epsilon_set_uses_squared_form():
    d_star = max_entropy_distribution(2, 1.0)
    d = MoneyDistribution.from_probs([0.4, 0.2, 0.4])
    sq = squared_distance(d, d_star)
    assert in_epsilon_set(d, d_star, sq * 1.01)
    assert not in_epsilon_set(d, d_star, sq)
    # the root is larger than the squared value here, so the forms disagree
    assert not in_epsilon_set(d, d_star, euclidean_distance(d, d_star) ** 2 * 0.99)
