from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scriplab.core import (
    Altruist,
    GameParams,
    SystemState,
    ThresholdStrategy,
    decide_volunteer,
    effective_discount,
    empirical_distribution,
    equal_start,
    extreme_start,
    homogeneous,
    near_distribution_start,
    run_simulation,
    simulate_round,
    standard,
)
from scriplab.distributions import max_entropy_distribution
from scriplab.errors import BudgetError, DomainError, SupportError
from scriplab.streams import make_streams

# exp(ln(0.9999)/1000) evaluated with mpmath at 50 digits
DISCOUNT_9999_1000 = 0.9999998999950047


def test_params_validation_and_mean():
    p = GameParams(4, 0.9, 0.1, 1.0, 6)
    assert p.m == 1.5
    for bad in [dict(n=1), dict(delta=1.0), dict(alpha=0.0), dict(beta=0.0), dict(beta=1.1), dict(money=-1)]:
        with pytest.raises(DomainError):
            p.replace(**bad)


def test_threshold_decomposition():
    s = ThresholdStrategy(2.5)
    assert (s.k, s.gamma_prime, s.support) == (2, 0.5, 3)
    assert ThresholdStrategy(3).support == 3
    with pytest.raises(DomainError):
        ThresholdStrategy(-1)


def test_effective_discount():
    assert effective_discount(0.9999, 1) == pytest.approx(0.9999, abs=1e-16)
    assert effective_discount(0.5, 10) ** 10 == pytest.approx(0.5, abs=1e-12)
    assert effective_discount(0.9999, 1000) == pytest.approx(DISCOUNT_9999_1000, rel=1e-15)
    with pytest.raises(DomainError):
        effective_discount(1.0, 3)
    with pytest.raises(DomainError):
        effective_discount(0.5, 0)


def test_decide_volunteer_examples():
    assert decide_volunteer(ThresholdStrategy(2.0), 1, 3, 0.99)
    assert not decide_volunteer(ThresholdStrategy(2.0), 5, 3, 0.0)
    assert decide_volunteer(ThresholdStrategy(2.5), 2, 1, 0.3)
    assert not decide_volunteer(ThresholdStrategy(2.5), 2, 1, 0.7)
    assert not decide_volunteer(ThresholdStrategy(2.0), 0, 0, 0.0)


def test_broke_economy_never_satisfies():
    params = GameParams(5, 0.9, 0.1, 1.0, 0)
    state = SystemState.initial(np.zeros(5, dtype=int))
    st_ = make_streams(3)
    for _ in range(50):
        state, out = simulate_round(state, homogeneous(5, 2), params, st_)
        assert not out.satisfied and not out.paid


def test_two_agent_round():
    params = GameParams(2, 0.9, 0.1, 1.0, 1)
    kinds = homogeneous(2, 1)
    for seed in range(40):
        state = SystemState.initial([1, 0])
        new, out = simulate_round(state, kinds, params, make_streams(seed))
        if out.requester == 0:
            assert new.balances.tolist() == [0, 1]
        else:
            assert new.balances.tolist() == [1, 0]


@settings(max_examples=60, deadline=None)
@given(
    balances=st.lists(st.integers(0, 6), min_size=2, max_size=8),
    gammas=st.lists(st.floats(0, 7), min_size=8, max_size=8),
    beta=st.floats(0.05, 1.0),
    seed=st.integers(0, 2**32),
)
def test_round_invariants(balances, gammas, beta, seed):
    n = len(balances)
    params = GameParams(n, 0.9, 0.1, beta, sum(balances))
    kinds = [standard(g) for g in gammas[:n]]
    kinds[0] = Altruist(0.5)
    state = SystemState.initial(balances)
    streams = make_streams(seed)
    for _ in range(5):
        new, out = simulate_round(state, kinds, params, streams)
        assert new.money == state.money
        assert out.requester not in out.volunteers
        assert out.volunteers <= out.able
        assert out.satisfied == (out.server is not None)
        if out.server is not None:
            assert out.server in out.volunteers
        moved = np.abs(new.balances - state.balances).sum()
        assert moved == (2 if out.paid else 0)
        if out.paid:
            assert state.balances[out.requester] >= 1
        state = new


def test_altruist_serves_insolvent_for_free():
    params = GameParams(2, 0.9, 0.1, 1.0, 0)
    kinds = [standard(2), Altruist(0.7)]
    for seed in range(20):
        new, out = simulate_round(SystemState.initial([0, 0]), kinds, params, make_streams(seed))
        if out.requester == 0:
            assert out.server == 1 and not out.paid
            assert new.utilities[1] == pytest.approx(0.7)
            assert new.utilities[0] == pytest.approx(1.0)


def test_empirical_distribution():
    d = empirical_distribution(np.array([0, 0, 5, 5]), 5)
    assert d.probs.tolist() == [0.5, 0, 0, 0, 0, 0.5]
    assert empirical_distribution(np.full(4, 2), 5).probs.tolist() == [0, 0, 1, 0, 0, 0]
    with pytest.raises(SupportError):
        empirical_distribution(np.array([0, 6]), 5)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 9), min_size=1, max_size=30))
def test_empirical_mean_matches_money(balances):
    b = np.array(balances)
    assert empirical_distribution(b, 9).mean == pytest.approx(b.sum() / b.size, abs=1e-12)


def test_start_states():
    assert equal_start(4, 6).tolist() == [2, 2, 1, 1]
    e = extreme_start(10, 20, 5)
    assert e.sum() == 20 and set(e.tolist()) == {0, 5} and (e == 5).sum() == 4
    d = max_entropy_distribution(5, 2)
    s = near_distribution_start(1000, d, 2000)
    assert s.sum() == 2000
    emp = np.bincount(s, minlength=6) / 1000
    assert np.abs(emp - d.probs).max() < 3e-3


def test_zero_rounds_and_determinism():
    params = GameParams(50, 0.9, 0.1, 0.7, 100)
    kinds = homogeneous(50, 3.5)
    t0 = run_simulation(params, kinds, 0, 7)
    assert t0.snapshot_rounds.tolist() == [0] and t0.rounds == 0
    a = run_simulation(params, kinds, 2000, 11, stride=10)
    b = run_simulation(params, kinds, 2000, 11, stride=10)
    assert np.array_equal(a.snapshot_counts, b.snapshot_counts)
    assert np.array_equal(a.utilities, b.utilities)
    assert np.array_equal(a.final_state.balances, b.final_state.balances)
    c = run_simulation(params, kinds, 2000, 12, stride=10)
    assert not np.array_equal(a.snapshot_counts, c.snapshot_counts)


def test_default_stride_and_budget():
    params = GameParams(100, 0.9, 0.1, 1.0, 200)
    t = run_simulation(params, homogeneous(100, 5), 100, 1)
    assert t.snapshot_rounds.tolist() == list(range(0, 101, 10))
    with pytest.raises(BudgetError):
        run_simulation(params, homogeneous(100, 5), 10**6 + 1, 1)


def test_money_conserved_and_balance_bound():
    params = GameParams(30, 0.9, 0.1, 0.6, 90)
    start = np.zeros(30, dtype=int)
    start[:9] = 10  # above the threshold: agents spend down
    t = run_simulation(params, homogeneous(30, 4), 3000, 5, initial_balances=start, record_balances=True)
    h = t.balance_history
    assert (h.sum(axis=1) == 90).all()
    assert (np.abs(np.diff(h, axis=0)).sum(axis=1) <= 2).all()
    # once at or below ceil(gamma) an agent never climbs above it again
    for i in range(30):
        below = np.flatnonzero(h[:, i] <= 4)
        if below.size:
            assert h[below[0]:, i].max() <= 4


def test_fig1_setup_converges():
    n = 1000
    params = GameParams(n, 0.9, 0.1, 1.0, 2000)
    ref = max_entropy_distribution(5, 2)
    start = extreme_start(n, 2000, 5)
    finals = [run_simulation(params, homogeneous(n, 5), 3000, s, initial_balances=start,
                             reference=ref).sq_distances()[-1] for s in range(1, 11)]
    assert np.mean(finals) < 0.003


def _literal_run(params, kinds, rounds, seed, start):
    state = SystemState.initial(start)
    streams = make_streams(seed)
    spent = 0
    occupancy = np.zeros(start.max() + 3)
    for _ in range(rounds):
        state, out = simulate_round(state, kinds, params, streams)
        spent += out.paid
        occupancy += np.bincount(state.balances, minlength=occupancy.size)[: occupancy.size]
    return state, spent, occupancy / occupancy.sum()


def test_engine_matches_literal_round_law():
    """The compiled engine samples counts instead of per-agent draws; its
    long-run statistics must agree with the literal round."""
    n, rounds = 6, 40000
    params = GameParams(n, 0.9, 0.1, 0.6, 9)
    kinds = homogeneous(n, 2.5)
    start = equal_start(n, 9)
    _, spent, occ_lit = _literal_run(params, kinds, rounds, 3, start)
    t = run_simulation(params, kinds, 400000, 3, initial_balances=start, record_balances=True)
    h = t.balance_history
    occ_eng = np.bincount(h.ravel(), minlength=occ_lit.size)[: occ_lit.size] / h.size
    assert 0.5 * np.abs(occ_lit - occ_eng).sum() < 0.02
    pay_lit = spent / rounds
    pay_eng = t.spends.sum() / 400000
    assert abs(pay_lit - pay_eng) < 4 * math.sqrt(pay_lit * (1 - pay_lit) / rounds) + 0.01


def test_engine_matches_literal_utilities():
    n, rounds, seeds = 4, 40, 300
    params = GameParams(n, 0.5, 0.3, 0.7, 4)
    kinds = [standard(2), standard(1.5), Altruist(0.4), standard(0)]
    start = np.array([1, 1, 1, 1])
    lit = np.array([_literal_run(params, kinds, rounds, s, start)[0].utilities for s in range(seeds)])
    eng = np.array([run_simulation(params, kinds, rounds, 10_000 + s, initial_balances=start).utilities
                    for s in range(seeds)])
    se = np.sqrt(lit.var(axis=0, ddof=1) / seeds + eng.var(axis=0, ddof=1) / seeds)
    assert (np.abs(lit.mean(axis=0) - eng.mean(axis=0)) < 4 * se + 1e-9).all()
