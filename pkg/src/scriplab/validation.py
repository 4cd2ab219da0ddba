"""Simulation checks of the analytic layer: mean-field rates against
simulated frequencies, altruist dominance, and unilateral deviations from an
equilibrium threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .best_response import mean_field_model
from .core import (
    Altruist,
    GameParams,
    ThresholdStrategy,
    equal_start,
    homogeneous,
    near_distribution_start,
    run_simulation,
    standard,
)
from .distributions import max_entropy_distribution


@dataclass(frozen=True)
class RateComparison:
    model_spend: float
    model_earn: float
    sim_spend: float
    sim_earn: float

    @property
    def spend_error(self) -> float:
        return abs(self.sim_spend - self.model_spend) / self.model_spend

    @property
    def earn_error(self) -> float:
        return abs(self.sim_earn - self.model_earn) / self.model_earn

    def within(self, rel: float) -> bool:
        return self.spend_error <= rel and self.earn_error <= rel


VALIDATION_BUDGET = 10**9


def mean_field_rates(params: GameParams, gamma: float, rounds: int, seed: int,
                     budget: float = VALIDATION_BUDGET) -> RateComparison:
    """Per-round spend probability (agents holding money) and earn probability
    (agents willing to serve) from the mean-field model and from a run that
    starts at the max-entropy law.

    A mixing agent at its threshold counts as willing with its mixing weight.
    """
    g = ThresholdStrategy(gamma)
    d_star = max_entropy_distribution(g.support, params.m)
    model = mean_field_model(d_star, g, params)
    start = near_distribution_start(params.n, d_star, params.money)
    traj = run_simulation(params, homogeneous(params.n, gamma), rounds, seed,
                          initial_balances=start, stride=rounds, budget=budget)
    solvent = traj.exposure_solvent.sum()
    willing = traj.exposure_sure.sum() + g.gamma_prime * traj.exposure_mix.sum()
    return RateComparison(
        model.spend_prob,
        model.earn_prob,
        traj.spends.sum() / solvent,
        traj.earns.sum() / willing,
    )


@dataclass(frozen=True)
class PairedComparison:
    """Per-seed utility differences ``candidate - baseline`` for one agent."""

    label: str
    diffs: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.diffs.mean())

    @property
    def stderr(self) -> float:
        return float(self.diffs.std(ddof=1) / math.sqrt(self.diffs.size))

    def not_better(self, z: float = 2.0) -> bool:
        """Candidate does not beat the baseline by more than ``z`` standard errors."""
        return self.mean <= z * self.stderr


def _paired_utilities(params, kinds, focal, variants, rounds, seeds, start, budget=VALIDATION_BUDGET):
    out = np.zeros((len(variants), len(seeds)))
    for v, kind in enumerate(variants):
        ks = list(kinds)
        ks[focal] = kind
        for s, seed in enumerate(seeds):
            traj = run_simulation(params, ks, rounds, seed, initial_balances=start,
                                  stride=rounds, budget=budget)
            out[v, s] = traj.utilities[focal]
    return out


def altruist_dominance(params: GameParams, altruists: int, population_gamma: float,
                       test_thresholds: Sequence[int], rounds: int, seeds: Sequence[int],
                       alpha_prime: float = 1.0) -> list[PairedComparison]:
    """Compare a never-volunteering agent with the same agent playing ``S_k``.

    Agents ``0..altruists-1`` are altruists, the focal agent is the last one,
    and everyone else plays ``population_gamma``. Each comparison reports
    ``U(S_k) - U(S_0)`` over paired seeds.
    """
    n = params.n
    kinds = [Altruist(alpha_prime)] * altruists + [standard(population_gamma)] * (n - altruists)
    focal = n - 1
    variants = [standard(0)] + [standard(k) for k in test_thresholds]
    start = equal_start(n, params.money)
    u = _paired_utilities(params, kinds, focal, variants, rounds, seeds, start)
    return [PairedComparison(f"S_{k} vs S_0", u[i + 1] - u[0]) for i, k in enumerate(test_thresholds)]


def deviation_check(params: GameParams, gamma_star: float, deviations: Sequence[float],
                    rounds: int, seeds: Sequence[int]) -> list[PairedComparison]:
    """Utility of one agent deviating to each of ``deviations`` while everyone
    else plays ``gamma_star``, minus its utility when it conforms."""
    n = params.n
    g = ThresholdStrategy(gamma_star)
    d_star = max_entropy_distribution(max(g.support, 1), params.m)
    start = near_distribution_start(n, d_star, params.money)
    kinds = homogeneous(n, gamma_star)
    variants = [standard(gamma_star)] + [standard(d) for d in deviations]
    u = _paired_utilities(params, kinds, 0, variants, rounds, seeds, start)
    return [PairedComparison(f"{d:g} vs {gamma_star:g}", u[i + 1] - u[0]) for i, d in enumerate(deviations)]


def discount_horizon(params: GameParams, weight: float = 1e-6) -> int:
    """Rounds after which the per-round discount weight falls below ``weight``."""
    return math.ceil(params.n * math.log(weight) / math.log(params.delta))
