"""Single-agent best response against a population in steady state.

When everyone else plays ``S_gamma`` and balances follow the max-entropy
law, one agent's balance evolves as a birth-death chain whose rates depend
only on its own volunteer decisions. :func:`mean_field_model` derives those
rates, :func:`solve_mdp` computes the optimal volunteering policy, and
:func:`extract_threshold` reads off the best-response threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solve_banded

from .core import GameParams, ThresholdStrategy, effective_discount
from .distributions import MoneyDistribution, max_entropy_distribution
from .errors import ConvergenceError, DegenerateModelError, DomainError, StructuralError

INDIFFERENCE_TOL = 1e-9


@dataclass(frozen=True)
class MeanFieldModel:
    """Per-round event probabilities faced by one agent.

    ``spend_prob`` applies only when the agent holds at least one dollar;
    ``earn_prob`` applies only in rounds where the agent is willing.
    """

    paying_fraction: float
    willing_fraction: float
    expected_willing: float
    satisfy_prob: float
    selection_prob: float
    spend_prob: float
    earn_prob: float
    round_discount: float
    n: int
    beta: float

    def flow_imbalance(self) -> float:
        """Expected dollars spent minus dollars earned per round, population-wide,
        with every agent following the population strategy."""
        spent = self.n * self.paying_fraction * self.spend_prob
        earned = self.n * self.willing_fraction * self.earn_prob
        return spent - earned


def willing_fraction(d_star: MoneyDistribution, gamma: ThresholdStrategy) -> float:
    k, frac = gamma.k, gamma.gamma_prime
    w = d_star.cdf(k - 1)
    if frac and k <= d_star.support:
        w += frac * d_star[k]
    return w


def mean_field_model(d_star: MoneyDistribution | None, gamma: ThresholdStrategy, params: GameParams) -> MeanFieldModel:
    n, beta = params.n, params.beta
    disc = effective_discount(params.delta, n)
    if gamma.gamma == 0:
        rho = 1.0 - d_star[0] if d_star is not None else 0.0
        return MeanFieldModel(rho, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, disc, n, beta)
    if d_star is None:
        raise DomainError("a steady-state distribution is required for gamma > 0")
    rho = 1.0 - d_star[0]
    w = willing_fraction(d_star, gamma)
    if w <= 0:
        raise DegenerateModelError(f"no agent is willing under gamma={gamma.gamma} at mean {d_star.mean}")
    expected = (n - 1) * w
    q = 1.0 - (1.0 - beta) ** expected
    wc = max(1.0, expected)
    chi = (1.0 - (1.0 - beta) ** wc) / (wc * beta)
    return MeanFieldModel(
        paying_fraction=rho,
        willing_fraction=w,
        expected_willing=expected,
        satisfy_prob=q,
        selection_prob=chi,
        spend_prob=q / n,
        earn_prob=(n - 1) / n * rho * beta * chi,
        round_discount=disc,
        n=n,
        beta=beta,
    )


@dataclass(frozen=True)
class ValueFunction:
    values: NDArray[np.float64]
    policy: NDArray[np.bool_]
    gaps: NDArray[np.float64]
    earn_prob: float
    iterations: int

    @property
    def bmax(self) -> int:
        return self.values.size - 1


@dataclass(frozen=True)
class BestResponseResult:
    """Best-response threshold ``threshold``; with ``interval`` set, every
    ``S_g`` for ``g`` in ``[threshold, threshold + 1]`` is a best response."""

    threshold: int
    interval: bool = False
    saturated: bool = False

    @property
    def upper(self) -> int:
        return self.threshold + 1 if self.interval else self.threshold

    def contains(self, gamma: float, tol: float = 0.0) -> bool:
        return self.threshold - tol <= gamma <= self.upper + tol

    def __str__(self) -> str:
        if self.interval:
            return f"[{self.threshold}, {self.threshold + 1}]"
        return f"{self.threshold}{'*' if self.saturated else ''}"


def _gaps(values, spend, earn, disc, alpha):
    nxt = np.append(values[1:], values[-1])
    return earn * (-alpha + disc * (nxt - values))


@numba.njit(cache=True)
def _value_iteration(spend, earn, disc, alpha, bmax, tol, max_iter):
    # Uniformized Bellman operator: same fixed point and argmax as the per-round
    # one, but the contraction modulus is disc*c/(1-disc+disc*c) instead of disc.
    c = spend + earn
    scale = 1.0 - disc + disc * c
    modulus = disc * c / scale
    stop = tol * (1.0 - modulus)
    v = np.zeros(bmax + 1)
    nv = np.zeros(bmax + 1)
    for it in range(max_iter):
        diff = 0.0
        for b in range(bmax + 1):
            s = spend if b > 0 else 0.0
            base = (c - s) * disc * v[b]
            if b > 0:
                base += s * (1.0 + disc * v[b - 1])
            up = v[b + 1] if b < bmax else v[b]
            gain = earn * (-alpha + disc * (up - v[b]))
            best = base + gain if gain > 0.0 else base
            nv[b] = best / scale
            if abs(nv[b] - v[b]) > diff:
                diff = abs(nv[b] - v[b])
        for b in range(bmax + 1):
            v[b] = nv[b]
        if diff < stop:
            return v, it + 1
    return v, -1


def _evaluate_policy(spend, earn, disc, alpha, policy):
    bmax = policy.size - 1
    s = np.full(bmax + 1, spend)
    s[0] = 0.0
    e = np.where(policy, earn, 0.0)
    diag = 1.0 - disc * (1.0 - s - e)
    upper = -disc * e[:-1]
    diag[-1] -= disc * e[-1]  # volunteering at the cap leaves the balance unchanged
    lower = -disc * s[1:]
    ab = np.zeros((3, bmax + 1))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, s - alpha * e)


def solve_mdp(model: MeanFieldModel, alpha: float, bmax: int, tol: float = 1e-10,
              method: str = "value", max_iter: int = 10**7) -> ValueFunction:
    """Optimal volunteering policy over balances ``0..bmax``.

    ``method="value"`` runs value iteration until the sup-norm change
    guarantees error below ``tol``; ``method="policy"`` runs Howard policy
    iteration with exact tridiagonal evaluation. Volunteering at ``bmax``
    earns nothing further, so the policy never volunteers there.
    """
    if not model.round_discount < 1:
        raise DomainError("round discount must be < 1")
    if bmax < 1:
        raise DomainError("bmax must be >= 1")
    spend, earn, disc = model.spend_prob, model.earn_prob, model.round_discount
    if method == "value":
        if spend + earn == 0.0:
            values, iters = np.zeros(bmax + 1), 1
        else:
            values, iters = _value_iteration(spend, earn, disc, alpha, bmax, tol, max_iter)
            if iters < 0:
                raise ConvergenceError(f"value iteration did not converge in {max_iter} sweeps")
    elif method == "policy":
        # switch an action only on a gain above round-off so near-ties cannot cycle
        policy = np.zeros(bmax + 1, dtype=bool)
        for iters in range(1, 200):
            values = _evaluate_policy(spend, earn, disc, alpha, policy)
            gaps = _gaps(values, spend, earn, disc, alpha)
            floor = 1e-10 * earn * max(1.0, float(np.abs(values).max()))
            improved = np.where(policy, gaps >= -floor, gaps > floor)
            if np.array_equal(improved, policy):
                break
            policy = improved
        else:
            raise ConvergenceError("policy iteration cycled")
    else:
        raise ValueError(f"unknown method {method!r}")
    gaps = _gaps(values, spend, earn, disc, alpha)
    return ValueFunction(values, gaps > 0, gaps, earn, iters)


def extract_threshold(vf: ValueFunction, indifference_tol: float = INDIFFERENCE_TOL) -> BestResponseResult:
    policy = vf.policy
    stop = int(np.argmin(policy)) if not policy.all() else policy.size
    if policy[stop:].any():
        raise StructuralError(f"policy is not a threshold policy: {policy.astype(int).tolist()}")
    saturated = stop >= vf.bmax
    if vf.earn_prob > 0:
        if stop >= 1 and abs(vf.gaps[stop - 1]) < indifference_tol:
            return BestResponseResult(stop - 1, interval=True)
        if stop < vf.bmax and abs(vf.gaps[stop]) < indifference_tol:
            return BestResponseResult(stop, interval=True)
    return BestResponseResult(stop, saturated=saturated)


def mdp_cap(gamma: float, m: float) -> int:
    return max(math.ceil(gamma) + 2, math.ceil(m) + 2)


def best_response_model(delta: float, gamma: ThresholdStrategy | float, m: float, params: GameParams):
    """The mean-field model behind :func:`best_response`, or ``None`` when no
    one else ever volunteers (``gamma = 0`` or ``m >= ceil(gamma)``)."""
    gamma = gamma if isinstance(gamma, ThresholdStrategy) else ThresholdStrategy(gamma)
    p = params.replace(delta=delta)
    support = gamma.support
    if gamma.gamma == 0 or m >= support:
        return None
    if m < 0:
        raise DomainError(f"mean money must be non-negative, got {m}")
    d_star = max_entropy_distribution(support, m)
    return mean_field_model(d_star, gamma, p)


def best_response(delta: float, gamma: ThresholdStrategy | float, m: float, params: GameParams, *,
                  method: str = "policy", indifference_tol: float = INDIFFERENCE_TOL,
                  tol: float = 1e-10) -> BestResponseResult:
    """Best-response threshold of one agent when all others play ``gamma``
    and average money is ``m``.

    If ``m >= ceil(gamma)`` every other agent is at or above its threshold,
    nobody ever volunteers, and holding money is worthless: the answer is 0.
    """
    gamma = gamma if isinstance(gamma, ThresholdStrategy) else ThresholdStrategy(gamma)
    model = best_response_model(delta, gamma, m, params)
    if model is None:
        return BestResponseResult(0)
    vf = solve_mdp(model, params.alpha, mdp_cap(gamma.gamma, m), tol=tol, method=method)
    return extract_threshold(vf, indifference_tol)


def boundary_gap(delta: float, gamma: float, m: float, params: GameParams, balance: int,
                 method: str = "policy") -> float:
    """Action-value gap (volunteer minus abstain) at ``balance`` against ``S_gamma``."""
    g = ThresholdStrategy(gamma)
    model = best_response_model(delta, g, m, params)
    if model is None:
        return -math.inf
    vf = solve_mdp(model, params.alpha, mdp_cap(gamma, m), method=method)
    return float(vf.gaps[balance])
