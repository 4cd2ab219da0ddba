"""Balance distributions: entropy, the mean-constrained maximum-entropy law,
and distances between distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import ConvergenceError, DimensionError, DomainError

SUM_TOL = 1e-12
MEAN_TOL = 1e-10

LAMBDA_BRACKET = (1e-12, 1e12)
BISECTION_ITERS = 200


@dataclass(frozen=True)
class MoneyDistribution:
    """Probability vector over balances ``0..support`` with a fixed mean."""

    probs: NDArray[np.float64]
    mean: float

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise DimensionError("probs must be a non-empty vector")
        if np.any(probs < 0):
            raise DomainError("probabilities must be non-negative")
        if abs(probs.sum() - 1.0) > SUM_TOL:
            raise DomainError(f"probabilities sum to {probs.sum()!r}, not 1")
        realized = float(np.arange(probs.size) @ probs)
        if abs(realized - self.mean) > MEAN_TOL:
            raise DomainError(f"distribution mean {realized!r} != declared {self.mean!r}")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "mean", float(self.mean))

    @property
    def support(self) -> int:
        return self.probs.size - 1

    def __getitem__(self, j: int) -> float:
        return float(self.probs[j])

    def cdf(self, j: int) -> float:
        """P(balance <= j); 0 for j < 0."""
        if j < 0:
            return 0.0
        return float(self.probs[: j + 1].sum())

    @classmethod
    def from_probs(cls, probs) -> "MoneyDistribution":
        probs = np.asarray(probs, dtype=np.float64)
        return cls(probs, float(np.arange(probs.size) @ probs))


def entropy(d: MoneyDistribution) -> float:
    """Shannon entropy in nats; zero-probability entries contribute nothing."""
    p = d.probs[d.probs > 0]
    return float(-(p * np.log(p)).sum()) + 0.0  # avoid -0.0 for point masses


def _exp_family(K: int, log_lam: float) -> NDArray[np.float64]:
    z = log_lam * np.arange(K + 1)
    w = np.exp(z - z.max())
    return w / w.sum()


def solve_lambda(K: int, m: float, tol: float = 1e-12) -> float:
    """Ratio ``lam`` of the law ``d(j) ∝ lam**j`` on ``0..K`` with mean ``m``.

    The mean is strictly increasing in ``lam``, so plain bisection on the
    bracket ``[1e-12, 1e12]`` (carried out on ``log lam``) is enough.
    Only defined for ``0 < m < K``.
    """
    if K < 1:
        raise DomainError(f"support K must be >= 1, got {K}")
    if not 0 < m < K:
        raise DomainError(f"mean must lie strictly inside (0, {K}), got {m}")
    j = np.arange(K + 1)
    lo, hi = (math.log(b) for b in LAMBDA_BRACKET)
    mid = 0.0
    err = math.inf
    for _ in range(BISECTION_ITERS):
        mid = 0.5 * (lo + hi)
        mean = float(j @ _exp_family(K, mid))
        err = mean - m
        if abs(err) < tol:
            break
        if err < 0:
            lo = mid
        else:
            hi = mid
    if abs(err) > max(tol, MEAN_TOL):
        raise ConvergenceError(f"bisection for K={K}, m={m} stalled at mean error {err:.3g}")
    return math.exp(mid)


def max_entropy_distribution(K: int, m: float, tol: float = 1e-12) -> MoneyDistribution:
    """The entropy maximizer on ``{0..K}`` subject to mean ``m``."""
    if K < 1:
        raise DomainError(f"support K must be >= 1, got {K}")
    if not 0 <= m <= K:
        raise DomainError(f"mean {m} outside [0, {K}]")
    if m == 0 or m == K:
        probs = np.zeros(K + 1)
        probs[int(m)] = 1.0
        return MoneyDistribution(probs, float(m))
    lam = solve_lambda(K, m, tol)
    probs = _exp_family(K, math.log(lam))
    # Rounding in the normalization can leave the mean a few ulps off; the
    # declared mean is the realized one.
    return MoneyDistribution(probs, float(np.arange(K + 1) @ probs))


def _check_dims(d1: MoneyDistribution, d2: MoneyDistribution) -> None:
    if d1.support != d2.support:
        raise DimensionError(f"supports differ: {d1.support} vs {d2.support}")


def squared_distance(d1: MoneyDistribution, d2: MoneyDistribution) -> float:
    """Sum of squared coordinate differences."""
    _check_dims(d1, d2)
    diff = d1.probs - d2.probs
    return float(diff @ diff)


def euclidean_distance(d1: MoneyDistribution, d2: MoneyDistribution) -> float:
    return math.sqrt(squared_distance(d1, d2))


def in_epsilon_set(d: MoneyDistribution, d_star: MoneyDistribution, epsilon: float) -> bool:
    """Membership in the concentration set: squared distance below ``epsilon``."""
    return squared_distance(d, d_star) < epsilon
