"""Independent reference computations used to pin and cross-check values.

None of these import the package under test.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def _entropy(p: np.ndarray) -> float:
    q = p[p > 0]
    return float(-(q * np.log(q)).sum())


def _feasible_start(K: int, m: float) -> np.ndarray:
    p = np.zeros(K + 1)
    lo = math.floor(m)
    if lo >= K:
        p[K] = 1.0
        return p
    p[lo] = lo + 1 - m
    p[lo + 1] = m - lo
    return p


def brute_force_maxent(K: int, m: float, step: float = 1e-3, final_step: float = 1e-6) -> np.ndarray:
    """Entropy maximizer on ``{0..K}`` with mean ``m`` by pattern search.

    Moves shift mass between three levels ``a < b < c`` along the direction
    that keeps both total mass and mean fixed, so every iterate stays on the
    constraint set. The step halves whenever no move improves entropy.
    """
    p = _feasible_start(K, m)
    if K < 2:
        return p
    dirs = []
    for a, b, c in itertools.combinations(range(K + 1), 3):
        v = np.zeros(K + 1)
        v[a], v[b], v[c] = c - b, -(c - a), b - a
        v /= np.abs(v).max()
        dirs += [v, -v]
    h = _entropy(p)
    s = step
    while s >= final_step:
        improved = True
        while improved:
            improved = False
            for v in dirs:
                q = p + s * v
                if q.min() < 0:
                    continue
                hq = _entropy(q)
                if hq > h + 1e-15:
                    p, h, improved = q, hq, True
        s /= 2
    return p


def mdp_policy_values(spend: float, earn: float, disc: float, alpha: float, policy) -> np.ndarray:
    """Exact values of a fixed volunteering policy by a dense linear solve."""
    B = len(policy) - 1
    P = np.zeros((B + 1, B + 1))
    r = np.zeros(B + 1)
    for b in range(B + 1):
        s = spend if b > 0 else 0.0
        e = earn if policy[b] else 0.0
        if b > 0:
            P[b, b - 1] += s
            r[b] += s
        P[b, min(b + 1, B)] += e
        r[b] -= alpha * e
        P[b, b] += 1 - s - e
    return np.linalg.solve(np.eye(B + 1) - disc * P, r)


def mdp_optimal_values(spend: float, earn: float, disc: float, alpha: float, bmax: int) -> np.ndarray:
    """Optimal values as the pointwise max over every deterministic policy."""
    best = None
    for pol in itertools.product([False, True], repeat=bmax + 1):
        v = mdp_policy_values(spend, earn, disc, alpha, pol)
        best = v if best is None else np.maximum(best, v)
    return best


def count_bounded_vectors(k: int, n: int, M: int) -> int:
    return sum(1 for s in itertools.product(range(k + 1), repeat=n) if sum(s) == M)
