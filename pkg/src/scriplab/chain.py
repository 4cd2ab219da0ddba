"""Exact Markov chain of balance vectors when every agent plays the same
integer threshold ``k``, for instances small enough to enumerate."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np
import scipy.sparse as sp

from .distributions import max_entropy_distribution
from .errors import BudgetError, ConvergenceError, DomainError, ReducibleChainError

DEFAULT_BUDGET = 10**6
EXACT_LIMIT = 10**4

Prob = Union[Fraction, float]


def bounded_composition_count(k: int, n: int, M: int) -> int:
    """Number of vectors in ``{0..k}^n`` summing to ``M`` (inclusion-exclusion)."""
    if M < 0 or M > k * n:
        return 0
    total = 0
    for i in range(n + 1):
        rest = M - i * (k + 1)
        if rest < 0:
            break
        total += (-1) ** i * math.comb(n, i) * math.comb(rest + n - 1, n - 1)
    return total


@dataclass(frozen=True)
class ChainStateSpace:
    k: int
    n: int
    M: int
    states: tuple[tuple[int, ...], ...]
    index: dict = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.states)


def enumerate_states(k: int, n: int, M: int, budget: int = DEFAULT_BUDGET) -> ChainStateSpace:
    """All balance vectors with entries in ``0..k`` and total ``M``, in
    decreasing lexicographic order."""
    if k < 0 or n < 1 or M < 0:
        raise DomainError("need k >= 0, n >= 1, M >= 0")
    if M > k * n:
        raise DomainError(f"M={M} exceeds k*n={k * n}")
    count = bounded_composition_count(k, n, M)
    if count > budget:
        raise BudgetError(f"{count} states exceed enumeration budget {budget}")

    states: list[tuple[int, ...]] = []
    prefix: list[int] = []

    def fill(remaining: int, slots: int) -> None:
        if slots == 0:
            if remaining == 0:
                states.append(tuple(prefix))
            return
        for v in range(min(k, remaining), -1, -1):
            if remaining - v > k * (slots - 1):
                break
            prefix.append(v)
            fill(remaining - v, slots - 1)
            prefix.pop()

    fill(M, n)
    return ChainStateSpace(k, n, M, tuple(states), {s: i for i, s in enumerate(states)})


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-sparse transition matrix; ``rows[i][j]`` is P(state i -> state j)."""

    space: ChainStateSpace
    rows: tuple[dict, ...]
    exact: bool

    def entry(self, i: int, j: int) -> Prob:
        return self.rows[i].get(j, Fraction(0) if self.exact else 0.0)

    def row_sums(self) -> list[Prob]:
        return [sum(r.values(), Fraction(0) if self.exact else 0.0) for r in self.rows]

    def to_sparse(self) -> sp.csr_matrix:
        size = len(self.rows)
        data, ri, ci = [], [], []
        for i, row in enumerate(self.rows):
            for j, p in row.items():
                ri.append(i)
                ci.append(j)
                data.append(float(p))
        return sp.csr_matrix((data, (ri, ci)), shape=(size, size))

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()


def transition_matrix(space: ChainStateSpace, beta, exact: bool | None = None) -> TransitionMatrix:
    """Transition law under common threshold ``space.k``.

    From ``s``, requester ``j`` (solvent) pays volunteer ``i`` with
    probability ``(1/n) (1 - (1-beta)^W) / W`` where ``W`` counts agents
    below ``k`` other than ``j``. Everything else (insolvent requester, no
    volunteer, nobody able) stays on the diagonal.
    """
    if exact is None:
        exact = len(space) < EXACT_LIMIT
    if exact:
        b = Fraction(beta) if not isinstance(beta, Fraction) else beta
        one = Fraction(1)
        inv_n = Fraction(1, space.n)
    else:
        b = float(beta)
        one = 1.0
        inv_n = 1.0 / space.n
    if not 0 < b <= 1:
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    k, n = space.k, space.n
    rows = []
    for idx, s in enumerate(space.states):
        row: dict = {}
        below = [i for i in range(n) if s[i] != k]
        moved = 0 * one
        for j in range(n):
            if s[j] == 0:
                continue
            w = len(below) - (1 if s[j] < k else 0)
            if w == 0:
                continue
            p = inv_n * (one - (one - b) ** w) / w
            for i in below:
                if i == j:
                    continue
                t = list(s)
                t[i] += 1
                t[j] -= 1
                col = space.index[tuple(t)]
                row[col] = row.get(col, 0 * one) + p
                moved += p
        stay = one - moved
        if stay:
            row[idx] = row.get(idx, 0 * one) + stay
        rows.append(row)
    return TransitionMatrix(space, tuple(rows), exact)


def verify_symmetry(P: TransitionMatrix) -> Prob:
    """Largest ``|P_ij - P_ji|`` over off-diagonal pairs."""
    worst = Fraction(0) if P.exact else 0.0
    for i, row in enumerate(P.rows):
        for j, p in row.items():
            if i == j:
                continue
            gap = abs(p - P.entry(j, i))
            if gap > worst:
                worst = gap
    return worst


def _reachable(adj: list[list[int]], start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def is_irreducible(P: TransitionMatrix) -> bool:
    size = len(P.rows)
    fwd = [[j for j, p in row.items() if p and j != i] for i, row in enumerate(P.rows)]
    rev: list[list[int]] = [[] for _ in range(size)]
    for i, outs in enumerate(fwd):
        for j in outs:
            rev[j].append(i)
    return len(_reachable(fwd, 0)) == size and len(_reachable(rev, 0)) == size


def stationary_distribution(P: TransitionMatrix, tol: float = 1e-13, max_iter: int = 10**6) -> np.ndarray:
    """Power iteration from a point mass on the first state."""
    if not is_irreducible(P):
        raise ReducibleChainError("chain is not irreducible; stationary law not unique")
    A = P.to_sparse().T.tocsr()
    if not any(P.entry(i, i) for i in range(len(P.rows))):
        A = 0.5 * (A + sp.identity(A.shape[0], format="csr"))  # lazy chain, same fixed point
    pi = np.zeros(A.shape[0])
    pi[0] = 1.0
    for _ in range(max_iter):
        nxt = A @ pi
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() < tol:
            return nxt
        pi = nxt
    raise ConvergenceError(f"power iteration did not reach {tol} in {max_iter} steps")


def _occupancy_vectors(k: int, n: int, M: int):
    """Histograms ``c`` over levels ``0..k`` with ``sum c = n`` and ``sum j c_j = M``."""
    c = [0] * (k + 1)

    def rec(level: int, agents: int, money: int):
        if level == 0:
            if money == 0:
                c[0] = agents
                yield tuple(c)
            return
        for cnt in range(min(agents, money // level), -1, -1):
            c[level] = cnt
            yield from rec(level - 1, agents - cnt, money - cnt * level)
        c[level] = 0

    yield from rec(k, n, M)


def concentration_fraction(k: int, n: int, m, epsilon: float, budget: int = DEFAULT_BUDGET) -> float:
    """Exact share of states whose balance histogram has squared distance
    ``>= epsilon`` from the maximum-entropy law on ``0..k`` with mean ``m``.

    States are grouped by histogram and weighted by multinomial counts, so the
    work is over histograms rather than states.
    """
    M = Fraction(m) * n
    if M.denominator != 1:
        raise DomainError(f"m*n = {M} is not an integer")
    M = int(M)
    if not 0 <= M <= k * n:
        raise DomainError(f"total money {M} outside [0, {k * n}]")
    d_star = max_entropy_distribution(k, M / n).probs
    total = 0
    outside = 0
    n_hist = 0
    fact_n = math.factorial(n)
    for c in _occupancy_vectors(k, n, M):
        n_hist += 1
        if n_hist > budget:
            raise BudgetError(f"more than {budget} histograms")
        weight = fact_n
        for cj in c:
            weight //= math.factorial(cj)
        total += weight
        diff = np.asarray(c) / n - d_star
        if float(diff @ diff) >= epsilon:
            outside += weight
    return float(Fraction(outside, total))
