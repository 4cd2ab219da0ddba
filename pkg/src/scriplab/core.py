"""Agent-based engine for the scrip game.

Each round one agent is drawn uniformly to make a request; every other agent
is able to serve with probability ``beta``; able agents that are willing
under their strategy volunteer; one volunteer is drawn uniformly to serve.
A paying requester moves one dollar to the server.

:func:`simulate_round` executes a single round literally (every draw is
materialized, including the full ability vector) and is the reference
semantics. :func:`run_simulation` is the batch driver; it runs the compiled
loop in :mod:`scriplab._engine`, which samples the same round law from set
sizes rather than from per-agent draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from numpy.typing import NDArray

from . import _engine
from .distributions import MoneyDistribution
from .errors import BudgetError, DomainError, SupportError
from .streams import Streams, make_streams

DEFAULT_BUDGET = 10**8


@dataclass(frozen=True)
class GameParams:
    """Parameters of the game with ``n`` agents and ``money`` dollars in circulation."""

    n: int
    delta: float
    alpha: float
    beta: float
    money: int = 0

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n}")
        if not 0 < self.delta < 1:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 < self.beta <= 1:
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")
        if int(self.money) != self.money or self.money < 0:
            raise DomainError(f"money must be a non-negative integer, got {self.money}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "money", int(self.money))

    @property
    def m(self) -> float:
        """Average dollars per agent."""
        return self.money / self.n

    @property
    def round_discount(self) -> float:
        return effective_discount(self.delta, self.n)

    def replace(self, **changes) -> "GameParams":
        fields = dict(n=self.n, delta=self.delta, alpha=self.alpha, beta=self.beta, money=self.money)
        fields.update(changes)
        return GameParams(**fields)


@dataclass(frozen=True, order=True)
class ThresholdStrategy:
    """Volunteer below ``k = floor(gamma)``; at exactly ``k`` volunteer with
    probability ``gamma - k``; never above."""

    gamma: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.gamma) or self.gamma < 0:
            raise DomainError(f"gamma must be a finite non-negative real, got {self.gamma}")
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def k(self) -> int:
        return int(math.floor(self.gamma))

    @property
    def gamma_prime(self) -> float:
        return self.gamma - self.k

    @property
    def support(self) -> int:
        """Largest balance a player of this strategy can earn its way to."""
        return int(math.ceil(self.gamma))


@dataclass(frozen=True)
class Standard:
    strategy: ThresholdStrategy


@dataclass(frozen=True)
class Altruist:
    """Volunteers whenever able and gains ``alpha_prime`` per request served."""

    alpha_prime: float = 1.0

    def __post_init__(self) -> None:
        if not self.alpha_prime > 0:
            raise DomainError(f"alpha_prime must be positive, got {self.alpha_prime}")


AgentKind = Union[Standard, Altruist]


def standard(gamma: float) -> Standard:
    return Standard(ThresholdStrategy(gamma))


def homogeneous(n: int, gamma: float) -> list[AgentKind]:
    """``n`` standard agents all playing the threshold strategy ``gamma``."""
    kind = standard(gamma)
    return [kind] * n


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SystemState:
    round: int
    balances: NDArray[np.int64]
    utilities: NDArray[np.float64]

    def __post_init__(self) -> None:
        balances = _frozen(self.balances, np.int64)
        if balances.ndim != 1:
            raise DomainError("balances must be a vector")
        if np.any(balances < 0):
            raise DomainError("balances must be non-negative")
        utilities = _frozen(self.utilities, np.float64)
        if utilities.shape != balances.shape:
            raise DomainError("utilities and balances differ in length")
        object.__setattr__(self, "balances", balances)
        object.__setattr__(self, "utilities", utilities)

    @classmethod
    def initial(cls, balances) -> "SystemState":
        balances = np.asarray(balances, dtype=np.int64)
        return cls(0, balances, np.zeros(balances.size))

    @property
    def n(self) -> int:
        return self.balances.size

    @property
    def money(self) -> int:
        return int(self.balances.sum())


@dataclass(frozen=True)
class RoundOutcome:
    requester: int
    able: frozenset[int]
    volunteers: frozenset[int]
    server: int | None
    satisfied: bool
    paid: bool


def effective_discount(delta: float, n: int) -> float:
    """Per-round discount factor ``delta ** (1/n)``."""
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    return math.exp(math.log(delta) / n)


def decide_volunteer(strategy: ThresholdStrategy, balance: int, requester_balance: int, draw: float) -> bool:
    if requester_balance <= 0:
        return False
    k = strategy.k
    if balance < k:
        return True
    if balance == k:
        return draw < strategy.gamma_prime
    return False


def simulate_round(
    state: SystemState,
    kinds: Sequence[AgentKind],
    params: GameParams,
    streams: Streams,
) -> tuple[SystemState, RoundOutcome]:
    """Play one round from ``state``. Draw order: requester, ability vector,
    volunteer mixing draws, server."""
    n = state.n
    if len(kinds) != n or params.n != n:
        raise DomainError("kinds, params.n and state size disagree")
    balances = state.balances
    p = int(streams.requester.integers(0, n))
    able = streams.ability.random(n) < params.beta
    able[p] = False
    mix_draws = streams.volunteer.random(n)
    req_balance = int(balances[p])

    volunteers = []
    for i in range(n):
        if i == p or not able[i]:
            continue
        kind = kinds[i]
        if isinstance(kind, Altruist):
            willing = True
        else:
            willing = decide_volunteer(kind.strategy, int(balances[i]), req_balance, mix_draws[i])
        if willing:
            volunteers.append(i)

    new_balances = balances.copy()
    utilities = state.utilities.copy()
    server = None
    paid = False
    if volunteers:
        server = volunteers[int(streams.server.integers(0, len(volunteers)))]
        w = effective_discount(params.delta, n) ** state.round
        utilities[p] += w
        kind = kinds[server]
        utilities[server] += (kind.alpha_prime if isinstance(kind, Altruist) else -params.alpha) * w
        if req_balance > 0:
            new_balances[p] -= 1
            new_balances[server] += 1
            paid = True

    outcome = RoundOutcome(
        requester=p,
        able=frozenset(np.flatnonzero(able).tolist()),
        volunteers=frozenset(volunteers),
        server=server,
        satisfied=server is not None,
        paid=paid,
    )
    return SystemState(state.round + 1, new_balances, utilities), outcome


def empirical_distribution(state: SystemState | NDArray, support: int) -> MoneyDistribution:
    """Fraction of agents holding each balance ``0..support``."""
    balances = state.balances if isinstance(state, SystemState) else np.asarray(state)
    if balances.size and balances.max() > support:
        raise SupportError(f"balance {balances.max()} exceeds support {support}")
    counts = np.bincount(balances, minlength=support + 1)
    n = balances.size
    return MoneyDistribution(counts / n, int(balances.sum()) / n)


# -- starting states ---------------------------------------------------------


def equal_start(n: int, money: int) -> NDArray[np.int64]:
    """Spread ``money`` as evenly as possible, lower ids taking the remainder."""
    base, extra = divmod(money, n)
    b = np.full(n, base, dtype=np.int64)
    b[:extra] += 1
    return b


def extreme_start(n: int, money: int, high: int) -> NDArray[np.int64]:
    """Every agent at 0 or ``high``; requires ``money`` divisible by ``high``."""
    if high < 1 or money % high or money // high > n:
        raise DomainError(f"cannot place {money} dollars as lumps of {high} over {n} agents")
    b = np.zeros(n, dtype=np.int64)
    b[n - money // high:] = high
    return b


def near_distribution_start(n: int, d: MoneyDistribution, money: int) -> NDArray[np.int64]:
    """A state whose balance histogram is as close to ``n * d`` as integer
    counts allow while holding exactly ``money`` dollars."""
    K = d.support
    if not 0 <= money <= K * n:
        raise DomainError(f"{money} dollars do not fit on support {K} with {n} agents")
    target = n * d.probs
    counts = np.floor(target).astype(np.int64)
    order = np.argsort(-(target - counts), kind="stable")
    for j in order[: n - counts.sum()]:
        counts[j] += 1
    levels = np.arange(K + 1)
    gap = money - int(levels @ counts)
    # move single agents one level at a time, choosing the move that keeps
    # the histogram closest to target
    while gap != 0:
        step = 1 if gap > 0 else -1
        best = None
        for j in range(K + 1):
            dst = j + step
            if counts[j] == 0 or not 0 <= dst <= K:
                continue
            cost = (counts[j] - 1 - target[j]) ** 2 - (counts[j] - target[j]) ** 2
            cost += (counts[dst] + 1 - target[dst]) ** 2 - (counts[dst] - target[dst]) ** 2
            if best is None or cost < best[0]:
                best = (cost, j, dst)
        _, j, dst = best
        counts[j] -= 1
        counts[dst] += 1
        gap -= step
    return np.repeat(levels, counts).astype(np.int64)


# -- batch driver -------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    """Result of :func:`run_simulation`.

    ``snapshot_counts[i, j]`` is the number of agents holding ``j`` dollars
    after ``snapshot_rounds[i]`` rounds; the final column counts agents above
    ``support``.
    """

    params: GameParams
    seed: int
    support: int
    snapshot_rounds: NDArray[np.int64]
    snapshot_counts: NDArray[np.int64]
    final_state: SystemState
    spends: NDArray[np.int64]
    earns: NDArray[np.int64]
    classes: tuple
    class_of: NDArray[np.int64]
    exposure_solvent: NDArray[np.float64]
    exposure_sure: NDArray[np.float64]
    exposure_mix: NDArray[np.float64]
    reference: MoneyDistribution | None = None
    max_sq_distance: float | None = None
    first_hit_round: int | None = None
    balance_history: NDArray[np.int64] | None = field(default=None, repr=False)

    @property
    def utilities(self) -> NDArray[np.float64]:
        return self.final_state.utilities

    @property
    def rounds(self) -> int:
        return self.final_state.round

    def distribution(self, i: int) -> MoneyDistribution:
        counts = self.snapshot_counts[i]
        if counts[-1]:
            raise SupportError(f"{counts[-1]} agents above support {self.support} at snapshot {i}")
        n = self.params.n
        return MoneyDistribution(counts[:-1] / n, self.params.money / n)

    def sq_distances(self, reference: MoneyDistribution | None = None) -> NDArray[np.float64]:
        """Squared distance of every snapshot histogram to ``reference``."""
        ref = reference if reference is not None else self.reference
        if ref is None:
            raise ValueError("no reference distribution")
        n = self.params.n
        width = max(self.support + 1, ref.support + 1)
        emp = np.zeros((self.snapshot_counts.shape[0], width))
        emp[:, : self.support + 1] = self.snapshot_counts[:, :-1] / n
        if np.any(self.snapshot_counts[:, -1]):
            raise SupportError("snapshots have mass above the recorded support")
        r = np.zeros(width)
        r[: ref.support + 1] = ref.probs
        return ((emp - r) ** 2).sum(axis=1)


def _kind_classes(kinds: Sequence[AgentKind]) -> tuple[tuple, np.ndarray]:
    index: dict = {}
    cls = np.empty(len(kinds), dtype=np.int64)
    for i, kind in enumerate(kinds):
        cls[i] = index.setdefault(kind, len(index))
    return tuple(index), cls


def run_simulation(
    params: GameParams,
    kinds: Sequence[AgentKind],
    rounds: int,
    seed: int,
    *,
    initial_balances=None,
    stride: int | None = None,
    support: int | None = None,
    reference: MoneyDistribution | None = None,
    hit_threshold: float = 0.0,
    stop_on_hit: bool = False,
    record_balances: bool = False,
    budget: float = DEFAULT_BUDGET,
) -> Trajectory:
    """Run ``rounds`` rounds from ``initial_balances`` (even split by default).

    With a ``reference`` distribution the squared distance of the live
    histogram to it is tracked every round: its maximum is reported, and the
    first round at which it drops below ``hit_threshold`` (optionally ending
    the run there).
    """
    n = params.n
    if len(kinds) != n:
        raise DomainError(f"{len(kinds)} kinds for {n} agents")
    if rounds < 0:
        raise DomainError("rounds must be non-negative")
    if rounds * n > budget:
        raise BudgetError(f"{rounds} rounds x {n} agents exceeds budget {budget:.3g}")
    if initial_balances is None:
        balances = equal_start(n, params.money)
    else:
        balances = np.array(initial_balances, dtype=np.int64)
        if balances.shape != (n,) or np.any(balances < 0):
            raise DomainError("initial balances must be n non-negative integers")
        if int(balances.sum()) != params.money:
            raise DomainError(f"initial balances hold {balances.sum()} dollars, params say {params.money}")
    if record_balances and rounds * n > 10**7:
        raise BudgetError("balance history is limited to 1e7 entries")
    stride = max(1, n // 10) if stride is None else int(stride)
    if stride < 1:
        raise DomainError("stride must be >= 1")

    classes, cls = _kind_classes(kinds)
    thr_k = np.zeros(len(classes), dtype=np.int64)
    thr_frac = np.zeros(len(classes))
    altruist = np.zeros(len(classes), dtype=np.bool_)
    alt_gain = np.zeros(len(classes))
    for c, kind in enumerate(classes):
        if isinstance(kind, Altruist):
            altruist[c] = True
            alt_gain[c] = kind.alpha_prime
        else:
            thr_k[c] = kind.strategy.k
            thr_frac[c] = kind.strategy.gamma_prime
    if support is None:
        support = max(int(balances.max(initial=0)),
                      max((k.strategy.support for k in classes if isinstance(k, Standard)), default=0))
    ref = np.zeros(0) if reference is None else np.ascontiguousarray(reference.probs, dtype=np.float64)

    st = make_streams(seed)
    work = balances.copy()
    (done, util, snap_rounds, snap_counts, max_sqd, first_hit,
     spends, earns, exp_solvent, exp_sure, exp_mix, history) = _engine.run_rounds(
        work, cls, thr_k, thr_frac, altruist, alt_gain,
        float(params.alpha), float(params.beta), math.log(params.delta) / n,
        0, int(rounds), stride, int(support), ref, float(hit_threshold),
        bool(stop_on_hit), bool(record_balances),
        st.requester, st.ability, st.volunteer, st.server,
    )
    if int(work.sum()) != params.money:
        raise AssertionError("money not conserved")  # engine invariant
    return Trajectory(
        params=params,
        seed=seed,
        support=int(support),
        snapshot_rounds=snap_rounds,
        snapshot_counts=snap_counts,
        final_state=SystemState(done, work, util),
        spends=spends,
        earns=earns,
        classes=classes,
        class_of=cls,
        exposure_solvent=exp_solvent,
        exposure_sure=exp_sure,
        exposure_mix=exp_mix,
        reference=reference,
        max_sq_distance=None if reference is None else float(max_sqd),
        first_hit_round=None if reference is None or first_hit < 0 else int(first_hit),
        balance_history=history if record_balances else None,
    )
