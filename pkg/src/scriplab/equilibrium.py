"""Threshold equilibria: best-response curves, their fixed points, efficiency,
the efficiency-maximizing money supply, and the altruist bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .best_response import (
    BestResponseResult,
    best_response,
    best_response_model,
    mdp_cap,
    solve_mdp,
    willing_fraction,
)
from .core import GameParams, ThresholdStrategy
from .distributions import max_entropy_distribution
from .errors import DomainError

MIXED_GRID = 16
ROOT_XTOL = 1e-13


@dataclass(frozen=True)
class BrCurve:
    """Best responses sampled at every integer ``gamma`` in ``0..gamma_max``."""

    delta: float
    m: float
    params: GameParams | None
    samples: tuple[tuple[int, BestResponseResult], ...]

    @property
    def gamma_max(self) -> int:
        return self.samples[-1][0]

    def responses(self) -> list[BestResponseResult]:
        return [r for _, r in self.samples]

    def thresholds(self) -> list[int]:
        return [r.threshold for _, r in self.samples]

    def __getitem__(self, gamma: int) -> BestResponseResult:
        return self.samples[gamma][1]


def money_cap(m: float, params: GameParams) -> int:
    """Thresholds above the total money supply all behave alike."""
    return params.money if params.money > 0 else math.ceil(m * params.n)


def default_gamma_max(delta: float, m: float, params: GameParams) -> int:
    """Smallest sampling range that covers every fixed point.

    For large ``gamma`` the best response settles to a limit; probing with
    doubling ``gamma`` until the response falls below the diagonal bounds it.
    """
    cap = money_cap(m, params)
    base = math.ceil(m) + 4
    g = base
    while True:
        b = best_response(delta, g, m, params).upper
        if b < g - 1 or g >= cap:
            break
        g = min(2 * g, cap)
    return max(1, min(cap, max(base, b + 2)))


def best_response_curve(delta: float, m: float, params: GameParams, gamma_max: int | None = None) -> BrCurve:
    if gamma_max is None:
        gamma_max = default_gamma_max(delta, m, params)
    cap = money_cap(m, params)
    samples = []
    for g in range(gamma_max + 1):
        r = best_response(delta, g, m, params)
        if r.upper > cap:
            # thresholds above the money supply act like the money supply
            r = BestResponseResult(cap, saturated=True)
        samples.append((g, r))
    return BrCurve(delta, m, params, tuple(samples))


def _gap_at(delta: float, gamma: float, m: float, params: GameParams, balance: int) -> float:
    model = best_response_model(delta, gamma, m, params)
    if model is None:
        return -math.inf
    vf = solve_mdp(model, params.alpha, mdp_cap(gamma, m), method="policy")
    return float(vf.gaps[balance])


@dataclass(frozen=True)
class FixedPointSearch:
    """Verified fixed points plus sign changes of the indifference gap that
    did not survive re-verification (typically a jump at an integer)."""

    fixed_points: tuple[float, ...]
    unverified: tuple[float, ...] = ()


def _mixed_roots(curve: BrCurve, k: int) -> tuple[list[float], list[float]]:
    """Mixed fixed points with ``k < gamma < k + 1``: the population mixes at
    balance ``k`` and the agent is exactly indifferent there."""
    delta, m, params = curve.delta, curve.m, curve.params
    xs = np.linspace(k, k + 1, MIXED_GRID + 1)[1:-1]
    gaps = [_gap_at(delta, x, m, params, k) for x in xs]
    found, rejected = [], []

    def f(x):
        return _gap_at(delta, x, m, params, k)

    # also bracket against the open interval ends
    pts = [(k + 1e-12, f(k + 1e-12))] + list(zip(xs, gaps)) + [(k + 1 - 1e-12, f(k + 1 - 1e-12))]
    for (x0, g0), (x1, g1) in zip(pts, pts[1:]):
        if not (math.isfinite(g0) and math.isfinite(g1)):
            continue
        if g0 == 0.0:
            root = x0
        elif g0 * g1 < 0:
            root = brentq(f, x0, x1, xtol=ROOT_XTOL)
        else:
            continue
        br = best_response(delta, root, m, params)
        (found if br.contains(root, 1e-9) else rejected).append(float(root))
    return found, rejected


def search_fixed_points(curve: BrCurve) -> FixedPointSearch:
    found: set[float] = {0.0}
    rejected: list[float] = []
    samples = curve.samples
    for g, r in samples:
        if r.contains(g):
            found.add(float(g))
    if curve.params is not None:
        for (g0, r0), (g1, r1) in zip(samples, samples[1:]):
            above0, above1 = r0.threshold > g0, r1.threshold > g1
            below0, below1 = r0.upper < g0, r1.upper < g1
            if (above0 and above1) or (below0 and below1):
                continue
            ok, bad = _mixed_roots(curve, g0)
            found.update(ok)
            rejected.extend(bad)
    return FixedPointSearch(tuple(sorted(found)), tuple(sorted(set(rejected))))


def find_fixed_points(curve: BrCurve) -> list[float]:
    """Every ``gamma`` with ``gamma`` in ``br(gamma)``, always including 0."""
    return list(search_fixed_points(curve).fixed_points)


def efficiency(gamma: ThresholdStrategy | float, m: float, params: GameParams) -> float:
    """Steady-state welfare per agent per round when everyone plays ``gamma``."""
    gamma = gamma if isinstance(gamma, ThresholdStrategy) else ThresholdStrategy(gamma)
    if gamma.gamma == 0 or m >= gamma.support:
        return 0.0
    d_star = max_entropy_distribution(gamma.support, m)
    w = willing_fraction(d_star, gamma)
    if w <= 0:
        return 0.0
    rho = 1.0 - d_star[0]
    q = 1.0 - (1.0 - params.beta) ** ((params.n - 1) * w)
    return rho * q * (1.0 - params.alpha) / params.n


@dataclass(frozen=True)
class EquilibriumReport:
    delta: float
    m: float
    fixed_points: tuple[float, ...]
    efficiencies: tuple[float, ...]
    selected: float
    curve: BrCurve = field(repr=False)
    unverified: tuple[float, ...] = ()

    @property
    def selected_efficiency(self) -> float:
        return self.efficiencies[self.fixed_points.index(self.selected)]

    @property
    def nontrivial(self) -> tuple[float, ...]:
        return tuple(g for g in self.fixed_points if g > 0)


def equilibrium_report(delta: float, m: float, params: GameParams, *, price: float = 1.0,
                       gamma_max: int | None = None) -> EquilibriumReport:
    """Fixed points at money per agent ``m`` and their efficiencies.

    A per-request price ``price`` (in dollars) acts like dividing the money
    supply by ``price``. Among fixed points the most efficient is selected,
    ties going to the smaller threshold.
    """
    if price <= 0:
        raise DomainError("price must be positive")
    m_eff = m / price
    curve = best_response_curve(delta, m_eff, params, gamma_max)
    search = search_fixed_points(curve)
    fps = search.fixed_points
    effs = tuple(efficiency(g, m_eff, params) for g in fps)
    best = max(range(len(fps)), key=lambda i: (effs[i], -fps[i]))
    return EquilibriumReport(delta, m_eff, fps, effs, fps[best], curve, search.unverified)


@dataclass(frozen=True)
class OptimalRatio:
    m_star: float
    efficiency: float
    degenerate: bool
    table: tuple[tuple[float, float, float], ...]


def default_m_grid(upper: float = 10.0, step: float = 0.25) -> list[float]:
    return [step * i for i in range(1, int(round(upper / step)) + 1)]


def optimal_ratio(delta: float, params: GameParams, m_grid=None) -> OptimalRatio:
    """Money per agent maximizing the selected equilibrium's efficiency.

    ``table`` rows are ``(m, selected gamma, efficiency)``. If no grid point
    supports a nontrivial equilibrium the result is flagged ``degenerate``.
    """
    grid = default_m_grid() if m_grid is None else list(m_grid)
    rows = []
    for m in grid:
        p = params.replace(money=round(m * params.n))
        rep = equilibrium_report(delta, m, p)
        rows.append((float(m), rep.selected, rep.selected_efficiency))
    best = max(rows, key=lambda r: (r[2], -r[0]))
    return OptimalRatio(best[0], best[2], best[2] == 0.0, tuple(rows))


@dataclass(frozen=True)
class RatioInvariance:
    equal: bool
    first: EquilibriumReport
    second: EquilibriumReport


def ratio_invariance_check(n1: int, M1: int, n2: int, M2: int, delta: float, params: GameParams) -> RatioInvariance:
    """Compare br curves and selected equilibria for two economies with the
    same money per agent."""
    if Fraction(M1, n1) != Fraction(M2, n2):
        raise DomainError(f"M1/n1 = {Fraction(M1, n1)} differs from M2/n2 = {Fraction(M2, n2)}")
    m = M1 / n1
    p1 = params.replace(n=n1, money=M1, delta=delta)
    p2 = params.replace(n=n2, money=M2, delta=delta)
    g_max = max(default_gamma_max(delta, m, p1), default_gamma_max(delta, m, p2))
    r1 = equilibrium_report(delta, m, p1, gamma_max=g_max)
    r2 = equilibrium_report(delta, m, p2, gamma_max=g_max)
    same_curve = [(r.threshold, r.interval) for r in r1.curve.responses()] == \
                 [(r.threshold, r.interval) for r in r2.curve.responses()]
    return RatioInvariance(same_curve and r1.selected == r2.selected, r1, r2)


def altruist_bound(alpha: float, beta: float, delta: float) -> float:
    """``log_{1-beta}(alpha (1 - delta))``: with more altruists than this,
    never volunteering is dominant."""
    _check_ranges(alpha, beta, delta)
    if beta == 1:
        return 0.0
    return math.log(alpha * (1 - delta)) / math.log(1 - beta)


def altruist_threshold(alpha: float, beta: float, delta: float) -> int:
    """Smallest number of altruists making never-volunteering dominant.

    With ``beta = 1`` a single altruist always serves, so the answer is 1.
    """
    _check_ranges(alpha, beta, delta)
    if beta == 1:
        return 1
    return max(1, math.floor(altruist_bound(alpha, beta, delta)) + 1)


def _check_ranges(alpha: float, beta: float, delta: float) -> None:
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0 < beta <= 1:
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
