"""Experiment presets: each turns a resolved config into CSV tables, which
:func:`run_experiment` writes alongside the config and a checksum manifest."""

from __future__ import annotations

import hashlib
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .. import chain as chain_mod
from ..core import (
    GameParams,
    ThresholdStrategy,
    equal_start,
    extreme_start,
    homogeneous,
    near_distribution_start,
    run_simulation,
)
from ..distributions import entropy, max_entropy_distribution
from ..equilibrium import (
    altruist_bound,
    altruist_threshold,
    best_response_curve,
    default_m_grid,
    equilibrium_report,
    optimal_ratio,
    ratio_invariance_check,
)
from ..validation import altruist_dominance
from .config import SCALE_BASE_N, ExperimentConfig

SIG_DIGITS = 12


@dataclass(frozen=True)
class Table:
    name: str
    header: tuple[str, ...]
    rows: list[tuple]

    def render(self) -> str:
        lines = [",".join(self.header)]
        lines += [",".join(format_value(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), f".{SIG_DIGITS}g")
    return str(v)


def _map_seeds(fn: Callable, seeds: Sequence[int], workers: int) -> list:
    """Apply ``fn`` to every seed; results come back in seed-list order."""
    if workers <= 1 or len(seeds) <= 1:
        return [fn(s) for s in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))


def _params(cfg: ExperimentConfig, n: int | None = None) -> GameParams:
    n = cfg.n if n is None else n
    return GameParams(n, cfg.delta, cfg.alpha, cfg.beta, round(cfg.m * n))


def _scaled_ns(cfg: ExperimentConfig) -> list[int]:
    limit = SCALE_BASE_N * cfg.scale
    return [n for n in cfg.ns if n <= limit]


def _mean_stderr(x: np.ndarray, axis: int = 0):
    mean = x.mean(axis=axis)
    if x.shape[axis] < 2:
        return mean, np.zeros_like(mean)
    return mean, x.std(axis=axis, ddof=1) / math.sqrt(x.shape[axis])


# -- simulation presets -----------------------------------------------------


def _sim_seed(seed, params, gamma, rounds, stride, start, ref, budget):
    traj = run_simulation(params, homogeneous(params.n, gamma), rounds, seed,
                          initial_balances=start, stride=stride, reference=ref, budget=budget)
    return (traj.snapshot_rounds, traj.sq_distances(), traj.max_sq_distance,
            float(traj.utilities.mean()))


def exp_sim(cfg: ExperimentConfig) -> list[Table]:
    params = _params(cfg)
    support = max(ThresholdStrategy(cfg.k).support, 1)
    ref = max_entropy_distribution(support, params.m)
    start = equal_start(params.n, params.money)
    fn = partial(_sim_seed, params=params, gamma=cfg.k, rounds=cfg.rounds, stride=cfg.stride,
                 start=start, ref=ref, budget=cfg.budget)
    results = _map_seeds(fn, cfg.seeds, cfg.workers)
    rows, summary = [], []
    for seed, (rounds, sq, max_sq, mean_u) in zip(cfg.seeds, results):
        rows += [(seed, int(r), float(d), math.sqrt(d)) for r, d in zip(rounds, sq)]
        summary.append((seed, int(rounds[-1]), float(sq[-1]), float(max_sq), mean_u))
    return [
        Table("sim.csv", ("seed", "round", "sqDistance", "euclideanDistance"), rows),
        Table("sim_summary.csv", ("seed", "rounds", "finalSqDistance", "maxSqDistance", "meanUtility"), summary),
    ]


def _fig1_seed(seed, params, gamma, rounds, stride, start, ref, budget):
    traj = run_simulation(params, homogeneous(params.n, gamma), rounds, seed,
                          initial_balances=start, stride=stride, reference=ref, budget=budget)
    return traj.snapshot_rounds, traj.sq_distances()


def exp_fig1(cfg: ExperimentConfig) -> list[Table]:
    """Distance to the max-entropy law over time from the all-or-nothing start.

    Distances are squared (sum of squared coordinate differences)."""
    params = _params(cfg)
    k = int(cfg.k)
    ref = max_entropy_distribution(k, params.m)
    start = extreme_start(params.n, params.money, k)
    fn = partial(_fig1_seed, params=params, gamma=cfg.k, rounds=cfg.rounds, stride=cfg.stride,
                 start=start, ref=ref, budget=cfg.budget)
    results = _map_seeds(fn, cfg.seeds, cfg.workers)
    rounds = results[0][0]
    dist = np.array([r[1] for r in results])
    mean, se = _mean_stderr(dist)
    rows = [(int(r), float(a), float(b)) for r, a, b in zip(rounds, mean, se)]
    return [Table("fig1.csv", ("round", "meanDistance", "stderr"), rows)]


def _fig2_seed(seed, params, gamma, rounds, start, ref, budget):
    traj = run_simulation(params, homogeneous(params.n, gamma), rounds, seed,
                          initial_balances=start, stride=rounds or 1, reference=ref, budget=budget)
    return traj.max_sq_distance


def exp_fig2(cfg: ExperimentConfig) -> list[Table]:
    """Largest squared distance over a long run started next to the max-entropy law."""
    k = int(cfg.k)
    rows = []
    for n in _scaled_ns(cfg):
        params = _params(cfg, n)
        ref = max_entropy_distribution(k, params.m)
        start = near_distribution_start(n, ref, params.money)
        fn = partial(_fig2_seed, params=params, gamma=cfg.k, rounds=cfg.rounds, start=start,
                     ref=ref, budget=cfg.budget)
        rows.append((n, float(max(_map_seeds(fn, cfg.seeds, cfg.workers)))))
    return [Table("fig2.csv", ("n", "maxDistance"), rows)]


def _fig3_seed(seed, params, gamma, cap, start, ref, eps, budget):
    traj = run_simulation(params, homogeneous(params.n, gamma), cap, seed, initial_balances=start,
                          stride=cap, reference=ref, hit_threshold=eps, stop_on_hit=True, budget=budget)
    return traj.first_hit_round


def exp_fig3(cfg: ExperimentConfig) -> list[Table]:
    """Rounds until the squared distance first drops below ``epsilon``,
    from the all-or-nothing start. Runs are capped at ``rounds`` (20n when 0);
    a run that never gets there counts at the cap."""
    k = int(cfg.k)
    rows = []
    for n in _scaled_ns(cfg):
        params = _params(cfg, n)
        ref = max_entropy_distribution(k, params.m)
        start = extreme_start(n, params.money, k)
        cap = cfg.rounds or 20 * n
        fn = partial(_fig3_seed, params=params, gamma=cfg.k, cap=cap, start=start, ref=ref,
                     eps=cfg.epsilon, budget=cfg.budget)
        hits = _map_seeds(fn, cfg.seeds, cfg.workers)
        if any(h < 0 for h in hits):
            warnings.warn(f"n={n}: {sum(h < 0 for h in hits)} runs never reached {cfg.epsilon}")
        arr = np.array([h if h >= 0 else cap for h in hits], dtype=float)
        mean, se = _mean_stderr(arr)
        rows.append((n, float(mean), float(se), 3 * n))
    return [Table("fig3.csv", ("n", "meanRounds", "stderr", "reference"), rows)]


# -- analytic presets -------------------------------------------------------


def exp_entropy(cfg: ExperimentConfig) -> list[Table]:
    K = int(cfg.k)
    grid = cfg.m_grid or [round(0.1 * i, 10) for i in range(10 * K + 1)]
    rows = []
    for m in grid:
        d = max_entropy_distribution(K, m)
        rows.append((K, m, entropy(d), *d.probs))
    return [Table("entropy.csv", ("K", "m", "entropy", *(f"p{j}" for j in range(K + 1))), rows)]


def exp_chain(cfg: ExperimentConfig) -> list[Table]:
    k, n = int(cfg.k), cfg.n
    M = round(cfg.m * n)
    space = chain_mod.enumerate_states(k, n, M)
    beta = Fraction(cfg.beta).limit_denominator(10**6)
    P = chain_mod.transition_matrix(space, beta)
    gap = float(chain_mod.verify_symmetry(P))
    irreducible = chain_mod.is_irreducible(P)
    pi = chain_mod.stationary_distribution(P) if irreducible else None
    dev = float(np.abs(pi - 1 / len(space)).max()) if pi is not None else math.nan
    tv = math.nan
    if cfg.rounds > 0 and pi is not None:
        params = GameParams(n, cfg.delta, cfg.alpha, cfg.beta, M)
        traj = run_simulation(params, homogeneous(n, k), cfg.rounds, cfg.seeds[0],
                              stride=cfg.rounds, record_balances=True, budget=cfg.budget)
        hist = traj.balance_history
        codes = hist @ ((k + 1) ** np.arange(n - 1, -1, -1))
        state_codes = np.array([sum(v * (k + 1) ** (n - 1 - i) for i, v in enumerate(s)) for s in space.states])
        order = np.argsort(state_codes)
        idx = order[np.searchsorted(state_codes[order], codes)]
        freq = np.bincount(idx, minlength=len(space)) / hist.shape[0]
        tv = 0.5 * float(np.abs(freq - pi).sum())
    summary = Table("chain_summary.csv",
                    ("k", "n", "M", "beta", "states", "symmetryGap", "irreducible", "maxUniformDeviation", "occupancyTV"),
                    [(k, n, M, float(beta), len(space), gap, irreducible, dev, tv)])
    conc = Table("concentration.csv", ("n", "m", "epsilon", "fraction"),
                 [(nn, cfg.m, cfg.epsilon, chain_mod.concentration_fraction(k, nn, cfg.m, cfg.epsilon))
                  for nn in (cfg.ns or [n])])
    return [summary, conc]


def _curve_tables(cfg: ExperimentConfig, prefix: str, full: bool) -> list[Table]:
    params = _params(cfg)
    rep = equilibrium_report(cfg.delta, cfg.m, params)
    curve = rep.curve
    if full:
        br = Table(f"{prefix}.csv", ("gamma", "br", "upper", "interval", "saturated"),
                   [(g, r.threshold, r.upper, r.interval, r.saturated) for g, r in curve.samples])
    else:
        br = Table(f"{prefix}.csv", ("gamma", "br"), [(g, r.threshold) for g, r in curve.samples])
    fps = Table(f"{prefix}_fixed_points.csv", ("gamma", "efficiency", "selected"),
                [(g, e, g == rep.selected) for g, e in zip(rep.fixed_points, rep.efficiencies)])
    return [br, fps]


def exp_bestresponse(cfg: ExperimentConfig) -> list[Table]:
    return _curve_tables(cfg, "bestresponse", full=True)


def exp_fig4(cfg: ExperimentConfig) -> list[Table]:
    return _curve_tables(cfg, "fig4", full=False)


def exp_equilibrium(cfg: ExperimentConfig) -> list[Table]:
    params = _params(cfg)
    rows, counts = [], []
    for d in cfg.deltas or [cfg.delta]:
        rep = equilibrium_report(d, cfg.m, params)
        rows += [(d, g, e, g == rep.selected) for g, e in zip(rep.fixed_points, rep.efficiencies)]
        counts.append((d, len(rep.fixed_points), rep.selected, rep.selected_efficiency, len(rep.unverified)))
    return [
        Table("equilibrium.csv", ("delta", "gamma", "efficiency", "selected"), rows),
        Table("equilibrium_summary.csv", ("delta", "fixedPoints", "selected", "efficiency", "unverified"), counts),
    ]


def exp_ratio(cfg: ExperimentConfig) -> list[Table]:
    params = _params(cfg)
    n1, M1 = cfg.n, params.money
    rows, price_rows = [], []
    for d in cfg.deltas or [cfg.delta]:
        res = ratio_invariance_check(n1, M1, 2 * n1, 2 * M1, d, params)
        same_curve = res.first.curve.thresholds() == res.second.curve.thresholds()
        rows.append((d, n1, M1, 2 * n1, 2 * M1, res.first.selected, res.second.selected, same_curve, res.equal))
        priced = equilibrium_report(d, cfg.m, params, price=2.0)
        halved = equilibrium_report(d, cfg.m / 2, params.replace(money=round(M1 / 2)))
        price_rows.append((d, cfg.m, 2.0, priced.selected, halved.selected, priced.selected == halved.selected))
    return [
        Table("ratio_invariance.csv",
              ("delta", "n1", "M1", "n2", "M2", "selected1", "selected2", "curvesEqual", "equal"), rows),
        Table("price.csv", ("delta", "m", "price", "selectedPriced", "selectedHalfMoney", "equal"), price_rows),
    ]


def exp_altruists(cfg: ExperimentConfig) -> list[Table]:
    params = _params(cfg)
    bound = altruist_bound(cfg.alpha, cfg.beta, cfg.delta)
    a = altruist_threshold(cfg.alpha, cfg.beta, cfg.delta)
    rows = [(cfg.alpha, cfg.beta, cfg.delta, bound, a)]
    dominance = []
    if a < params.n:
        comps = altruist_dominance(params, a, cfg.k, [1, 2, 3], cfg.rounds, cfg.seeds)
        for k, c in zip((1, 2, 3), comps):
            dominance.append((a, k, c.mean, c.stderr, c.not_better()))
    return [
        Table("altruists.csv", ("alpha", "beta", "delta", "bound", "threshold"), rows),
        Table("dominance.csv", ("altruists", "k", "meanDiff", "stderr", "dominated"), dominance),
    ]


def exp_fig5(cfg: ExperimentConfig) -> list[Table]:
    params = _params(cfg)
    grid = cfg.m_grid or default_m_grid()
    rows, table = [], []
    for d in cfg.deltas or [cfg.delta]:
        res = optimal_ratio(d, params, grid)
        rows.append((d, res.m_star, res.efficiency, res.degenerate))
        table += [(d, m, g, e) for m, g, e in res.table]
    return [
        Table("fig5.csv", ("delta", "mStar", "efficiency", "degenerate"), rows),
        Table("fig5_table.csv", ("delta", "m", "selected", "efficiency"), table),
    ]


RUNNERS: dict[str, Callable[[ExperimentConfig], list[Table]]] = {
    "sim": exp_sim,
    "entropy": exp_entropy,
    "chain": exp_chain,
    "bestresponse": exp_bestresponse,
    "equilibrium": exp_equilibrium,
    "ratio": exp_ratio,
    "altruists": exp_altruists,
    "fig1": exp_fig1,
    "fig2": exp_fig2,
    "fig3": exp_fig3,
    "fig4": exp_fig4,
    "fig5": exp_fig5,
}

PLOT_SOURCES = {
    "fig1": "fig1.csv", "fig2": "fig2.csv", "fig3": "fig3.csv", "fig4": "fig4.csv", "fig5": "fig5.csv",
}


# -- artifacts --------------------------------------------------------------


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass(frozen=True)
class RunResult:
    out_dir: Path
    outputs: tuple[Path, ...]
    manifest: Path


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    tables = RUNNERS[cfg.experiment](cfg)
    paths = []
    for t in tables:
        p = out / t.name
        with open(p, "w", encoding="utf-8", newline="") as f:
            f.write(t.render())
        paths.append(p)
    if cfg.plot and cfg.experiment in PLOT_SOURCES:
        from .plots import emit_plot

        paths.append(emit_plot(out / PLOT_SOURCES[cfg.experiment], cfg.experiment))
    wall = time.perf_counter() - t0
    config_path = out / "config.json"
    config_path.write_text(cfg.to_json(), encoding="utf-8", newline="")
    manifest = {
        "experiment": cfg.experiment,
        "config_sha256": cfg.sha256(),
        "seeds": cfg.seeds,
        "wall_time_seconds": wall,
        "outputs": {p.name: sha256_file(p) for p in [config_path, *paths]},
    }
    mpath = out / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="")
    return RunResult(out, tuple(paths), mpath)


def verify_manifest(out_dir: str | Path) -> list[str]:
    """Names of recorded outputs that are missing or whose checksum changed."""
    out = Path(out_dir)
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    bad = []
    for name, digest in manifest["outputs"].items():
        p = out / name
        if not p.exists() or sha256_file(p) != digest:
            bad.append(name)
    return bad
