"""Compiled round loop for batch simulation.

Agents are grouped into classes of identical kind. Within a class, an agent
sits in the "sure" set (always volunteers for a paying requester, or for
anyone if an altruist), the "mix" set (at its threshold, volunteers with the
mixing probability), or in neither. Only set sizes are needed to sample how
many willing agents are able, and a uniform member of the winning set is
the server, so a round costs O(classes) instead of O(n).
"""

from __future__ import annotations

import math

import numba
import numpy as np

NO_SET = -1


@numba.njit(cache=True)
def _set_for(c, b, thr_k, thr_frac, altruist):
    if altruist[c]:
        return 2 * c
    if b < thr_k[c]:
        return 2 * c
    if b == thr_k[c] and thr_frac[c] > 0.0:
        return 2 * c + 1
    return NO_SET


@numba.njit(cache=True)
def _move(i, new_set, set_of, pos, members, sizes):
    old = set_of[i]
    if old == new_set:
        return
    if old != NO_SET:
        last = members[old, sizes[old] - 1]
        members[old, pos[i]] = last
        pos[last] = pos[i]
        sizes[old] -= 1
    if new_set != NO_SET:
        members[new_set, sizes[new_set]] = i
        pos[i] = sizes[new_set]
        sizes[new_set] += 1
    set_of[i] = new_set


@numba.njit(cache=True)
def _term(level, counts, ref, inv_n):
    x = counts[level] * inv_n
    if level < ref.size:
        x -= ref[level]
    return x * x


@numba.njit(cache=True)
def _affected(bp, bv, levels):
    """Distinct balance levels touched when the payer at ``bp`` pays the server at ``bv``."""
    n_lv = 0
    for lv in (bp, bp - 1, bv, bv + 1):
        seen = False
        for q in range(n_lv):
            if levels[q] == lv:
                seen = True
        if not seen:
            levels[n_lv] = lv
            n_lv += 1
    return n_lv


@numba.njit(cache=True)
def _full_sqdist(counts, ref, inv_n):
    s = 0.0
    for level in range(counts.size):
        s += _term(level, counts, ref, inv_n)
    for level in range(counts.size, ref.size):
        s += ref[level] * ref[level]
    return s


@numba.njit(cache=True)
def run_rounds(
    balances,
    cls,
    thr_k,
    thr_frac,
    altruist,
    alt_gain,
    alpha,
    beta,
    log_disc,
    start_round,
    rounds,
    stride,
    support,
    ref,
    hit_eps,
    stop_on_hit,
    record,
    g_req,
    g_able,
    g_vol,
    g_srv,
):
    n = balances.size
    n_cls = thr_k.size
    n_sets = 2 * n_cls
    money = 0
    for i in range(n):
        money += balances[i]
    inv_n = 1.0 / n

    members = np.zeros((n_sets, n), dtype=np.int64)
    sizes = np.zeros(n_sets, dtype=np.int64)
    set_of = np.full(n, NO_SET, dtype=np.int64)
    pos = np.zeros(n, dtype=np.int64)
    counts = np.zeros(money + 1, dtype=np.int64)
    cls_zero = np.zeros(n_cls, dtype=np.int64)
    for i in range(n):
        counts[balances[i]] += 1
        if balances[i] == 0:
            cls_zero[cls[i]] += 1
        _move(i, _set_for(cls[i], balances[i], thr_k, thr_frac, altruist), set_of, pos, members, sizes)

    utilities = np.zeros(n)
    spends = np.zeros(n, dtype=np.int64)
    earns = np.zeros(n, dtype=np.int64)
    cls_count = np.zeros(n_cls, dtype=np.int64)
    for i in range(n):
        cls_count[cls[i]] += 1
    exp_solvent = np.zeros(n_cls)
    exp_sure = np.zeros(n_cls)
    exp_mix = np.zeros(n_cls)

    n_snap = rounds // stride + 2
    snap_rounds = np.zeros(n_snap, dtype=np.int64)
    snap_counts = np.zeros((n_snap, support + 2), dtype=np.int64)
    if record:
        history = np.zeros((rounds, n), dtype=np.int64)
    else:
        history = np.zeros((0, n), dtype=np.int64)

    track = ref.size > 0
    sqd = 0.0
    max_sqd = 0.0
    first_hit = -1
    if track:
        sqd = _full_sqdist(counts, ref, inv_n)
        max_sqd = sqd
        if sqd < hit_eps:
            first_hit = 0

    n_taken = 0
    for level in range(counts.size):
        if level <= support:
            snap_counts[n_taken, level] = counts[level]
        else:
            snap_counts[n_taken, support + 1] += counts[level]
    snap_rounds[n_taken] = 0
    n_taken += 1

    levels = np.zeros(4, dtype=np.int64)
    x_able = np.zeros(n_sets, dtype=np.int64)
    pool = np.zeros(n_sets, dtype=np.int64)
    done = 0
    for step in range(rounds):
        if stop_on_hit and first_hit >= 0:
            break
        t = start_round + step
        for c in range(n_cls):
            exp_solvent[c] += cls_count[c] - cls_zero[c]
            exp_sure[c] += sizes[2 * c]
            exp_mix[c] += sizes[2 * c + 1]

        p = g_req.integers(0, n)
        solvent = balances[p] > 0
        p_set = set_of[p]

        total = 0
        for s in range(n_sets):
            c = s // 2
            x_able[s] = 0
            pool[s] = 0
            if not (solvent or altruist[c]):
                continue
            size = sizes[s]
            if p_set == s:
                size -= 1
            pool[s] = size
            if size == 0:
                continue
            if beta >= 1.0:
                able = size
            else:
                able = g_able.binomial(size, beta)
            if s % 2 == 1 and able > 0:
                able = g_vol.binomial(able, thr_frac[c])
            x_able[s] = able
            total += able

        if total > 0:
            u = g_srv.integers(0, total)
            s = 0
            while u >= x_able[s]:
                u -= x_able[s]
                s += 1
            r = g_srv.integers(0, pool[s])
            if p_set == s and r >= pos[p]:
                r += 1
            v = members[s, r]
            w = math.exp(t * log_disc)
            utilities[p] += w
            cv = cls[v]
            if altruist[cv]:
                utilities[v] += alt_gain[cv] * w
            else:
                utilities[v] -= alpha * w
            if solvent:
                bp = balances[p]
                bv = balances[v]
                n_lv = _affected(bp, bv, levels)
                if track:
                    for q in range(n_lv):
                        sqd -= _term(levels[q], counts, ref, inv_n)
                counts[bp] -= 1
                counts[bp - 1] += 1
                counts[bv] -= 1
                counts[bv + 1] += 1
                if track:
                    for q in range(n_lv):
                        sqd += _term(levels[q], counts, ref, inv_n)
                balances[p] = bp - 1
                balances[v] = bv + 1
                if bp - 1 == 0:
                    cls_zero[cls[p]] += 1
                if bv == 0:
                    cls_zero[cv] -= 1
                spends[p] += 1
                earns[v] += 1
                _move(p, _set_for(cls[p], bp - 1, thr_k, thr_frac, altruist), set_of, pos, members, sizes)
                _move(v, _set_for(cv, bv + 1, thr_k, thr_frac, altruist), set_of, pos, members, sizes)

        done = step + 1
        if record:
            for i in range(n):
                history[step, i] = balances[i]
        if track:
            if sqd > max_sqd:
                max_sqd = sqd
            if first_hit < 0 and sqd < hit_eps:
                first_hit = done
        if done % stride == 0 or done == rounds:
            if track:
                sqd = _full_sqdist(counts, ref, inv_n)
            for level in range(counts.size):
                if level <= support:
                    snap_counts[n_taken, level] = counts[level]
                else:
                    snap_counts[n_taken, support + 1] += counts[level]
            snap_rounds[n_taken] = done
            n_taken += 1

    if done % stride != 0 and done != rounds:
        # early stop between strides: close with a final snapshot
        for level in range(counts.size):
            if level <= support:
                snap_counts[n_taken, level] = counts[level]
            else:
                snap_counts[n_taken, support + 1] += counts[level]
        snap_rounds[n_taken] = done
        n_taken += 1

    return (
        done,
        utilities,
        snap_rounds[:n_taken].copy(),
        snap_counts[:n_taken].copy(),
        max_sqd,
        first_hit,
        spends,
        earns,
        exp_solvent,
        exp_sure,
        exp_mix,
        history,
    )
