"""Vectorized replica engines for the Monte Carlo suites.

Each engine advances a whole block of independent replicas one event at a
time with synchronized numpy steps, truncating final sojourns exactly where
the stop condition fires.  Draw order is a deterministic function of the
generator handed in, so block-level substreams make every suite independent
of worker scheduling.
"""

from __future__ import annotations

import numpy as np

from .errors import BudgetExceeded
from .models import MarkovModel
from .paths import DEFAULT_BUDGET


class _Tables:
    """Per-state exit rates and renormalized cumulative transition law."""

    def __init__(self, model: MarkovModel):
        rates = model.exit_rates()
        self.mean_sojourn = 1.0 / rates
        p = model.generator / rates[:, None]
        np.fill_diagonal(p, 0.0)
        cum = np.cumsum(p, axis=1)
        cum /= cum[:, -1:]
        self.cum = cum
        self.m = model.invariant_measure


def _next_states(tab: _Tables, states: np.ndarray, u: np.ndarray) -> np.ndarray:
    # bisect_right per row: count of cumulative entries <= u; the renormalized
    # final 1.0 guarantees an in-range, positive-rate choice.
    return (tab.cum[states] <= u[:, None]).sum(axis=1)


def occupations_at_inverse_local_time(
    model: MarkovModel,
    base,
    level: float,
    reps: int,
    rng: np.random.Generator,
    budget: int = DEFAULT_BUDGET,
) -> np.ndarray:
    """Occupation vectors at the exact inverse local time tau^base(level).

    Starts every replica at ``base``; the final base sojourn is truncated so
    the base occupation equals level * m(base) exactly.  Returns (reps, N).
    """
    tab = _Tables(model)
    b = model.state_index(base)
    target = level * tab.m[b]
    n = model.n_states
    occ = np.zeros((reps, n))
    state = np.full(reps, b, dtype=np.int64)
    alive = np.arange(reps)
    events = 0
    while alive.size:
        s = state[alive]
        dt = rng.standard_exponential(alive.size) * tab.mean_sojourn[s]
        at_base = s == b
        crossing = at_base & (occ[alive, b] + dt >= target)
        occ[alive[crossing], b] = target
        keep = ~crossing
        alive = alive[keep]
        s = s[keep]
        occ[alive, s] += dt[keep]
        u = rng.random(alive.size)
        state[alive] = _next_states(tab, s, u)
        events += len(s) + int(crossing.sum())
        if events > budget:
            raise BudgetExceeded(f"event budget {budget} hit in inverse-local-time engine")
    return occ


def local_times_at_inverse_local_time(
    model: MarkovModel,
    base,
    level: float,
    reps: int,
    rng: np.random.Generator,
    budget: int = DEFAULT_BUDGET,
) -> np.ndarray:
    """Local-time vectors at tau^base(level); base column equals level exactly."""
    occ = occupations_at_inverse_local_time(model, base, level, reps, rng, budget)
    lt = occ / model.invariant_measure[None, :]
    lt[:, model.state_index(base)] = level
    return lt


def occupations_at_hitting(
    model: MarkovModel,
    start,
    target,
    reps: int,
    rng: np.random.Generator,
    budget: int = DEFAULT_BUDGET,
) -> np.ndarray:
    """Occupation vectors at the first entry into ``target`` from ``start``."""
    tab = _Tables(model)
    s0 = model.state_index(start)
    tgt = model.state_index(target)
    n = model.n_states
    occ = np.zeros((reps, n))
    if s0 == tgt:
        return occ
    state = np.full(reps, s0, dtype=np.int64)
    alive = np.arange(reps)
    events = 0
    while alive.size:
        s = state[alive]
        dt = rng.standard_exponential(alive.size) * tab.mean_sojourn[s]
        occ[alive, s] += dt
        u = rng.random(alive.size)
        nxt = _next_states(tab, s, u)
        arrived = nxt == tgt
        state[alive] = nxt
        alive = alive[~arrived]
        events += len(s)
        if events > budget:
            raise BudgetExceeded(f"event budget {budget} hit in hitting engine")
    return occ


def sup_local_time_gap(
    model: MarkovModel,
    b,
    a,
    level: float,
    reps: int,
    rng: np.random.Generator,
    budget: int = DEFAULT_BUDGET,
) -> np.ndarray:
    """sup over s <= tau^b(level) of (L^b_s - L^a_s), started at b.

    The gap rises only while the chain sits at b, so its running maximum is
    attained at ends of b-sojourns and at the final truncation instant.
    """
    tab = _Tables(model)
    ib = model.state_index(b)
    ia = model.state_index(a)
    target = level * tab.m[ib]
    occ_a = np.zeros(reps)
    occ_b = np.zeros(reps)
    best = np.zeros(reps)
    state = np.full(reps, ib, dtype=np.int64)
    alive = np.arange(reps)
    events = 0
    while alive.size:
        s = state[alive]
        dt = rng.standard_exponential(alive.size) * tab.mean_sojourn[s]
        at_b = s == ib
        crossing = at_b & (occ_b[alive] + dt >= target)
        done = alive[crossing]
        best[done] = np.maximum(best[done], level - occ_a[done] / tab.m[ia])
        keep = ~crossing
        alive = alive[keep]
        s = s[keep]
        dt = dt[keep]
        at_b = s == ib
        occ_b[alive[at_b]] += dt[at_b]
        at_a = s == ia
        occ_a[alive[at_a]] += dt[at_a]
        ends_b = alive[at_b]
        gap = occ_b[ends_b] / tab.m[ib] - occ_a[ends_b] / tab.m[ia]
        best[ends_b] = np.maximum(best[ends_b], gap)
        u = rng.random(alive.size)
        state[alive] = _next_states(tab, s, u)
        events += len(s) + int(crossing.sum())
        if events > budget:
            raise BudgetExceeded(f"event budget {budget} hit in sup-gap engine")
    return best


def sup_capped_gap(
    model: MarkovModel,
    a,
    b,
    cap: float,
    reps: int,
    rng: np.random.Generator,
    budget: int = DEFAULT_BUDGET,
) -> np.ndarray:
    """sup over all s of |cap ^ L^b_s - cap ^ L^a_s|, started at b.

    Once either local time reaches ``cap`` the capped gap can only shrink,
    so each replica stops at the first crossing, evaluating there; before
    that the kinks sit at ends of a- and b-sojourns.
    """
    tab = _Tables(model)
    ia = model.state_index(a)
    ib = model.state_index(b)
    tgt_a = cap * tab.m[ia]
    tgt_b = cap * tab.m[ib]
    occ_a = np.zeros(reps)
    occ_b = np.zeros(reps)
    best = np.zeros(reps)
    state = np.full(reps, ib, dtype=np.int64)
    alive = np.arange(reps)
    events = 0
    while alive.size:
        s = state[alive]
        dt = rng.standard_exponential(alive.size) * tab.mean_sojourn[s]
        at_a = s == ia
        at_b = s == ib
        cross_a = at_a & (occ_a[alive] + dt >= tgt_a)
        cross_b = at_b & (occ_b[alive] + dt >= tgt_b)
        crossing = cross_a | cross_b
        done = alive[crossing]
        la = np.minimum(occ_a[done] / tab.m[ia], cap)
        lb = np.minimum(occ_b[done] / tab.m[ib], cap)
        la[cross_a[crossing]] = cap
        lb[cross_b[crossing]] = cap
        best[done] = np.maximum(best[done], np.abs(lb - la))
        keep = ~crossing
        alive = alive[keep]
        s = s[keep]
        dt = dt[keep]
        at_a = s == ia
        at_b = s == ib
        occ_a[alive[at_a]] += dt[at_a]
        occ_b[alive[at_b]] += dt[at_b]
        watch = alive[at_a | at_b]
        gap = np.abs(occ_b[watch] / tab.m[ib] - occ_a[watch] / tab.m[ia])
        best[watch] = np.maximum(best[watch], gap)
        u = rng.random(alive.size)
        state[alive] = _next_states(tab, s, u)
        events += len(s) + int(crossing.sum())
        if events > budget:
            raise BudgetExceeded(f"event budget {budget} hit in capped-gap engine")
    return best


def discounted_occupations(
    model: MarkovModel,
    start,
    alpha: float,
    horizon: float,
    reps: int,
    rng: np.random.Generator,
    budget: int = DEFAULT_BUDGET,
) -> np.ndarray:
    """integral of exp(-alpha t) over time spent in each state, up to ``horizon``.

    Dividing column y by m(y) estimates the discounted local-time integral
    whose mean is the alpha-potential density; the horizon truncation error
    is exp(-alpha*horizon)-small.
    """
    tab = _Tables(model)
    n = model.n_states
    disc = np.zeros((reps, n))
    clock = np.zeros(reps)
    state = np.full(reps, model.state_index(start), dtype=np.int64)
    alive = np.arange(reps)
    events = 0
    while alive.size:
        s = state[alive]
        dt = rng.standard_exponential(alive.size) * tab.mean_sojourn[s]
        t0 = clock[alive]
        t1 = np.minimum(t0 + dt, horizon)
        disc[alive, s] += (np.exp(-alpha * t0) - np.exp(-alpha * t1)) / alpha
        clock[alive] = t1
        finished = t0 + dt >= horizon
        alive = alive[~finished]
        s = s[~finished]
        u = rng.random(alive.size)
        state[alive] = _next_states(tab, s, u)
        events += len(finished)
        if events > budget:
            raise BudgetExceeded(f"event budget {budget} hit in discounted engine")
    return disc
