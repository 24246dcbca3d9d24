"""Excursion decomposition and excursion-measure estimation.

A trajectory started at the base state splits into excursions between
successive base visits.  With local time at the base as the clock, complete
excursions arrive as a Poisson stream of independent marks, so normalized
sums over excursions estimate the excursion measure of path functionals.
The measure is normalized so that the mean local time any state accrues per
unit of base local time is 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientData
from .models import MarkovModel
from .paths import PathSegmentLog

MIN_RECORDS = 30


@dataclass(frozen=True)
class ExcursionRecord:
    """One complete excursion away from the base state.

    ``start_time`` is the departure instant (a left endpoint of the
    away-from-base set), ``duration`` the return time, ``visited`` the
    per-state local time accrued inside the excursion (zero at the base),
    and ``hit_flags`` whether each state was reached before returning.
    """

    __slots__ = ("start_time", "duration", "visited", "hit_flags")
    start_time: float
    duration: float
    visited: np.ndarray
    hit_flags: np.ndarray


@dataclass(frozen=True)
class ExcursionTable:
    """Columnar form of the decomposition (what the estimators consume)."""

    base_index: int
    start_times: np.ndarray
    durations: np.ndarray
    visited: np.ndarray  # (count, N) local times per excursion
    discarded: int  # truncated final excursion, 0 or 1

    @property
    def count(self) -> int:
        return len(self.durations)

    @property
    def hit_flags(self) -> np.ndarray:
        return self.visited > 0

    def records(self) -> list[ExcursionRecord]:
        return [
            ExcursionRecord(
                start_time=float(self.start_times[i]),
                duration=float(self.durations[i]),
                visited=self.visited[i],
                hit_flags=self.visited[i] > 0,
            )
            for i in range(self.count)
        ]


def excursion_table(path: PathSegmentLog, model: MarkovModel, base) -> ExcursionTable:
    """Vectorized excursion decomposition of a path started at ``base``.

    The final excursion is discarded (and counted) when the path ends away
    from the base; paths stopped at an inverse-local-time level always end
    at the base, so nothing is lost there.
    """
    b = model.state_index(base)
    if path.start_state != base and model.state_index(path.start_state) != b:
        raise ValueError("excursion decomposition requires a path started at the base")
    states = path.states
    n = model.n_states
    if len(states) == 0:
        return ExcursionTable(b, np.empty(0), np.empty(0), np.empty((0, n)), 0)

    bounds = path.boundaries()
    base_pos = np.flatnonzero(states == b)
    seg_starts = bounds[:-1]
    seg_ends = bounds[1:]

    # Departures: ends of base sojourns that are followed by more path.
    dep_all = base_pos[base_pos < len(states) - 1]
    next_base = np.searchsorted(base_pos, dep_all, side="right")
    complete = next_base < len(base_pos)
    discarded = int((~complete).sum())
    dep_idx = dep_all[complete]
    start_times = seg_ends[dep_idx]
    return_seg = base_pos[next_base[complete]]
    durations = seg_starts[return_seg] - start_times

    # Segment i belongs to complete excursion j iff dep_idx[j] < i < return_seg[j];
    # that interval test alone drops base sojourns and any truncated tail.
    count = len(dep_idx)
    visited = np.zeros((count, n))
    if count:
        seg_ids = np.arange(len(states))
        exc_id = np.searchsorted(dep_idx, seg_ids, side="right") - 1
        ok = (exc_id >= 0) & (seg_ids < return_seg[np.clip(exc_id, 0, None)])
        np.add.at(visited, (exc_id[ok], states[ok]), path.sojourns[ok])
        visited /= model.invariant_measure[None, :]
        visited[:, b] = 0.0
    return ExcursionTable(b, start_times, durations, visited, discarded)


def excursions(path: PathSegmentLog, model: MarkovModel, base) -> list[ExcursionRecord]:
    """Complete excursions of ``path`` from ``base`` as records."""
    return excursion_table(path, model, base).records()


@dataclass(frozen=True)
class MomentEstimate:
    name: str
    target: float
    estimate: float
    se: float

    @property
    def z(self) -> float:
        if self.se == 0.0:
            return 0.0 if self.estimate == self.target else np.inf
        return (self.estimate - self.target) / self.se

    @property
    def passed(self) -> bool:
        return abs(self.z) <= 3.0


@dataclass(frozen=True)
class ExcursionMomentReport:
    """Excursion-measure estimates against their exact targets.

    Estimators divide excursion sums by the accumulated base local time
    ``level``; standard errors use the compound-Poisson identity
    Var = (sum of squared marks) / level^2.
    """

    level: float
    count: int
    discarded: int
    local_time_means: tuple  # nu(L^x) vs 1, states != base
    products: tuple  # nu(L^x L^y) vs Gamma(x,y)
    hit_probabilities: tuple  # nu(T_x < T_base) vs 1/u_killed(x,x)

    @property
    def all_passed(self) -> bool:
        return all(
            e.passed
            for e in (*self.local_time_means, *self.products, *self.hit_probabilities)
        )

    def to_dict(self) -> dict:
        def block(entries):
            return [
                {
                    "name": e.name,
                    "target": e.target,
                    "estimate": e.estimate,
                    "se": e.se,
                    "z": e.z,
                    "passed": e.passed,
                }
                for e in entries
            ]

        return {
            "level": self.level,
            "count": self.count,
            "discarded": self.discarded,
            "local_time_means": block(self.local_time_means),
            "products": block(self.products),
            "hit_probabilities": block(self.hit_probabilities),
            "all_passed": self.all_passed,
        }


def _poisson_estimate(name, marks: np.ndarray, level: float, target: float) -> MomentEstimate:
    est = float(marks.sum() / level)
    se = float(np.sqrt(np.sum(marks**2)) / level)
    return MomentEstimate(name=name, target=target, estimate=est, se=se)


def excursion_functionals(
    table: ExcursionTable,
    level: float,
    model: MarkovModel,
    killed_table: np.ndarray,
    gamma: np.ndarray,
) -> ExcursionMomentReport:
    """Estimate the excursion measure of L^x, L^x L^y and {T_x before T_base}.

    ``table`` must come from a path run to the inverse local time ``level``
    at the base.  Exact targets: 1, Gamma(x,y), and 1/u_killed(x,x).
    """
    if table.count < MIN_RECORDS:
        raise InsufficientData(
            f"{table.count} excursions < {MIN_RECORDS}; increase the level"
        )
    b = table.base_index
    others = [i for i in range(model.n_states) if i != b]
    labels = model.states

    means = tuple(
        _poisson_estimate(f"L[{labels[x]}]", table.visited[:, x], level, 1.0)
        for x in others
    )
    products = tuple(
        _poisson_estimate(
            f"L[{labels[x]}]*L[{labels[y]}]",
            table.visited[:, x] * table.visited[:, y],
            level,
            float(gamma[x, y]),
        )
        for x in others
        for y in others
        if x <= y
    )
    hits = tuple(
        _poisson_estimate(
            f"hit[{labels[x]}]",
            (table.visited[:, x] > 0).astype(float),
            level,
            1.0 / float(killed_table[x, x]),
        )
        for x in others
    )
    return ExcursionMomentReport(
        level=level,
        count=table.count,
        discarded=table.discarded,
        local_time_means=means,
        products=products,
        hit_probabilities=hits,
    )
