"""Exact event-driven trajectory simulation and path functionals.

A trajectory is a sequence of (state, sojourn) segments; sojourns are drawn
exponentially at the exit rate of the current state and the next state
proportionally to the off-diagonal rates, so there is no time grid and local
times, inverse local times, and hitting times are exact path functionals.
Stop rules truncate the final sojourn at the precise instant they fire.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, ConfigError, OutOfRange
from .models import MarkovModel

DEFAULT_BUDGET = 100_000_000


@dataclass(frozen=True)
class FixedTime:
    """Stop at a fixed wall-clock horizon t."""

    t: float
    budget: int = DEFAULT_BUDGET


@dataclass(frozen=True)
class Hitting:
    """Stop the instant the chain first enters state x (zero time if started there)."""

    x: object
    budget: int = DEFAULT_BUDGET


@dataclass(frozen=True)
class InverseLocalTime:
    """Stop exactly when the local time at state a crosses level s."""

    a: object
    s: float
    budget: int = DEFAULT_BUDGET


@dataclass(frozen=True)
class LocalTimeAtBase:
    """Stop when the local time at the start state crosses s, capped by a wall-clock time."""

    s: float
    time_cap: float = np.inf
    budget: int = DEFAULT_BUDGET


StopRule = FixedTime | Hitting | InverseLocalTime | LocalTimeAtBase


@dataclass(frozen=True)
class PathSegmentLog:
    """An exact simulated trajectory: parallel arrays of states and sojourns."""

    start_state: object
    states: np.ndarray
    sojourns: np.ndarray
    terminal_reason: str
    total_time: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total_time", float(self.sojourns.sum()))
        self.states.setflags(write=False)
        self.sojourns.setflags(write=False)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def segments(self):
        """Ordered list of (state_index, sojourn) pairs."""
        return list(zip(self.states.tolist(), self.sojourns.tolist()))

    def boundaries(self) -> np.ndarray:
        """Segment start/end times: length len(self)+1, starting at 0."""
        b = np.empty(len(self.states) + 1)
        b[0] = 0.0
        np.cumsum(self.sojourns, out=b[1:])
        return b


def _validate_stop(rule: StopRule) -> None:
    if rule.budget <= 0:
        raise ConfigError("stop rule: budget must be > 0")
    if isinstance(rule, FixedTime) and rule.t <= 0:
        raise ConfigError("FixedTime: t must be > 0")
    if isinstance(rule, InverseLocalTime) and rule.s <= 0:
        raise ConfigError("InverseLocalTime: s must be > 0")
    if isinstance(rule, LocalTimeAtBase) and (rule.s <= 0 or rule.time_cap <= 0):
        raise ConfigError("LocalTimeAtBase: s and time_cap must be > 0")


class _Draws:
    """Buffered draws from one Generator; consumption order is deterministic."""

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self._rng = rng
        self._block = block
        self._exp = rng.standard_exponential(block)
        self._uni = rng.random(block)
        self._ie = 0
        self._iu = 0

    def exponential(self) -> float:
        if self._ie == self._block:
            self._exp = self._rng.standard_exponential(self._block)
            self._ie = 0
        v = self._exp[self._ie]
        self._ie += 1
        return v

    def uniform(self) -> float:
        if self._iu == self._block:
            self._uni = self._rng.random(self._block)
            self._iu = 0
        v = self._uni[self._iu]
        self._iu += 1
        return v


def simulate(
    model: MarkovModel, start, stop_rule: StopRule, rng: np.random.Generator
) -> PathSegmentLog:
    """Simulate one exact trajectory from ``start`` until the stop rule fires."""
    _validate_stop(stop_rule)
    s = model.state_index(start)
    rates = model.exit_rates()
    mean_sojourn = 1.0 / rates
    # Per-state cumulative transition law. Renormalizing by the final cumsum
    # makes the last entry exactly 1.0, so bisect_right never runs off the end
    # and never selects a zero-rate transition.
    p = model.generator / rates[:, None]
    np.fill_diagonal(p, 0.0)
    cum = np.cumsum(p, axis=1)
    cum /= cum[:, -1:]
    cum_rows = [row.tolist() for row in cum]

    states: list[int] = []
    sojourns: list[float] = []
    draws = _Draws(rng)
    budget = stop_rule.budget

    if isinstance(stop_rule, Hitting):
        target = model.state_index(stop_rule.x)
        if s == target:
            return PathSegmentLog(start, np.empty(0, dtype=np.int64), np.empty(0), "hitting")
        while True:
            dt = draws.exponential() * mean_sojourn[s]
            states.append(s)
            sojourns.append(dt)
            if len(states) > budget:
                raise BudgetExceeded(f"event budget {budget} hit before reaching {stop_rule.x!r}")
            s = bisect.bisect_right(cum_rows[s], draws.uniform())
            if s == target:
                reason = "hitting"
                break

    elif isinstance(stop_rule, FixedTime):
        horizon = stop_rule.t
        elapsed = 0.0
        while True:
            dt = draws.exponential() * mean_sojourn[s]
            if elapsed + dt >= horizon:
                states.append(s)
                sojourns.append(horizon - elapsed)
                reason = "fixed_time"
                break
            states.append(s)
            sojourns.append(dt)
            elapsed += dt
            if len(states) > budget:
                raise BudgetExceeded(f"event budget {budget} hit before time {horizon}")
            s = bisect.bisect_right(cum_rows[s], draws.uniform())

    else:  # InverseLocalTime / LocalTimeAtBase
        if isinstance(stop_rule, LocalTimeAtBase):
            a = s
            level = stop_rule.s
            cap = stop_rule.time_cap
        else:
            a = model.state_index(stop_rule.a)
            level = stop_rule.s
            cap = np.inf
        target_occ = level * model.invariant_measure[a]
        occ_a = 0.0
        elapsed = 0.0
        while True:
            dt = draws.exponential() * mean_sojourn[s]
            if s == a and occ_a + dt >= target_occ:
                final = target_occ - occ_a
                if elapsed + final >= cap:
                    states.append(s)
                    sojourns.append(cap - elapsed)
                    reason = "time_cap"
                else:
                    states.append(s)
                    sojourns.append(final)
                    reason = "inverse_local_time"
                break
            if elapsed + dt >= cap:
                states.append(s)
                sojourns.append(cap - elapsed)
                reason = "time_cap"
                break
            states.append(s)
            sojourns.append(dt)
            elapsed += dt
            if s == a:
                occ_a += dt
            if len(states) > budget:
                raise BudgetExceeded(f"event budget {budget} hit before local-time level {level}")
            s = bisect.bisect_right(cum_rows[s], draws.uniform())

    return PathSegmentLog(
        start, np.asarray(states, dtype=np.int64), np.asarray(sojourns), reason
    )


def occupation(path: PathSegmentLog, state_index: int, t: float) -> float:
    """Raw time spent in ``state_index`` during [0, t]."""
    if t > path.total_time * (1 + 1e-12) + 1e-300:
        raise OutOfRange(f"t={t} exceeds the simulated horizon {path.total_time}")
    bounds = path.boundaries()
    clipped = np.minimum(bounds[1:], t) - np.minimum(bounds[:-1], t)
    return float(clipped[path.states == state_index].sum())


def local_time(path: PathSegmentLog, model: MarkovModel, x, t: float) -> float:
    """L^x_t: occupation of x on [0, t] divided by m(x); nondecreasing in t."""
    ix = model.state_index(x)
    return occupation(path, ix, t) / model.invariant_measure[ix]


@dataclass(frozen=True)
class LocalTimeVector:
    """All local times at one evaluation time; sum_x values[x] m(x) = t."""

    t: float
    values: np.ndarray


def local_time_vector(path: PathSegmentLog, model: MarkovModel, t: float) -> LocalTimeVector:
    values = local_time_matrix(path, model, np.asarray([t]))[0]
    return LocalTimeVector(t=float(t), values=values)


def local_time_matrix(
    path: PathSegmentLog, model: MarkovModel, times: np.ndarray
) -> np.ndarray:
    """Local-time vectors at several times: returns (len(times), N).

    Memory is O(segments x states); meant for the modest paths the modulus
    and oscillation experiments use.
    """
    times = np.asarray(times, dtype=float)
    if times.size and times.max() > path.total_time * (1 + 1e-12) + 1e-300:
        raise OutOfRange(f"t={times.max()} exceeds the simulated horizon {path.total_time}")
    n = model.n_states
    bounds = path.boundaries()
    cum = np.zeros((len(path) + 1, n))
    cum[np.arange(1, len(path) + 1), path.states] = path.sojourns
    np.cumsum(cum, axis=0, out=cum)
    idx = np.clip(np.searchsorted(bounds, times, side="right") - 1, 0, max(len(path) - 1, 0))
    out = cum[idx].copy()
    if len(path):
        partial = np.clip(times - bounds[idx], 0.0, path.sojourns[idx])
        out[np.arange(len(times)), path.states[idx]] += partial
    return out / model.invariant_measure[None, :]
