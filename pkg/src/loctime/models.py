"""Finite-state continuous-time Markov models and their time reversals.

A model is a generator rate table ``Q`` on an ordered finite state set,
together with the invariant probability ``m`` (the reference measure for
every density in the package).  All built-in families are irreducible and
positive recurrent, so local times exist at every state and the dual
process (the m-time-reversal) is again a chain of the same kind.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ConfigError, InvalidState, NonIrreducible

ROW_SUM_TOL = 1e-12
INVARIANT_TOL = 1e-10


@dataclass(frozen=True)
class MarkovModel:
    """Validated irreducible chain: states, rate table Q, invariant measure m.

    Immutable after construction (arrays are set read-only), so instances
    are safe to share across workers.
    """

    states: tuple
    generator: np.ndarray
    invariant_measure: np.ndarray
    family_tag: str = "custom"
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        q = np.ascontiguousarray(np.asarray(self.generator, dtype=float))
        m = np.ascontiguousarray(np.asarray(self.invariant_measure, dtype=float))
        object.__setattr__(self, "generator", q)
        object.__setattr__(self, "invariant_measure", m)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.states)})
        _validate_generator(q, len(self.states))
        if m.shape != (q.shape[0],):
            raise ConfigError("invariant_measure: wrong length")
        if np.any(m <= 0):
            raise ConfigError("invariant_measure: entries must be positive")
        if abs(m.sum() - 1.0) > ROW_SUM_TOL * len(m) * 10:
            raise ConfigError("invariant_measure: must sum to 1")
        if np.max(np.abs(m @ q)) > INVARIANT_TOL:
            raise ConfigError("invariant_measure: m.Q = 0 violated beyond 1e-10")
        q.setflags(write=False)
        m.setflags(write=False)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def state_index(self, label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise InvalidState(f"unknown state {label!r}") from None

    def exit_rates(self) -> np.ndarray:
        return -np.diag(self.generator)

    def is_reversible(self, tol: float = 1e-12) -> bool:
        """Detailed balance m(x)Q(x,y) = m(y)Q(y,x) within ``tol``."""
        flow = self.invariant_measure[:, None] * self.generator
        return bool(np.max(np.abs(flow - flow.T)) <= tol)


def _validate_generator(q: np.ndarray, n_labels: int) -> None:
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ConfigError("generator: must be a square table")
    n = q.shape[0]
    if n != n_labels:
        raise ConfigError("generator: size does not match the state labels")
    if n < 2:
        raise ConfigError("generator: need at least 2 states")
    off = q.copy()
    np.fill_diagonal(off, 0.0)
    if np.any(off < 0):
        raise ConfigError("generator: off-diagonal rates must be >= 0")
    if np.max(np.abs(q.sum(axis=1))) > ROW_SUM_TOL * max(1.0, np.max(np.abs(q))):
        raise ConfigError("generator: rows must sum to 0 (within 1e-12)")
    adj = csr_matrix((off > 0).astype(np.int8))
    n_comp, _ = connected_components(adj, directed=True, connection="strong")
    if n_comp != 1:
        raise NonIrreducible("rate graph is not strongly connected")


def invariant_measure(q: np.ndarray) -> np.ndarray:
    """Solve m.Q = 0, sum(m) = 1 for an irreducible generator."""
    n = q.shape[0]
    a = q.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        m = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by irreducibility
        raise NonIrreducible(f"stationary solve failed: {exc}") from exc
    return m


def _finish(q: np.ndarray, tag: str, labels=None) -> MarkovModel:
    q = np.asarray(q, dtype=float)
    _validate_generator(q, q.shape[0] if labels is None else len(labels))
    m = invariant_measure(q)
    if labels is None:
        labels = tuple(range(q.shape[0]))
    return MarkovModel(tuple(labels), q, m, family_tag=tag)


def two_state(a: float = 1.0, b: float = 1.0) -> MarkovModel:
    """Two states with rate ``a`` for 0 -> 1 and ``b`` for 1 -> 0."""
    if a <= 0 or b <= 0:
        raise ConfigError("two_state: rates a, b must be > 0")
    q = np.array([[-a, a], [b, -b]], dtype=float)
    return _finish(q, "two_state")


def birth_death(n: int = 5, up=1.0, down=1.0) -> MarkovModel:
    """Nearest-neighbour chain on {0..n-1}; ``up``/``down`` scalar or per-edge."""
    n = int(n)
    if n < 2:
        raise ConfigError("birth_death: n must be >= 2")
    up = np.broadcast_to(np.asarray(up, dtype=float), (n - 1,)).copy()
    down = np.broadcast_to(np.asarray(down, dtype=float), (n - 1,)).copy()
    if np.any(up <= 0) or np.any(down <= 0):
        raise ConfigError("birth_death: rates must be > 0")
    q = np.zeros((n, n))
    for i in range(n - 1):
        q[i, i + 1] = up[i]
        q[i + 1, i] = down[i]
    np.fill_diagonal(q, -q.sum(axis=1))
    return _finish(q, "birth_death")


def cycle_walk(n: int, p: float = 1.0, q: float = 1.0) -> MarkovModel:
    """Walk on the n-cycle: clockwise rate ``p``, counterclockwise rate ``q``."""
    n = int(n)
    if n < 2:
        raise ConfigError("cycle_walk: n must be >= 2")
    if p <= 0 or q <= 0:
        raise ConfigError("cycle_walk: rates p, q must be > 0")
    gen = np.zeros((n, n))
    for i in range(n):
        gen[i, (i + 1) % n] += p
        gen[i, (i - 1) % n] += q
    np.fill_diagonal(gen, 0.0)
    np.fill_diagonal(gen, -gen.sum(axis=1))
    return _finish(gen, "cycle_walk")


def jump_cycle(n: int = 16, tail_exponent: float = 0.5, total_rate: float = 1.0) -> MarkovModel:
    """Cycle with heavy-tailed jumps: rate to i+k falls off like min(k, n-k)^-(1+a).

    Translation invariant, hence uniform invariant measure; the slow tail
    makes the killed-potential systems noticeably worse conditioned than the
    nearest-neighbour families.
    """
    n = int(n)
    if n < 3:
        raise ConfigError("jump_cycle: n must be >= 3")
    if tail_exponent <= 0 or total_rate <= 0:
        raise ConfigError("jump_cycle: tail_exponent and total_rate must be > 0")
    k = np.arange(1, n)
    w = np.minimum(k, n - k) ** (-(1.0 + tail_exponent))
    w *= total_rate / w.sum()
    gen = np.zeros((n, n))
    for i in range(n):
        gen[i, (i + k) % n] = w
    np.fill_diagonal(gen, -gen.sum(axis=1))
    return _finish(gen, "jump_cycle")


def custom_model(generator, labels=None) -> MarkovModel:
    """Model from an explicit rate table (validated like the built-ins)."""
    q = np.asarray(generator, dtype=float)
    if labels is not None and len(labels) != q.shape[0]:
        raise ConfigError("labels: length does not match the rate table")
    return _finish(q, "custom", labels=labels)


FAMILY_SCHEMAS = {
    "two_state": {"a": "rate 0->1 (default 1.0)", "b": "rate 1->0 (default 1.0)"},
    "birth_death": {
        "n": "number of states (default 5)",
        "up": "scalar or per-edge up rates (default 1.0)",
        "down": "scalar or per-edge down rates (default 1.0)",
    },
    "cycle_walk": {
        "n": "cycle length (required)",
        "p": "clockwise rate (default 1.0)",
        "q": "counterclockwise rate (default 1.0)",
    },
    "jump_cycle": {
        "n": "cycle length (default 16)",
        "tail_exponent": "jump-law tail exponent (default 0.5)",
        "total_rate": "per-state exit rate (default 1.0)",
    },
    "custom": {"generator": "explicit square rate table", "labels": "optional state labels"},
}

_FACTORIES = {
    "two_state": two_state,
    "birth_death": birth_death,
    "cycle_walk": cycle_walk,
    "jump_cycle": jump_cycle,
    "custom": custom_model,
}


def build_model(family_tag: str, params: dict | None = None) -> MarkovModel:
    """Build and validate a model of the named family."""
    if family_tag not in _FACTORIES:
        raise ConfigError(
            f"model.family_tag: unknown family {family_tag!r}; choose from {sorted(_FACTORIES)}"
        )
    params = dict(params or {})
    try:
        return _FACTORIES[family_tag](**params)
    except TypeError as exc:
        raise ConfigError(f"model.params: {exc}") from exc


def build_dual(model: MarkovModel) -> MarkovModel:
    """m-time-reversal: Qhat(x,y) = m(y) Q(y,x) / m(x); same invariant measure."""
    m = model.invariant_measure
    q_hat = (model.generator.T * m[None, :]) / m[:, None]
    # The transpose construction preserves row sums only up to roundoff.
    q_hat = q_hat.copy()
    np.fill_diagonal(q_hat, 0.0)
    np.fill_diagonal(q_hat, -q_hat.sum(axis=1))
    return MarkovModel(model.states, q_hat, m, family_tag=model.family_tag)


def catalog_models() -> dict[str, MarkovModel]:
    """The six desk-scale models every identity and suite is checked on."""
    return {
        "two_state(1,1)": two_state(1.0, 1.0),
        "two_state(2,3)": two_state(2.0, 3.0),
        "birth_death(5)": birth_death(5),
        "cycle_walk(3,2,1)": cycle_walk(3, 2.0, 1.0),
        "cycle_walk(8,1,1)": cycle_walk(8, 1.0, 1.0),
        "jump_cycle(16)": jump_cycle(16),
    }
