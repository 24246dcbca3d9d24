"""Metric-geometry toolkit: balls, entropy integrals, and measure search.

For a finite metric space the ball-mass function is a step function of the
radius, so the per-point integrand sqrt(ln 1/mu(B(z,v))) is piecewise
constant and the entropy functional

    eta(delta) = max over z of integral_0^delta sqrt(ln 1/mu(B(z,v))) dv

is computed exactly as a finite sum of interval lengths times step values.
Balls are closed, which makes the ball mass right-continuous in the radius.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidState, UnsupportedMeasure
from .potentials import IntrinsicMetric

METRIC_TOL = 1e-9


@dataclass(frozen=True)
class FiniteMetricSpace:
    """A finite index set with the intrinsic distance restricted to it."""

    points: tuple
    dist: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        object.__setattr__(self, "dist", d)
        k = len(self.points)
        if d.shape != (k, k):
            raise ValueError("distance table shape does not match points")
        if np.max(np.abs(d - d.T)) > METRIC_TOL or np.any(np.diag(d) != 0):
            raise ValueError("distance table is not symmetric with zero diagonal")
        if k > 1:
            off = d[~np.eye(k, dtype=bool)]
            if off.min() <= 0:
                raise ValueError("distinct points at zero distance")
        gap = d[:, None, :] - d[:, :, None] - d[None, :, :]
        if gap.max() > METRIC_TOL:
            raise ValueError("triangle inequality violated")
        d.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def diameter(self) -> float:
        return float(self.dist.max())

    def index(self, z) -> int:
        try:
            return self.points.index(z)
        except ValueError:
            raise InvalidState(f"point {z!r} not in the space") from None


def metric_space(metric: IntrinsicMetric, labels, subset=None) -> FiniteMetricSpace:
    """Restrict an intrinsic metric to a subset of the model's states."""
    labels = tuple(labels)
    if subset is None:
        subset = labels
    idx = []
    for z in subset:
        if z not in labels:
            raise InvalidState(f"state {z!r} not in the model")
        idx.append(labels.index(z))
    idx = np.asarray(idx, dtype=int)
    return FiniteMetricSpace(points=tuple(subset), dist=metric.d[np.ix_(idx, idx)])


@dataclass(frozen=True)
class WeightMeasure:
    """Probability weights on the points of a space; support may be proper."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")
        w.setflags(write=False)


def uniform_weights(space: FiniteMetricSpace) -> WeightMeasure:
    return WeightMeasure(np.full(space.size, 1.0 / space.size))


def ball_mass(space: FiniteMetricSpace, mu: WeightMeasure, z, v: float) -> float:
    """mu of the closed ball of radius v around z."""
    if v < 0:
        raise ValueError("radius must be >= 0")
    i = space.index(z)
    return float(mu.weights[space.dist[i] <= v].sum())


def _point_steps(space: FiniteMetricSpace, mu: WeightMeasure, i: int):
    """Radii and step values of the integrand around point i.

    Returns (radii, values): the integrand equals values[j] on
    [radii[j], radii[j+1]) and 0 beyond the largest radius.
    """
    order = np.argsort(space.dist[i], kind="stable")
    d_sorted = space.dist[i][order]
    mass = np.cumsum(mu.weights[order])
    radii, first = np.unique(d_sorted, return_index=True)
    cum = mass[np.searchsorted(d_sorted, radii, side="right") - 1]
    with np.errstate(divide="ignore"):
        vals = np.sqrt(np.maximum(np.log(np.where(cum > 0, 1.0 / cum, np.inf)), 0.0))
    return radii, vals


def _integral_at(radii: np.ndarray, vals: np.ndarray, delta: float) -> float:
    if delta <= 0:
        return 0.0
    hi = np.append(radii[1:], np.inf)
    lengths = np.clip(np.minimum(hi, delta) - radii, 0.0, None)
    active = lengths > 0
    if np.any(active & np.isinf(vals)):
        return np.inf
    return float(np.sum(lengths[active] * vals[active]))


@dataclass(frozen=True)
class EntropyProfile:
    """Exact entropy functional of one (space, measure) pair.

    ``breakpoints`` are the distinct pairwise distances; ``eta`` and
    ``argmax_point`` are evaluated on ``grid`` (the breakpoints merged with
    any requested deltas).  ``per_point`` rows give each point's integral on
    the same grid.
    """

    space: FiniteMetricSpace
    grid: np.ndarray
    breakpoints: np.ndarray
    eta: np.ndarray
    argmax_point: tuple
    per_point: np.ndarray
    _steps: tuple

    def eta_at(self, delta: float) -> float:
        """Exact eta(delta) for any delta >= 0."""
        return max(_integral_at(r, v, delta) for r, v in self._steps)

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.eta)))


def entropy_profile(
    space: FiniteMetricSpace,
    mu: WeightMeasure,
    delta_grid=None,
    allow_infinite: bool = False,
) -> EntropyProfile:
    """Exact piecewise evaluation of the entropy functional.

    If some point has zero weight the profile is infinite; that raises
    UnsupportedMeasure unless ``allow_infinite`` is set.
    """
    if len(mu.weights) != space.size:
        raise ValueError("measure size does not match the space")
    if np.any(mu.weights == 0) and not allow_infinite:
        raise UnsupportedMeasure(
            "a point of the space has zero mass; eta is infinite "
            "(pass allow_infinite=True to get the infinite profile)"
        )
    steps = tuple(_point_steps(space, mu, i) for i in range(space.size))
    breakpoints = np.unique(space.dist)
    grid = breakpoints
    if delta_grid is not None:
        grid = np.unique(np.concatenate([breakpoints, np.asarray(delta_grid, dtype=float)]))
    per_point = np.array([[_integral_at(r, v, g) for g in grid] for r, v in steps])
    eta = per_point.max(axis=0)
    argmax = tuple(space.points[i] for i in per_point.argmax(axis=0))
    return EntropyProfile(
        space=space,
        grid=grid,
        breakpoints=breakpoints,
        eta=eta,
        argmax_point=argmax,
        per_point=per_point,
        _steps=steps,
    )


def riemann_entropy_oracle(
    space: FiniteMetricSpace, mu: WeightMeasure, delta: float, rel_step: float = 1e-4
) -> float:
    """Midpoint Riemann sum of the entropy integrand (independent check)."""
    n = max(int(np.ceil(1.0 / rel_step)), 10)
    v = (np.arange(n) + 0.5) * (delta / n)
    best = 0.0
    for i in range(space.size):
        mass = (mu.weights[None, :] * (space.dist[i][None, :] <= v[:, None])).sum(axis=1)
        with np.errstate(divide="ignore"):
            integrand = np.sqrt(np.maximum(np.log(1.0 / mass), 0.0))
        best = max(best, float(integrand.sum() * delta / n))
    return best


def optimize_weights(
    space: FiniteMetricSpace, iters: int = 200, step: float = 0.5
) -> WeightMeasure:
    """Coordinate-wise multiplicative search for a measure with smaller eta(D).

    Starts from uniform weights; each proposal scales one coordinate up or
    down, renormalizes, and is kept only if eta at the diameter strictly
    improves.  The best measure seen (including the start) is returned, so
    the result never exceeds the uniform value.
    """
    mu = uniform_weights(space)
    if space.size == 1:
        return mu
    d = space.diameter

    def score(w):
        mu_w = WeightMeasure(w)
        return max(
            _integral_at(*_point_steps(space, mu_w, i), d) for i in range(space.size)
        )

    best_w = mu.weights.copy()
    best = score(best_w)
    gamma = step
    used = 0
    while used < iters and gamma > 1e-4:
        improved = False
        for i in range(space.size):
            for factor in (1.0 + gamma, 1.0 / (1.0 + gamma)):
                if used >= iters:
                    break
                cand = best_w.copy()
                cand[i] *= factor
                cand /= cand.sum()
                val = score(cand)
                used += 1
                if val < best - 1e-15:
                    best, best_w = val, cand
                    improved = True
        if not improved:
            gamma *= 0.5
    return WeightMeasure(best_w)
