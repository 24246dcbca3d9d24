"""Monte Carlo checks of the local-time gap tail bounds.

Started at b, the probability that L^b - L^a ever exceeds x before the
inverse local time tau^b(y) is bounded by exp(-x^2 / (4 y h(a,b))), and the
two-sided capped form carries a factor 2.  These are one-sided inequalities:
an experiment fails only when the 99% lower confidence bound of the
empirical probability exceeds the bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engines
from .models import MarkovModel
from .potentials import hitting_moment_h

Z99 = 2.3263478740408408  # one-sided 99% normal quantile


@dataclass(frozen=True)
class TailReport:
    """One (x, y) cell: empirical tail probabilities against their bounds."""

    a: object
    b: object
    x: float
    y: float
    h: float
    reps: int
    one_sided_estimate: float
    one_sided_se: float
    one_sided_bound: float
    two_sided_estimate: float
    two_sided_se: float
    two_sided_bound: float

    @property
    def one_sided_lcb(self) -> float:
        return self.one_sided_estimate - Z99 * self.one_sided_se

    @property
    def two_sided_lcb(self) -> float:
        return self.two_sided_estimate - Z99 * self.two_sided_se

    @property
    def passed(self) -> bool:
        return (
            self.one_sided_lcb <= self.one_sided_bound
            and self.two_sided_lcb <= self.two_sided_bound
        )

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "x": self.x,
            "y": self.y,
            "h": self.h,
            "reps": self.reps,
            "one_sided": {
                "estimate": self.one_sided_estimate,
                "se": self.one_sided_se,
                "lcb99": self.one_sided_lcb,
                "bound": self.one_sided_bound,
            },
            "two_sided": {
                "estimate": self.two_sided_estimate,
                "se": self.two_sided_se,
                "lcb99": self.two_sided_lcb,
                "bound": self.two_sided_bound,
            },
            "passed": self.passed,
        }


def _proportion_se(p: float, n: int) -> float:
    return float(np.sqrt(max(p * (1.0 - p), 0.0) / n))


def tail_bound_experiment(
    model: MarkovModel,
    a,
    b,
    y: float,
    x: float,
    reps: int,
    rng: np.random.Generator,
    sup_gaps: np.ndarray | None = None,
    capped_gaps: np.ndarray | None = None,
) -> TailReport:
    """Estimate both gap-tail probabilities for one (x, y) and compare to bounds.

    Pre-simulated gap samples can be passed in so a grid of x values reuses
    one set of trajectories per y.
    """
    if a == b:
        raise ValueError("tail bound requires two distinct states")
    if x <= 0 or y <= 0:
        raise ValueError("x and y must be > 0")
    h = hitting_moment_h(model, a, b)
    if sup_gaps is None:
        sup_gaps = engines.sup_local_time_gap(model, b, a, y, reps, rng)
    if capped_gaps is None:
        capped_gaps = engines.sup_capped_gap(model, a, b, y, reps, rng)
    p1 = float(np.mean(sup_gaps > x))
    p2 = float(np.mean(capped_gaps > x))
    bound = float(np.exp(-(x**2) / (4.0 * y * h)))
    return TailReport(
        a=a,
        b=b,
        x=float(x),
        y=float(y),
        h=float(h),
        reps=reps,
        one_sided_estimate=p1,
        one_sided_se=_proportion_se(p1, reps),
        one_sided_bound=bound,
        two_sided_estimate=p2,
        two_sided_se=_proportion_se(p2, reps),
        two_sided_bound=min(1.0, 2.0 * bound),
    )
