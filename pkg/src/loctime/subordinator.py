"""The inverse-local-time subordinator seen through a second state's clock.

Watched at the inverse local time of b, the local time at a is a driftless
subordinator whose jumps are exponential with mean h(a,b), giving the
Laplace exponent lambda / (lambda h + 1).  The experiment checks the
empirical Laplace transform on a grid, the unit mean (no drift, compensated
jumps), and the exponential law of the first jump.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.stats

from . import engines
from .errors import InsufficientData
from .models import MarkovModel
from .potentials import hitting_moment_h


def levy_exponent(lam: float, h: float) -> float:
    """lambda / (lambda h + 1): the subordinator's Laplace exponent."""
    return lam / (lam * h + 1.0)


@dataclass(frozen=True)
class LaplacePoint:
    lam: float
    target: float
    estimate: float
    se: float

    @property
    def z(self) -> float:
        return (self.estimate - self.target) / self.se if self.se > 0 else 0.0

    @property
    def passed(self) -> bool:
        return abs(self.z) <= 3.0


@dataclass(frozen=True)
class LaplaceReport:
    a: object
    b: object
    t: float
    h: float
    reps: int
    points: tuple
    mean_target: float
    mean_estimate: float
    mean_se: float
    first_jump_ks: float
    first_jump_pvalue: float

    @property
    def mean_z(self) -> float:
        return (self.mean_estimate - self.mean_target) / self.mean_se

    @property
    def all_passed(self) -> bool:
        return (
            all(p.passed for p in self.points)
            and abs(self.mean_z) <= 3.0
            and self.first_jump_pvalue >= 0.05
        )

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "t": self.t,
            "h": self.h,
            "reps": self.reps,
            "laplace": [
                {
                    "lambda": p.lam,
                    "target": p.target,
                    "estimate": p.estimate,
                    "se": p.se,
                    "z": p.z,
                    "passed": p.passed,
                }
                for p in self.points
            ],
            "mean": {
                "target": self.mean_target,
                "estimate": self.mean_estimate,
                "se": self.mean_se,
                "z": self.mean_z,
            },
            "first_jump": {
                "ks": self.first_jump_ks,
                "pvalue": self.first_jump_pvalue,
                "passed": self.first_jump_pvalue >= 0.05,
            },
            "all_passed": self.all_passed,
        }


def subordinator_experiment(
    model: MarkovModel,
    a,
    b,
    lambda_grid,
    t: float,
    reps: int,
    rng: np.random.Generator,
) -> LaplaceReport:
    """Sample L^a at tau^b(t) and the first-jump law; compare to closed forms.

    The first positive value of the subordinator equals the local time at a
    accumulated before first hitting b when started at a, which is sampled
    with its own replicas.
    """
    if a == b:
        raise ValueError("subordinator experiment requires two distinct states")
    if reps < 2:
        raise InsufficientData("need at least 2 replicas")
    lambda_grid = [float(l) for l in lambda_grid]
    if any(l <= 0 for l in lambda_grid):
        raise ValueError("lambda grid must be positive")
    h = hitting_moment_h(model, a, b)
    ia = model.state_index(a)

    lt = engines.local_times_at_inverse_local_time(model, b, t, reps, rng)
    la = lt[:, ia]
    points = []
    for lam in lambda_grid:
        vals = np.exp(-lam * la)
        points.append(
            LaplacePoint(
                lam=lam,
                target=float(np.exp(-t * levy_exponent(lam, h))),
                estimate=float(vals.mean()),
                se=float(vals.std(ddof=1) / np.sqrt(reps)),
            )
        )

    occ = engines.occupations_at_hitting(model, a, b, reps, rng)
    first_jumps = occ[:, ia] / model.invariant_measure[ia]
    ks = scipy.stats.kstest(first_jumps, scipy.stats.expon(scale=h).cdf)

    return LaplaceReport(
        a=a,
        b=b,
        t=float(t),
        h=float(h),
        reps=reps,
        points=tuple(points),
        mean_target=float(t),
        mean_estimate=float(la.mean()),
        mean_se=float(la.std(ddof=1) / np.sqrt(reps)),
        first_jump_ks=float(ks.statistic),
        first_jump_pvalue=float(ks.pvalue),
    )
