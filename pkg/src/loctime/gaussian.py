"""Sampling the Gaussian field attached to the killed potentials, and the
recurrent-case local-time/squared-field distributional identity.

The field phi has covariance Gamma(x,y) = u_killed(x,y) + u_killed(y,x) and
vanishes at the base state.  Gamma is legitimately rank-deficient (zero base
row), so the factor comes from a symmetric eigendecomposition with clipping
rather than a Cholesky with jitter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.stats

from .errors import InsufficientData, NotPSD, NotSymmetric
from .models import MarkovModel
from .potentials import covariance_kernel, killed_densities
from . import engines


@dataclass(frozen=True)
class GaussianSampler:
    """Factor F with F F^T = Gamma; draws are F z with z standard normal."""

    gamma: np.ndarray
    factor: np.ndarray

    @property
    def rank(self) -> int:
        return self.factor.shape[1]

    @property
    def n_states(self) -> int:
        return self.gamma.shape[0]

    def reconstruction_error(self) -> float:
        return float(np.max(np.abs(self.factor @ self.factor.T - self.gamma)))


def build_sampler(gamma: np.ndarray, tol: float = 1e-9) -> GaussianSampler:
    """Eigendecompose a symmetric covariance table into a sampling factor.

    Eigenvalues below -tol raise NotPSD; eigenvalues within tol of zero are
    treated as exact zeros (they are structural for these kernels), and only
    the remaining positive directions are kept.  Rows with zero diagonal are
    forced to exact zero so degenerate coordinates sample as identically 0.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1]:
        raise ValueError("covariance table must be square")
    if np.max(np.abs(gamma - gamma.T)) > tol:
        raise ValueError("covariance table must be symmetric")
    if gamma.shape[0] == 0 or not np.any(gamma):
        return GaussianSampler(gamma=gamma, factor=np.zeros((gamma.shape[0], 0)))
    w, v = scipy.linalg.eigh(gamma)
    if w.min() < -tol:
        raise NotPSD(f"eigenvalue {w.min():.3e} below -{tol:.1e}")
    keep = w > tol
    factor = v[:, keep] * np.sqrt(w[keep])[None, :]
    factor[np.diag(gamma) == 0.0, :] = 0.0
    err = float(np.max(np.abs(factor @ factor.T - gamma)))
    if err > max(tol, 1e-8):
        raise NotPSD(f"factor reconstruction error {err:.3e} too large")
    return GaussianSampler(gamma=gamma, factor=factor)


def sample_field(
    sampler: GaussianSampler, reps: int, rng: np.random.Generator
) -> np.ndarray:
    """``reps`` independent field draws, shape (reps, N)."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    z = rng.standard_normal((reps, sampler.rank))
    return z @ sampler.factor.T


@dataclass(frozen=True)
class StateGof:
    state: object
    mean_target: float
    mean_lhs: float
    mean_rhs: float
    mean_z_lhs: float
    mean_z_rhs: float
    var_target: float
    var_lhs: float
    var_rhs: float
    var_z_lhs: float
    var_z_rhs: float
    ks: float
    pvalue: float

    def passed(self, level: float) -> bool:
        moments = max(
            abs(self.mean_z_lhs), abs(self.mean_z_rhs), abs(self.var_z_lhs), abs(self.var_z_rhs)
        )
        return moments <= 3.0 and self.pvalue >= level


@dataclass(frozen=True)
class GofResult:
    """Per-state comparison of the two sides of the local-time identity."""

    n: float
    reps: int
    level: float  # Bonferroni-adjusted per-state KS level
    states: tuple

    @property
    def all_passed(self) -> bool:
        return all(s.passed(self.level) for s in self.states)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "reps": self.reps,
            "ks_level": self.level,
            "states": [
                {
                    "state": s.state,
                    "mean": {
                        "target": s.mean_target,
                        "lhs": s.mean_lhs,
                        "rhs": s.mean_rhs,
                        "z_lhs": s.mean_z_lhs,
                        "z_rhs": s.mean_z_rhs,
                    },
                    "var": {
                        "target": s.var_target,
                        "lhs": s.var_lhs,
                        "rhs": s.var_rhs,
                        "z_lhs": s.var_z_lhs,
                        "z_rhs": s.var_z_rhs,
                    },
                    "ks": s.ks,
                    "pvalue": s.pvalue,
                    "passed": s.passed(self.level),
                }
                for s in self.states
            ],
            "all_passed": self.all_passed,
        }


def _mean_z(sample: np.ndarray, target: float) -> tuple[float, float]:
    est = float(sample.mean())
    se = float(sample.std(ddof=1) / np.sqrt(len(sample)))
    return est, (est - target) / se if se > 0 else 0.0


def _var_z(sample: np.ndarray, target: float) -> tuple[float, float]:
    centered = (sample - sample.mean()) ** 2
    est = float(sample.var(ddof=1))
    se = float(centered.std(ddof=1) / np.sqrt(len(sample)))
    return est, (est - target) / se if se > 0 else 0.0


def isomorphism_experiment(
    model: MarkovModel,
    base,
    n: float,
    reps: int,
    rng: np.random.Generator,
) -> GofResult:
    """Check, for a reversible model, that local time at tau^base(n) plus half a
    squared field equals in law the squared field shifted by sqrt(2n), halved.

    The auxiliary field psi has covariance u_killed (half of Gamma); matching
    first moments forces the sqrt(2n) shift.  Both sides then share mean
    n + u_killed(x,x)/2 and variance n*Gamma(x,x) + u_killed(x,x)^2/2, and a
    per-state two-sample KS (Bonferroni over states) compares full laws.
    """
    if not model.is_reversible():
        raise NotSymmetric("the identity is stated for reversible models only")
    if n <= 0:
        raise ValueError("n must be > 0")
    if reps < 100:
        raise InsufficientData("need at least 100 replicas")
    killed = killed_densities(model, base)
    gamma = covariance_kernel(killed).gamma
    # For a reversible model the killed table is symmetric, so half of Gamma
    # is exactly u_killed and is symmetric to the last bit.
    psi_sampler = build_sampler(0.5 * gamma)

    lt = engines.local_times_at_inverse_local_time(model, base, n, reps, rng)
    psi = sample_field(psi_sampler, reps, rng)
    psi_rhs = sample_field(psi_sampler, reps, rng)
    lhs = lt + 0.5 * psi**2
    rhs = 0.5 * (psi_rhs + np.sqrt(2.0 * n)) ** 2

    b = killed.base_index
    others = [i for i in range(model.n_states) if i != b]
    level = 0.05 / len(others)
    entries = []
    for i in others:
        u_xx = float(killed.table[i, i])
        mean_target = n + 0.5 * u_xx
        var_target = n * float(gamma[i, i]) + 0.5 * u_xx**2
        ml, mzl = _mean_z(lhs[:, i], mean_target)
        mr, mzr = _mean_z(rhs[:, i], mean_target)
        vl, vzl = _var_z(lhs[:, i], var_target)
        vr, vzr = _var_z(rhs[:, i], var_target)
        ks = scipy.stats.ks_2samp(lhs[:, i], rhs[:, i])
        entries.append(
            StateGof(
                state=model.states[i],
                mean_target=mean_target,
                mean_lhs=ml,
                mean_rhs=mr,
                mean_z_lhs=mzl,
                mean_z_rhs=mzr,
                var_target=var_target,
                var_lhs=vl,
                var_rhs=vr,
                var_z_lhs=vzl,
                var_z_rhs=vzr,
                ks=float(ks.statistic),
                pvalue=float(ks.pvalue),
            )
        )
    return GofResult(n=float(n), reps=reps, level=level, states=tuple(entries))
