"""Potential densities, killed potentials, the intrinsic metric, and the
covariance kernel of the associated Gaussian field.

All tables are densities with respect to the invariant measure m:

* ``u_alpha(x,y)`` solves the resolvent system, ``(alpha I - Q)^-1 / m(y)``;
* ``u_killed(x,y)`` is the Green density of the chain killed on first
  hitting a base state (base row and column identically zero);
* ``d^2(x,y)`` combines the killed diagonal and off-diagonal entries and
  coincides with the expected local time at x accumulated before hitting y;
* ``Gamma(x,y) = u_killed(x,y) + u_killed(y,x)`` is symmetric positive
  semi-definite and vanishes on the base row/column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NegativeSquare, NotPSD, SingularSystem
from .models import MarkovModel, build_dual

SOLVE_TOL = 1e-9
COMPOSED_TOL = 1e-8


@dataclass(frozen=True)
class PotentialDensityTable:
    """alpha-potential densities u_alpha(x,y) with respect to m."""

    alpha: float
    table: np.ndarray


@dataclass(frozen=True)
class KilledPotentialTable:
    """Green densities of the chain killed at the base state.

    ``base`` is the state label; ``base_index`` its position; the base row
    and column of ``table`` are identically zero.
    """

    base: object
    base_index: int
    table: np.ndarray


@dataclass(frozen=True)
class IntrinsicMetric:
    """The distance d (units time^1/2) and the table h(x,y) = E_x L^x before T_y."""

    d: np.ndarray
    h: np.ndarray

    @property
    def d_squared(self) -> np.ndarray:
        return self.d**2

    def diameter(self) -> float:
        return float(self.d.max())


@dataclass(frozen=True)
class CovarianceKernel:
    """Gamma(x,y) = u_killed(x,y) + u_killed(y,x); base row/column zero."""

    base: object
    base_index: int
    gamma: np.ndarray


def resolvent_densities(model: MarkovModel, alpha: float) -> PotentialDensityTable:
    """u_alpha(x,y) = ((alpha I - Q)^-1)_{x,y} / m(y), alpha > 0."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    n = model.n_states
    a = alpha * np.eye(n) - model.generator
    try:
        resolvent = scipy.linalg.solve(a, np.eye(n))
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - valid generators are safe
        raise SingularSystem(f"resolvent solve failed at alpha={alpha}: {exc}") from exc
    table = resolvent / model.invariant_measure[None, :]
    return PotentialDensityTable(alpha=float(alpha), table=table)


def killed_densities(model: MarkovModel, base, alpha: float = 0.0) -> KilledPotentialTable:
    """Green densities of the chain killed at ``base``.

    ``alpha > 0`` gives the discounted variant (used only as the alpha -> 0
    cross-check); the default is the exact sub-system solve.
    """
    b = model.state_index(base)
    n = model.n_states
    keep = np.arange(n) != b
    sub = alpha * np.eye(n - 1) - model.generator[np.ix_(keep, keep)]
    try:
        green = scipy.linalg.solve(sub, np.eye(n - 1))
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise SingularSystem(f"killed solve failed at base={base!r}: {exc}") from exc
    table = np.zeros((n, n))
    table[np.ix_(keep, keep)] = green / model.invariant_measure[keep][None, :]
    return KilledPotentialTable(base=base, base_index=b, table=table)


def hitting_moment_h(model: MarkovModel, x, y) -> float:
    """h(x,y): expected local time at x accumulated before first hitting y.

    Equals the diagonal entry u_{killed at y}(x,x); h(x,x) is 0 by
    convention.
    """
    ix = model.state_index(x)
    iy = model.state_index(y)
    if ix == iy:
        return 0.0
    return float(killed_densities(model, y).table[ix, ix])


def hitting_moment_table(model: MarkovModel) -> np.ndarray:
    """Full table h[x, y] via one killed solve per column; zero diagonal."""
    n = model.n_states
    h = np.zeros((n, n))
    for iy, y in enumerate(model.states):
        h[:, iy] = np.diag(killed_densities(model, y).table)
    return h


def intrinsic_metric(killed: KilledPotentialTable, model: MarkovModel) -> IntrinsicMetric:
    """Build d from the killed table and h from per-column killed solves.

    d^2(x,y) = u(x,x) - u(x,y) - u(y,x) + u(y,y) with u the killed table;
    the identity d^2 = h is a checked property, not an input.
    """
    t = killed.table
    diag = np.diag(t)
    d2 = diag[:, None] - t - t.T + diag[None, :]
    if d2.min() < -1e-9:
        raise NegativeSquare(f"d^2 reached {d2.min():.3e}; killed table is invalid")
    d = np.sqrt(np.clip(d2, 0.0, None))
    np.fill_diagonal(d, 0.0)
    h = hitting_moment_table(model)
    return IntrinsicMetric(d=d, h=h)


def covariance_kernel(killed: KilledPotentialTable) -> CovarianceKernel:
    """Gamma = killed table + its transpose; eigenvalue floor -1e-9."""
    gamma = killed.table + killed.table.T
    floor = float(scipy.linalg.eigvalsh(gamma).min())
    if floor < -1e-9:
        raise NotPSD(f"covariance kernel has eigenvalue {floor:.3e} < -1e-9")
    return CovarianceKernel(base=killed.base, base_index=killed.base_index, gamma=gamma)


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    max_violation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


@dataclass(frozen=True)
class IdentityReport:
    """Max absolute violations of the exact identities, over all state pairs."""

    family_tag: str
    base: object
    checks: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def violation(self, name: str) -> float:
        for c in self.checks:
            if c.name == name:
                return c.max_violation
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "family_tag": self.family_tag,
            "base": self.base,
            "all_passed": self.all_passed,
            "checks": [
                {
                    "name": c.name,
                    "max_violation": c.max_violation,
                    "tolerance": c.tolerance,
                    "passed": c.passed,
                }
                for c in self.checks
            ],
        }


def _triangle_violation(d: np.ndarray) -> float:
    # max over (x, z, y) of d(x,y) - d(x,z) - d(z,y)
    gap = d[:, None, :] - d[:, :, None] - d[None, :, :]
    return float(gap.max())


def check_duality_identities(
    model: MarkovModel,
    base,
    alphas=(0.1, 1.0, 10.0),
    solve_tol: float = SOLVE_TOL,
    composed_tol: float = COMPOSED_TOL,
) -> IdentityReport:
    """Exercise every exact identity on one model and report max violations.

    Covered: the diagonal swap u_{T_x}(y,y) = u_{T_y}(x,x); d^2 = h; symmetry
    of h; the triangle inequality and strict positivity of d; the eigenvalue
    floor of Gamma; the dual-resolvent transpose identity; and the resolvent
    identity between the smallest and largest alpha.
    """
    killed = killed_densities(model, base)
    metric = intrinsic_metric(killed, model)
    h = metric.h
    d = metric.d
    n = model.n_states

    swap = float(np.max(np.abs(h - h.T)))  # u_{T_x}(y,y) = u_{T_y}(x,x) is h(y,x) = h(x,y)
    dsq_vs_h = float(np.max(np.abs(metric.d_squared - h)))
    tri = max(0.0, _triangle_violation(d))
    off = d[~np.eye(n, dtype=bool)]
    positivity = 0.0 if off.min() > 0 else float(abs(off.min()) + np.finfo(float).eps)

    gamma = killed.table + killed.table.T
    floor = float(scipy.linalg.eigvalsh(gamma).min())
    psd_violation = max(0.0, -floor)

    dual = build_dual(model)
    dual_gap = 0.0
    for alpha in alphas:
        u = resolvent_densities(model, alpha).table
        u_hat = resolvent_densities(dual, alpha).table
        dual_gap = max(dual_gap, float(np.max(np.abs(u_hat - u.T))))

    a0, a1 = min(alphas), max(alphas)
    ua = resolvent_densities(model, a0).table
    ub = resolvent_densities(model, a1).table
    lhs = ua - ub
    rhs = (a1 - a0) * (ua * model.invariant_measure[None, :]) @ ub
    resolvent_gap = float(np.max(np.abs(lhs - rhs)))

    checks = (
        IdentityCheck("killed_diagonal_swap", swap, solve_tol),
        IdentityCheck("dsq_equals_h", dsq_vs_h, solve_tol),
        IdentityCheck("h_symmetry", swap, solve_tol),
        IdentityCheck("triangle_inequality", tri, solve_tol),
        IdentityCheck("d_positive_off_diagonal", positivity, 0.0),
        IdentityCheck("psd_floor", psd_violation, 1e-9),
        IdentityCheck("dual_resolvent_transpose", dual_gap, solve_tol),
        IdentityCheck("resolvent_identity", resolvent_gap, composed_tol),
    )
    return IdentityReport(family_tag=model.family_tag, base=base, checks=checks)
