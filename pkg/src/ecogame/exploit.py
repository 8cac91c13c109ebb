"""Optimal consumption rate for the irresponsible population.

Population 2's authority picks its degradation rate ``alpha2 >= 0`` to
maximise ``U(alpha2) = alpha2 * R(alpha2)``, where ``R`` is the asymptotic
resource level the coupled dynamics settle to. With population 1's policy
fixed, the optimum is either the largest rate that keeps the resource alive
(``alpha2* = theta1``, branch ``theorem3a``) or an interior root of
``U' = 0`` (branch ``theorem3b``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import InvalidParameter, OutOfRegion
from .model import PopulationSpec

__all__ = [
    "ExploitResult",
    "resource_function",
    "resource_array",
    "utility",
    "utility_array",
    "support_of_utility",
    "threshold_C",
    "feasible_for_exploit",
    "optimal_consumption",
    "interior_optimum",
    "brute_force_optimum",
    "golden_section_max",
    "utility_curve",
]


@dataclass(frozen=True)
class ExploitResult:
    alpha2_star: float
    resource: float
    utility: float
    branch: str  # theorem3a | theorem3b_case1 | theorem3b_case2
    support_upper: float


def resource_array(pop1: PopulationSpec, alpha2) -> np.ndarray:
    """Vectorised `resource_function`."""
    a2 = np.asarray(alpha2, dtype=float)
    if np.any(a2 < 0) or not np.all(np.isfinite(a2)):
        raise InvalidParameter("alpha2 must be finite and >= 0")
    d = pop1.deltas
    co = pop1.coefficients
    th, al = pop1.theta, pop1.alpha
    x1 = (al + a2) / (al + th)
    with np.errstate(divide="ignore", invalid="ignore"):
        n_star = -(co.b * x1 + co.d) / (co.a * x1 + co.c)
    left = d.d_rt0 * (al + a2) >= (a2 - th) * d.d_sp0
    right = d.Y >= 0
    inside = (a2 < th) & left & right
    out = np.where(inside, np.maximum(n_star, 0.0), 0.0)
    # optimistic value at the edge case alpha2 == theta1
    if d.d_rt0 > 0 and right:
        out = np.where(a2 == th, d.d_rt0 / (d.d_rt0 + d.d_tr1), out)
    return out


def resource_function(pop1: PopulationSpec, alpha2: float) -> float:
    """Asymptotic resource level when population 2 consumes at ``alpha2``.

    The sustained level n*(alpha2) while it exists, the top of the
    attracting line ``d_rt0 / (d_rt0 + d_tr1)`` at ``alpha2 == theta1``
    (when d_rt0 > 0), and 0 otherwise.
    """
    return float(resource_array(pop1, alpha2))


def utility_array(pop1: PopulationSpec, alpha2) -> np.ndarray:
    a2 = np.asarray(alpha2, dtype=float)
    return a2 * resource_array(pop1, a2)


def utility(pop1: PopulationSpec, alpha2: float) -> float:
    return float(alpha2) * resource_function(pop1, alpha2)


def support_of_utility(pop1: PopulationSpec) -> Tuple[float, float]:
    """Interval ``[0, s]`` outside which U vanishes."""
    d = pop1.deltas
    if d.d_rt0 > 0:
        return 0.0, pop1.theta
    s = (d.d_sp0 * pop1.theta + d.d_rt0 * pop1.alpha) / (d.d_sp0 - d.d_rt0)
    return 0.0, max(s, 0.0)


def threshold_C(pop1: PopulationSpec) -> float:
    """Policy threshold in d_rt0 above which consuming at theta1 is optimal.

    Positive root of ``r**2 + B r - (1 - abar) d_tr1 d_sp0`` with
    ``B = (1 - abar) d_ps1 + d_tr1``, written as ``2c / (B + sqrt(...))`` to
    avoid cancellation for small d_sp0.
    """
    d = pop1.deltas
    w = 1.0 - pop1.alpha / (pop1.alpha + pop1.theta)
    B = w * d.d_ps1 + d.d_tr1
    c = w * d.d_tr1 * d.d_sp0
    disc = B * B + 4.0 * c
    return 2.0 * c / (B + math.sqrt(disc))


def feasible_for_exploit(pop1: PopulationSpec) -> bool:
    d = pop1.deltas
    return (
        d.d_sp0 > 0
        and d.Y > 0
        and pop1.alpha * d.d_rt0 + pop1.theta * d.d_sp0 >= 0
        and d.d_rt0 + d.d_tr1 >= 0
    )


def interior_optimum(pop1: PopulationSpec) -> Tuple[float, float]:
    """Stationary point ``(alpha2, R)`` of U on the support (the sub-threshold branch).

    Evaluated without checking which branch is optimal, so it can be probed
    on the threshold itself.
    """
    d = pop1.deltas
    co = pop1.coefficients
    abar = pop1.alpha / (pop1.alpha + pop1.theta)
    g0 = co.g(abar, 0.0)  # >= 0 on the feasible set
    slope = co.dg_dn(abar)  # < 0
    phi = math.sqrt(d.Y / (co.b * slope))
    # conjugate-multiplied form of theta-scaled (1 - phi) / a1: no 1/a1 factor
    a2 = (pop1.alpha + pop1.theta) * g0 / (-co.b * (1.0 + phi))
    return a2, -g0 / (slope * (1.0 + phi))


def optimal_consumption(pop1: PopulationSpec) -> ExploitResult:
    """Closed-form maximiser of ``U(alpha2)`` for a sustainable pop1 policy."""
    if not feasible_for_exploit(pop1):
        raise OutOfRegion("pop1 policy is outside the sustainable region")
    d = pop1.deltas
    co = pop1.coefficients
    support = support_of_utility(pop1)[1]

    if d.d_rt0 >= threshold_C(pop1):
        a2 = pop1.theta
        R = d.d_rt0 / (d.d_rt0 + d.d_tr1)
        return ExploitResult(a2, R, a2 * R, "theorem3a", support)

    a2, R = interior_optimum(pop1)
    branch = "theorem3b_case1" if d.d_rt0 > 0 else "theorem3b_case2"
    return ExploitResult(a2, R, a2 * R, branch, support)


# --------------------------------------------------------------------------
# Numerical oracle

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200):
    """Maximise a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(x2)
    x = 0.5 * (lo + hi)
    return x, f(x)


def brute_force_optimum(pop1: PopulationSpec, grid_step: float = 1e-5) -> Tuple[float, float]:
    """Grid argmax of U over ``[0, theta1]`` refined by golden-section search.

    Ties go to the smaller rate; the refined point replaces the grid point
    only if it is strictly better.
    """
    if not (grid_step > 0):
        raise InvalidParameter("grid_step must be > 0")
    th = pop1.theta
    grid = np.arange(0.0, th, grid_step)
    grid = np.append(grid[grid < th], th)
    U = utility_array(pop1, grid)
    i = int(np.argmax(U))  # first occurrence
    best_a, best_u = float(grid[i]), float(U[i])
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, len(grid) - 1)])
    if hi > lo:
        a, u = golden_section_max(lambda v: utility(pop1, v), lo, hi)
        if u > best_u:
            best_a, best_u = a, u
    return best_a, best_u


def utility_curve(pop1: PopulationSpec, upper: float, step: float = 1e-3):
    """Samples ``(alpha2, R, U)`` on ``[0, upper]``; theta1 is always included."""
    n = int(math.floor(upper / step + 1e-9)) + 1
    a2 = np.round(np.arange(n) * step, 12)
    if pop1.theta <= upper and not np.any(a2 == pop1.theta):
        a2 = np.sort(np.append(a2, pop1.theta))
    R = resource_array(pop1, a2)
    return a2, R, a2 * R
