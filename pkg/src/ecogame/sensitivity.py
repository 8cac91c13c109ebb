"""Sensitivity of the optimally exploited resource level to pop1's policy.

``R*(d_sp0, d_rt0)`` is the resource level left once population 2 consumes
at its optimal rate. Its gradient tells population 1's authority whether an
incentive for unilateral cooperation (``u_s``, added to S0) or for mutual
cooperation (``u_r``, added to R0) raises the resource more; the ratio
``rho = dR*/dd_sp0 / dR*/dd_rt0`` compares the two.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import BoundaryPolicy, EcoGameError, InvalidParameter, OutOfRegion
from .exploit import feasible_for_exploit, optimal_consumption, threshold_C
from .model import PopulationSpec

__all__ = [
    "IncentivePerturbation",
    "SensitivityReport",
    "GridCell",
    "apply_incentive",
    "seam_distance",
    "resource_sensitivities",
    "fd_sensitivities",
    "sensitivity_ratio_map",
    "rho_array",
    "write_grid_csv",
    "BOUNDARY_EPS",
]

BOUNDARY_EPS = 1e-2
RHO_DENOM_TOL = 1e-15
# below this |a1| the textbook-form partials lose digits to 1/a1**2
_A1_TOL = 1e-4


@dataclass(frozen=True)
class IncentivePerturbation:
    u_s: float = 0.0
    u_r: float = 0.0

    def __post_init__(self):
        if not (self.u_s >= 0 and self.u_r >= 0):
            raise InvalidParameter("incentives must be nonnegative")


@dataclass(frozen=True)
class SensitivityReport:
    dR_dsp0: float
    dR_drt0: float
    rho: Optional[float]
    region: str  # theorem3a | theorem3b
    phi: Optional[float] = None


@dataclass(frozen=True)
class GridCell:
    d_sp0: float
    d_rt0: float
    region: str  # theorem3a | theorem3b | boundary | infeasible
    report: Optional[SensitivityReport] = None

    @property
    def rho(self) -> Optional[float]:
        return None if self.report is None else self.report.rho


def apply_incentive(pop1: PopulationSpec, inc: IncentivePerturbation) -> PopulationSpec:
    """Shift the policy by the incentives. The result is not re-validated."""
    d = pop1.deltas
    return pop1.with_policy(d.d_sp0 + inc.u_s, d.d_rt0 + inc.u_r)


def seam_distance(pop1: PopulationSpec) -> float:
    """Vertical (d_rt0) distance to the nearest region edge or to the C-curve."""
    d = pop1.deltas
    upper = d.d_tr1 / d.d_ps1 * d.d_sp0
    lower = -d.d_tr1
    if pop1.alpha > 0:
        lower = max(lower, -pop1.theta / pop1.alpha * d.d_sp0)
    return min(abs(d.d_rt0 - threshold_C(pop1)), d.d_rt0 - lower, upper - d.d_rt0)


def _ratio(num, den):
    return num / den if abs(den) > RHO_DENOM_TOL else None


def _stable_partials(pop1, abar, g0, slope, phi):
    """Partials of ``R* = -g0 / (slope (1 + phi))``, valid for any a1."""
    d = pop1.deltas
    co = pop1.coefficients
    R = -g0 / (slope * (1.0 + phi))
    out = []
    # (dg0, dslope, dY, db) for d_sp0 then d_rt0
    for dg0, dslope, dY, db in ((1.0 - abar, abar - 1.0, d.d_tr1, -1.0),
                                (abar, -abar, -d.d_ps1, 1.0)):
        dphi = 0.5 * phi * (dY / d.Y - db / co.b - dslope / slope)
        out.append(dg0 / (-slope * (1.0 + phi)) + R * (-dslope / slope - dphi / (1.0 + phi)))
    return out


def resource_sensitivities(pop1: PopulationSpec, boundary_eps: float = BOUNDARY_EPS
                           ) -> SensitivityReport:
    if not feasible_for_exploit(pop1):
        raise OutOfRegion("pop1 policy is outside the sustainable region")
    if seam_distance(pop1) <= boundary_eps:
        raise BoundaryPolicy(f"policy within {boundary_eps} of a region seam")
    d = pop1.deltas
    tr, ps = d.d_tr1, d.d_ps1

    if d.d_rt0 >= threshold_C(pop1):
        drt = tr / (d.d_rt0 + tr) ** 2
        return SensitivityReport(0.0, drt, _ratio(0.0, drt), "theorem3a")

    co = pop1.coefficients
    a1, b1 = co.a, co.b
    abar = pop1.alpha / (pop1.alpha + pop1.theta)
    slope = co.dg_dn(abar)
    Y = d.Y
    assert Y > 0 and b1 * slope > 0, "phi must be real in the interior-optimum region"
    phi = math.sqrt(Y / (b1 * slope))

    if abs(a1) > _A1_TOL:
        dsp = ((ps - tr) / a1 ** 2 * (1 - phi)
               + (-b1) / (2 * a1) * phi * (1 / (-b1) - tr / Y + (1 - abar) / (-slope)))
        drt = ((tr - ps) / a1 ** 2 * (1 - phi)
               + (-b1) / (2 * a1) * phi * (1 / b1 + ps / Y + abar / (-slope)))
    else:
        dsp, drt = _stable_partials(pop1, abar, co.g(abar, 0.0), slope, phi)
    return SensitivityReport(dsp, drt, _ratio(dsp, drt), "theorem3b", phi)


def fd_sensitivities(pop1: PopulationSpec, step: float = 1e-6, scheme: str = "central"
                     ) -> Tuple[float, float]:
    """Finite-difference gradient of R* by re-solving the exploitation problem.

    ``scheme`` is ``central``, ``forward`` or ``backward``; the one-sided
    variants are for policies next to a seam, where R* is not differentiable.
    """
    d = pop1.deltas

    def R(sp0, rt0):
        return optimal_consumption(pop1.with_policy(sp0, rt0)).resource

    grads = []
    for e_sp, e_rt in ((step, 0.0), (0.0, step)):
        if scheme == "central":
            g = (R(d.d_sp0 + e_sp, d.d_rt0 + e_rt) - R(d.d_sp0 - e_sp, d.d_rt0 - e_rt)) / (2 * step)
        elif scheme == "forward":
            g = (R(d.d_sp0 + e_sp, d.d_rt0 + e_rt) - R(d.d_sp0, d.d_rt0)) / step
        elif scheme == "backward":
            g = (R(d.d_sp0, d.d_rt0) - R(d.d_sp0 - e_sp, d.d_rt0 - e_rt)) / step
        else:
            raise InvalidParameter(f"unknown scheme {scheme!r}")
        grads.append(g)
    return grads[0], grads[1]


def sensitivity_ratio_map(pop1_base: PopulationSpec, sp0_grid: Sequence[float],
                          rt0_grid: Sequence[float], boundary_eps: float = BOUNDARY_EPS
                          ) -> List[List[GridCell]]:
    """Cells indexed ``[i_sp0][j_rt0]``; infeasible or near-seam cells carry no report."""
    rows = []
    for sp0 in sp0_grid:
        row = []
        for rt0 in rt0_grid:
            sp0, rt0 = float(sp0), float(rt0)
            try:
                p = pop1_base.with_policy(sp0, rt0)
            except EcoGameError:
                row.append(GridCell(sp0, rt0, "infeasible"))
                continue
            if not feasible_for_exploit(p):
                row.append(GridCell(sp0, rt0, "infeasible"))
                continue
            try:
                rep = resource_sensitivities(p, boundary_eps)
            except BoundaryPolicy:
                row.append(GridCell(sp0, rt0, "boundary"))
                continue
            row.append(GridCell(sp0, rt0, rep.region, rep))
        rows.append(row)
    return rows


def rho_array(cells: List[List[GridCell]]) -> np.ndarray:
    """Ratio grid with NaN wherever the ratio is undefined."""
    return np.array([[math.nan if c.rho is None else c.rho for c in row] for row in cells])


def _fmt(v):
    return "" if v is None else f"{v:.17g}"


def write_grid_csv(cells: List[List[GridCell]], dest) -> None:
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="") as fh:
            write_grid_csv(cells, fh)
        return
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(["d_sp0", "d_rt0", "region", "dR_dsp0", "dR_drt0", "rho"])
    for row in cells:
        for c in row:
            r = c.report
            w.writerow([_fmt(c.d_sp0), _fmt(c.d_rt0), c.region,
                        _fmt(r and r.dR_dsp0), _fmt(r and r.dR_drt0), _fmt(c.rho)])
