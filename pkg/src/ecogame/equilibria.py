"""Closed-form fixed points, their eigenvalues, and analytic regime labels.

Under the irresponsible-population assumption x2 -> 0, so only fixed points
on the face ``x2 = 0`` can attract. `enumerate_fixed_points` lists all of
them (plus the never-feasible abundant interior point) with eigenvalues of
the full 3x3 Jacobian.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import DEGENERATE_TOL, jacobian
from .errors import BoundaryPolicy, DegenerateDenominator, OutOfRegion
from .model import PopulationSpec, SystemConfig

__all__ = [
    "FixedPointRecord",
    "RegimeLabel2Pop",
    "RegimeLabel1Pop",
    "sustained_fixed_point",
    "n_star_derivative",
    "cubic_roots",
    "eigenvalues_3x3",
    "stability_verdict",
    "enumerate_fixed_points",
    "classify_two_population",
    "classify_single_population",
    "fixed_points_to_json",
    "HYPERBOLIC_TOL",
    "TABLE_ROWS",
]

HYPERBOLIC_TOL = 1e-12
BOUNDARY_TOL = 1e-12

TABLE_ROWS = ("zA", "zB", "zC1", "zC2", "zC3", "zC4", "line_segment", "interior_abundant")


@dataclass(frozen=True)
class FixedPointRecord:
    table_row: str
    point: Tuple[float, float, float]
    exists: bool
    eigenvalues: Tuple[complex, ...] = ()
    stability: Optional[str] = None  # stable | unstable | non_hyperbolic | line_attracting
    n_max: Optional[float] = None  # attracting sub-segment [0, n_max) of the line row

    @property
    def max_real_part(self) -> float:
        return max(e.real for e in self.eigenvalues)


@dataclass(frozen=True)
class RegimeLabel2Pop:
    kind: str  # tragedy | sustained | line_segment
    item: str  # which case of the two-population regime rules applied: 1, 2a, 2b, 3
    x1_star: Optional[float] = None
    n_star: Optional[float] = None
    n_max: Optional[float] = None

    def __str__(self):
        if self.kind == "sustained":
            return f"sustained({self.x1_star:.6g}, {self.n_star:.6g})"
        if self.kind == "line_segment":
            return f"line_segment({self.n_max:.6g})"
        return self.kind


@dataclass(frozen=True)
class RegimeLabel1Pop:
    kind: str  # sustained | otoc | tragedy
    x_star: Optional[float] = None
    n_star: Optional[float] = None

    def __str__(self):
        if self.kind == "sustained":
            return f"sustained({self.x_star:.6g}, {self.n_star:.6g})"
        return self.kind


# --------------------------------------------------------------------------
# Sustained fixed point

def sustained_fixed_point(pop1: PopulationSpec, alpha2: float) -> Tuple[float, float]:
    """``(x1*, n*)``: the drive balance fixes x1*, then g1(x1*, n*) = 0 fixes n*.

    No range check on n*; callers decide whether it lies in (0, 1).
    """
    co = pop1.coefficients
    x1 = (pop1.alpha + alpha2) / (pop1.alpha + pop1.theta)
    slope = co.dg_dn(x1)
    if slope == 0:
        raise DegenerateDenominator("dg1/dn vanishes at x1*")
    return x1, -(co.b * x1 + co.d) / slope


def n_star_derivative(pop1: PopulationSpec, alpha2: float) -> float:
    """Sensitivity of the sustained resource level to pop2's consumption rate.

    Equals ``-Y / ((alpha1 + theta1) * dg1/dn(x1*)**2)``: negative whenever
    the policy lies below the OTOC line (Y > 0).
    """
    co = pop1.coefficients
    x1, _ = sustained_fixed_point(pop1, alpha2)
    slope = co.dg_dn(x1)
    g_at_zero = co.g(x1, 0.0)
    numerator = g_at_zero * co.a - co.dg_dx(0.0) * slope
    return numerator / ((pop1.alpha + pop1.theta) * slope ** 2)


# --------------------------------------------------------------------------
# Eigenvalues

def _quadratic_roots(B: float, C: float) -> Tuple[complex, complex]:
    """Roots of ``z**2 + B z + C`` without cancellation."""
    disc = B * B - 4 * C
    if disc >= 0:
        q = -0.5 * (B + math.copysign(math.sqrt(disc), B))
        if q == 0:
            return 0j, 0j
        return complex(q), complex(C / q)
    s = math.sqrt(-disc)
    return complex(-B / 2, s / 2), complex(-B / 2, -s / 2)


def cubic_roots(p2: float, p1: float, p0: float) -> List[complex]:
    """Roots of the monic cubic ``z**3 + p2 z**2 + p1 z + p0``.

    One real root comes from Cardano's formula (trigonometric form when all
    three roots are real), is polished by Newton steps, and the remaining
    quadratic factor is solved directly. Coefficients are first rescaled so
    the largest root is of order one, which keeps the intermediate powers
    clear of underflow and overflow.
    """
    size = max(abs(p2), math.sqrt(abs(p1)), abs(p0) ** (1.0 / 3.0))
    if size == 0.0:
        return [0j, 0j, 0j]
    k = math.frexp(size)[1]  # power-of-two scale: exact, and never underflows
    roots = _monic_cubic_roots(math.ldexp(p2, -k), math.ldexp(p1, -2 * k), math.ldexp(p0, -3 * k))
    return [complex(math.ldexp(z.real, k), math.ldexp(z.imag, k)) for z in roots]


def _monic_cubic_roots(p2: float, p1: float, p0: float) -> List[complex]:
    shift = p2 / 3.0
    p = p1 - p2 * p2 / 3.0
    q = 2.0 * p2 ** 3 / 27.0 - p2 * p1 / 3.0 + p0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if p == 0.0 and q == 0.0:
        t = 0.0
    elif disc > 0 or p >= 0:
        u = -q / 2.0 - math.copysign(math.sqrt(disc), q)
        u = math.copysign(abs(u) ** (1.0 / 3.0), u)
        t = u - p / (3.0 * u) if u != 0 else 0.0
    else:
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m) if p != 0 else 0.0
        arg = min(1.0, max(-1.0, arg))
        # k = 0 branch gives the root of largest magnitude; best for deflation
        t = m * math.cos(math.acos(arg) / 3.0)
    r = t - shift

    def f(z):
        return ((z + p2) * z + p1) * z + p0

    for _ in range(3):
        df = (3.0 * r + 2.0 * p2) * r + p1
        if df == 0:
            break
        step = f(r) / df
        cand = r - step
        if abs(f(cand)) >= abs(f(r)):
            break
        r = cand

    B = p2 + r
    C = p1 + r * B
    z1, z2 = _quadratic_roots(B, C)
    return sorted([complex(r), z1, z2], key=lambda z: (z.real, z.imag))


def eigenvalues_3x3(J: np.ndarray) -> List[complex]:
    """Eigenvalues of a 3x3 matrix from its characteristic cubic."""
    J = np.asarray(J, dtype=float)
    tr = J[0, 0] + J[1, 1] + J[2, 2]
    minors = (J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
              + J[0, 0] * J[2, 2] - J[0, 2] * J[2, 0]
              + J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
    det = (J[0, 0] * (J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
           - J[0, 1] * (J[1, 0] * J[2, 2] - J[1, 2] * J[2, 0])
           + J[0, 2] * (J[1, 0] * J[2, 1] - J[1, 1] * J[2, 0]))
    return cubic_roots(-tr, minors, -det)


def stability_verdict(eigs: Sequence[complex], tol: float = HYPERBOLIC_TOL) -> str:
    re = [e.real for e in eigs]
    if any(abs(r) <= tol for r in re):
        return "non_hyperbolic"
    return "stable" if max(re) < -tol else "unstable"


def _sorted(eigs):
    return tuple(sorted((complex(e) for e in eigs), key=lambda z: (z.real, z.imag)))


# --------------------------------------------------------------------------
# Table of fixed points on the x2 = 0 face

def _za_record(cfg: SystemConfig) -> FixedPointRecord:
    pop1, pop2 = cfg.pop1, cfg.pop2
    co1, co2 = pop1.coefficients, pop2.coefficients
    d = pop1.deltas
    alpha2 = pop2.alpha
    try:
        x1, n = sustained_fixed_point(pop1, alpha2)
    except DegenerateDenominator:
        return FixedPointRecord("zA", (math.nan, 0.0, math.nan), False)
    point = (x1, 0.0, n)
    # n* > 0 cross-multiplied: d_rt0 (alpha1+alpha2) > (alpha2-theta1) d_sp0
    positive = d.d_rt0 * (pop1.alpha + alpha2) > (alpha2 - pop1.theta) * d.d_sp0
    exists = alpha2 < pop1.theta - DEGENERATE_TOL and positive and n <= 1.0
    if not exists:
        return FixedPointRecord("zA", point, False)

    lam1 = co2.g(0.0, n)  # x2 direction: g2(0, n*)
    trace = co1.dg_dx(n) * x1 * (1 - x1)
    K = n * (1 - n) * (pop1.theta + pop1.alpha) * x1 * (1 - x1) * abs(co1.dg_dn(x1))
    root = cmath.sqrt(trace * trace - 4 * cfg.epsilon * K)
    eigs = _sorted([lam1, 0.5 * (trace + root), 0.5 * (trace - root)])
    return FixedPointRecord("zA", point, True, eigs, stability_verdict(eigs))


def _zb_record(cfg: SystemConfig) -> FixedPointRecord:
    d = cfg.pop1.deltas
    denom = d.d_sp0 - d.d_rt0
    if denom == 0:
        return FixedPointRecord("zB", (math.nan, 0.0, 0.0), False)
    x1 = d.d_sp0 / denom
    point = (x1, 0.0, 0.0)
    if not (0.0 <= x1 <= 1.0):
        return FixedPointRecord("zB", point, False)
    eigs = _sorted(eigenvalues_3x3(jacobian(cfg, point)))
    return FixedPointRecord("zB", point, True, eigs, stability_verdict(eigs))


def _corner_record(cfg: SystemConfig, row: str, x1: float, n: float) -> FixedPointRecord:
    J = jacobian(cfg, (x1, 0.0, n))
    eigs = _sorted([J[0, 0], J[1, 1], J[2, 2]])  # diagonal at every corner
    return FixedPointRecord(row, (x1, 0.0, n), True, eigs, stability_verdict(eigs))


def _line_record(cfg: SystemConfig) -> FixedPointRecord:
    pop1 = cfg.pop1
    d = pop1.deltas
    exists = abs(cfg.pop2.alpha - pop1.theta) <= DEGENERATE_TOL
    n_max = d.d_rt0 / (d.d_rt0 + d.d_tr1) if d.d_rt0 > 0 else 0.0
    n_rep = 0.5 * n_max if d.d_rt0 > 0 else 0.5
    point = (1.0, 0.0, n_rep)
    if not exists:
        return FixedPointRecord("line_segment", point, False, n_max=n_max)
    eigs = _sorted(eigenvalues_3x3(jacobian(cfg, point)))
    # drop the zero eigenvalue belonging to the direction along the line
    idx = min(range(3), key=lambda i: abs(eigs[i]))
    transverse = [e for i, e in enumerate(eigs) if i != idx]
    if max(e.real for e in transverse) < -HYPERBOLIC_TOL:
        verdict = "line_attracting"
    elif max(e.real for e in transverse) > HYPERBOLIC_TOL:
        verdict = "unstable"
    else:
        verdict = "non_hyperbolic"
    return FixedPointRecord("line_segment", point, True, eigs, verdict, n_max=n_max)


def enumerate_fixed_points(cfg: SystemConfig) -> List[FixedPointRecord]:
    """All fixed points of the form (x1, 0, n), one record per table row.

    Existence is geometric (the point lies in the unit cube). Under the
    standing assumptions this reproduces the classical existence table, with
    one exception: when alpha2 = theta1 the whole edge (1, 0, n) consists of
    fixed points for any d_rt0, and the record says so; only its stability
    depends on the sign of d_rt0.
    """
    d = cfg.pop1.deltas
    records = [
        _za_record(cfg),
        _zb_record(cfg),
        _corner_record(cfg, "zC1", 0.0, 0.0),
        _corner_record(cfg, "zC2", 0.0, 1.0),
        _corner_record(cfg, "zC3", 1.0, 0.0),
        _corner_record(cfg, "zC4", 1.0, 1.0),
        _line_record(cfg),
    ]
    denom = d.d_ps1 - d.d_tr1
    x_ab = d.d_ps1 / denom if denom != 0 else math.inf
    records.append(FixedPointRecord("interior_abundant", (x_ab, 0.0, 1.0), False))
    return records


# --------------------------------------------------------------------------
# Regime classification

def classify_two_population(cfg: SystemConfig) -> RegimeLabel2Pop:
    """Asymptotic regime of the coupled system from its parameters alone."""
    pop1 = cfg.pop1
    d = pop1.deltas
    alpha2 = cfg.pop2.alpha
    gap = alpha2 - pop1.theta

    if gap > DEGENERATE_TOL:
        return RegimeLabel2Pop("tragedy", "1")
    if abs(gap) <= DEGENERATE_TOL:
        if d.d_rt0 > 0:
            return RegimeLabel2Pop("line_segment", "3", n_max=d.d_rt0 / (d.d_rt0 + d.d_tr1))
        return RegimeLabel2Pop("tragedy", "3")

    Y = d.Y
    if abs(Y) <= BOUNDARY_TOL:
        raise BoundaryPolicy("pop1 policy lies on the line Y = 0; sustained point is non-hyperbolic")
    # item 2b cutoff, cross-multiplied by alpha1 + alpha2 > 0
    if d.d_rt0 * (pop1.alpha + alpha2) <= gap * d.d_sp0:
        return RegimeLabel2Pop("tragedy", "2b")
    if Y < 0:
        raise OutOfRegion("pop1 policy is above the OTOC line (Y < 0); no stable interior point")
    x1, n = sustained_fixed_point(pop1, alpha2)
    return RegimeLabel2Pop("sustained", "2a", x1_star=x1, n_star=n)


def classify_single_population(p: PopulationSpec) -> RegimeLabel1Pop:
    """Regime of the one-population game (sustained, oscillating tragedy, or tragedy)."""
    d = p.deltas
    if d.d_sp0 <= 0:
        return RegimeLabel1Pop("tragedy")
    lower = p.alpha * d.d_rt0 + p.theta * d.d_sp0  # > 0 above the lower edge of V
    upper = d.Y  # > 0 below the OTOC line
    if abs(lower) <= BOUNDARY_TOL or abs(upper) <= BOUNDARY_TOL:
        raise BoundaryPolicy("policy lies on a separating curve of the single-population regimes")
    if upper < 0:
        return RegimeLabel1Pop("otoc")
    if lower < 0:
        return RegimeLabel1Pop("tragedy")
    co = p.coefficients
    x = p.alpha / (p.alpha + p.theta)
    return RegimeLabel1Pop("sustained", x_star=x, n_star=-co.g(x, 0.0) / co.dg_dn(x))


# --------------------------------------------------------------------------
# Export

def _num(v):
    return float(v) if math.isfinite(v) else None


def fixed_points_to_json(records: Sequence[FixedPointRecord]) -> List[dict]:
    out = []
    for r in records:
        item = {
            "table_row": r.table_row,
            "point": [_num(v) for v in r.point],
            "exists": r.exists,
            "eigenvalues": [[e.real, e.imag] for e in r.eigenvalues],
            "stability": r.stability,
        }
        if r.table_row == "line_segment":
            item["n_range"] = [0.0, r.n_max]
        out.append(item)
    return out
