"""Parameter containers for the two-population feedback-evolving game.

Policies are carried as payoff *differences* (deltas) rather than raw
matrices because every downstream formula is written in them:

    d_sp0 = S0 - P0     d_rt0 = R0 - T0     (depleted state, the "policy")
    d_tr1 = T1 - R1     d_ps1 = P1 - S1     (abundant state)

The payoff advantage of low consumers is bilinear,
``g(x, n) = a*x*n + b*x + c*n + d``, and `GCoefficients` holds (a, b, c, d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Sequence

import numpy as np

from .errors import AssumptionViolation, InvalidParameter

__all__ = [
    "PayoffMatrixPair",
    "PolicyDeltas",
    "PopulationSpec",
    "GCoefficients",
    "SystemConfig",
    "State",
    "ValidationReport",
    "Violation",
    "deltas_from_matrices",
    "matrices_from_deltas",
    "g_coefficients",
    "validate",
    "in_sustainable_region",
    "reference_config",
    "single_population_config",
]


def _check_finite(name, value):
    if not math.isfinite(value):
        raise InvalidParameter(f"{name} must be finite, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class PayoffMatrixPair:
    """Depleted-state (A0) and abundant-state (A1) payoff matrices.

    Row/column 0 is the low-consumption strategy, 1 the high-consumption one,
    so ``[[R, S], [T, P]]``.
    """

    depleted: np.ndarray
    abundant: np.ndarray

    def __post_init__(self):
        for name in ("depleted", "abundant"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (2, 2):
                raise InvalidParameter(f"{name} must be 2x2, got shape {m.shape}")
            if not np.all(np.isfinite(m)):
                raise InvalidParameter(f"{name} has non-finite entries")
            m.setflags(write=False)
            object.__setattr__(self, name, m)


@dataclass(frozen=True)
class PolicyDeltas:
    d_sp0: float
    d_rt0: float
    d_tr1: float
    d_ps1: float

    def __post_init__(self):
        for name in ("d_sp0", "d_rt0", "d_tr1", "d_ps1"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))

    @property
    def Y(self) -> float:
        """``d_tr1*d_sp0 - d_rt0*d_ps1``; positive iff d_rt0 is below the OTOC line."""
        return self.d_tr1 * self.d_sp0 - self.d_rt0 * self.d_ps1


@dataclass(frozen=True)
class PopulationSpec:
    """One population: payoff deltas plus restoration/degradation rates."""

    deltas: PolicyDeltas
    theta: float
    alpha: float

    def __post_init__(self):
        theta = _check_finite("theta", self.theta)
        alpha = _check_finite("alpha", self.alpha)
        if theta <= 0:
            raise InvalidParameter(f"theta must be > 0, got {theta}")
        if alpha < 0:
            raise InvalidParameter(f"alpha must be >= 0, got {alpha}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "alpha", alpha)

    @property
    def coefficients(self) -> "GCoefficients":
        return g_coefficients(self.deltas)

    def with_policy(self, d_sp0: float, d_rt0: float) -> "PopulationSpec":
        return replace(self, deltas=replace(self.deltas, d_sp0=d_sp0, d_rt0=d_rt0))


@dataclass(frozen=True)
class GCoefficients:
    a: float
    b: float
    c: float
    d: float

    def g(self, x, n):
        return self.a * x * n + self.b * x + self.c * n + self.d

    def dg_dn(self, x):
        return self.a * x + self.c

    def dg_dx(self, n):
        return self.a * n + self.b


@dataclass(frozen=True)
class SystemConfig:
    pop1: PopulationSpec
    pop2: PopulationSpec
    epsilon: float = 0.1

    def __post_init__(self):
        eps = _check_finite("epsilon", self.epsilon)
        if eps <= 0:
            raise InvalidParameter(f"epsilon must be > 0, got {eps}")
        object.__setattr__(self, "epsilon", eps)

    def with_alpha2(self, alpha2: float) -> "SystemConfig":
        return replace(self, pop2=replace(self.pop2, alpha=alpha2))

    def with_epsilon(self, epsilon: float) -> "SystemConfig":
        return replace(self, epsilon=epsilon)

    def with_policy1(self, d_sp0: float, d_rt0: float) -> "SystemConfig":
        return replace(self, pop1=self.pop1.with_policy(d_sp0, d_rt0))


@dataclass(frozen=True)
class State:
    x1: float
    x2: float
    n: float

    def __post_init__(self):
        for name in ("x1", "x2", "n"):
            v = _check_finite(name, getattr(self, name))
            if v < -STATE_TOL or v > 1 + STATE_TOL:
                raise InvalidParameter(f"{name}={v} is outside [0, 1]")
            object.__setattr__(self, name, v)

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.n])

    @classmethod
    def from_array(cls, arr: Sequence[float]) -> "State":
        x1, x2, n = (float(v) for v in arr)
        return cls(x1, x2, n)


STATE_TOL = 1e-12


def deltas_from_matrices(m: PayoffMatrixPair) -> PolicyDeltas:
    (r0, s0), (t0, p0) = m.depleted
    (r1, s1), (t1, p1) = m.abundant
    return PolicyDeltas(
        d_sp0=s0 - p0, d_rt0=r0 - t0, d_tr1=t1 - r1, d_ps1=p1 - s1
    )


def matrices_from_deltas(p: PolicyDeltas) -> PayoffMatrixPair:
    """Canonical matrices with T0 = P0 = R1 = P1 = 0 reproducing ``p``."""
    depleted = [[p.d_rt0, p.d_sp0], [0.0, 0.0]]
    abundant = [[0.0, -p.d_ps1], [p.d_tr1, 0.0]]
    return PayoffMatrixPair(np.array(depleted), np.array(abundant))


def g_coefficients(p: PolicyDeltas) -> GCoefficients:
    return GCoefficients(
        a=p.d_sp0 - p.d_rt0 + p.d_ps1 - p.d_tr1,
        b=p.d_rt0 - p.d_sp0,
        c=-(p.d_ps1 + p.d_sp0),
        d=p.d_sp0,
    )


# --------------------------------------------------------------------------
# Validation

@dataclass(frozen=True)
class Violation:
    name: str
    detail: str
    on_boundary: bool = False


@dataclass(frozen=True)
class ValidationReport:
    mode: str
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def names(self) -> List[str]:
        return [v.name for v in self.violations]


def _v_region_checks(p: PopulationSpec):
    """Yield (name, lhs - rhs margin) for the three strict inequalities of V.

    Margins are cross-multiplied so alpha = 0 needs no special casing.
    """
    d = p.deltas
    yield "d_sp0 > 0", d.d_sp0
    yield "d_rt0 > -(theta/alpha)*d_sp0", p.alpha * d.d_rt0 + p.theta * d.d_sp0
    yield "d_rt0 < (d_tr1/d_ps1)*d_sp0", d.d_tr1 * d.d_sp0 - d.d_ps1 * d.d_rt0


def in_sustainable_region(p: PopulationSpec) -> bool:
    """True when the policy sustains the resource in isolation (strictly inside V)."""
    return all(margin > 0 for _, margin in _v_region_checks(p))


def _population_checks(label: str, p: PopulationSpec):
    d = p.deltas
    yield f"{label} d_tr1 > 0", d.d_tr1
    yield f"{label} d_ps1 > 0", d.d_ps1
    yield f"{label} d_sp0 > -d_ps1", d.d_sp0 + d.d_ps1
    yield f"{label} d_rt0 > -d_tr1", d.d_rt0 + d.d_tr1


def validate(cfg: SystemConfig, mode: str = "strict") -> ValidationReport:
    """Check the abundant-state, monotonicity and responsibility assumptions.

    In ``"strict"`` mode any violation raises `AssumptionViolation`; in
    ``"warn"`` mode the report lists them and the caller decides.
    Equality on a boundary counts as a violation and is flagged
    ``on_boundary``.
    """
    if mode not in ("strict", "warn"):
        raise InvalidParameter(f"mode must be 'strict' or 'warn', got {mode!r}")
    found = []
    for label, pop in (("pop1", cfg.pop1), ("pop2", cfg.pop2)):
        for name, margin in _population_checks(label, pop):
            if margin <= 0:
                found.append(Violation(name, f"margin {margin:.17g}", margin == 0))
    for name, margin in _v_region_checks(cfg.pop1):
        if margin <= 0:
            found.append(
                Violation("pop1 not in V", f"{name} fails (margin {margin:.17g})", margin == 0)
            )
    d2 = cfg.pop2.deltas
    if not d2.d_sp0 < 0:
        found.append(Violation("pop2 d_sp0 must be negative", f"d_sp0={d2.d_sp0}", d2.d_sp0 == 0))
    if not d2.d_rt0 < 0:
        found.append(Violation("pop2 d_rt0 must be negative", f"d_rt0={d2.d_rt0}", d2.d_rt0 == 0))

    report = ValidationReport(mode, found)
    if mode == "strict" and found:
        raise AssumptionViolation(found[0].name, [v.name for v in found])
    return report


# --------------------------------------------------------------------------
# Convenience constructors

def reference_config(alpha2: float = 0.25, epsilon: float = 0.1,
                     d_sp0: float = 3.0, d_rt0: float = -0.5) -> SystemConfig:
    """The worked example used throughout the docs and tests.

    Population 1 uses d_tr1=10, d_ps1=6, theta=0.75, alpha=1. Population 2's
    depleted-state deltas (-1, -1), abundant-state deltas (10, 6) and
    restoration rate 0.75 are package defaults: they only shape the
    transient because x2 -> 0 under the irresponsible-population assumption.
    """
    pop1 = PopulationSpec(PolicyDeltas(d_sp0, d_rt0, 10.0, 6.0), theta=0.75, alpha=1.0)
    pop2 = PopulationSpec(PolicyDeltas(-1.0, -1.0, 10.0, 6.0), theta=0.75, alpha=alpha2)
    return SystemConfig(pop1, pop2, epsilon)


def single_population_config(p: PopulationSpec, epsilon: float = 0.1) -> SystemConfig:
    """Embed a lone population as pop1 with an inert pop2.

    Integrating from a state with ``x2 == 0`` reproduces the one-population
    system exactly, since pop2 then contributes ``-alpha2 = 0`` to the
    environment drive.
    """
    d = p.deltas
    inert = PopulationSpec(PolicyDeltas(-1.0, -1.0, d.d_tr1, d.d_ps1), theta=1.0, alpha=0.0)
    return SystemConfig(p, inert, epsilon)
