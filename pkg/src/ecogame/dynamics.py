"""Coupled replicator / environment ODEs: right-hand side, Jacobian, integration.

State is ``(x1, x2, n)``: the low-consumer fractions of the two populations
and the resource level, all in [0, 1].

    x1' = x1 (1 - x1) g1(x1, n)
    x2' = x2 (1 - x2) g2(x2, n)
    n'  = eps n (1 - n) h(x1, x2),   h = sum_i theta_i x_i - alpha_i (1 - x_i)
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ._backend import kernels
from .errors import InvalidParameter, NonFiniteState
from .model import GCoefficients, State, SystemConfig, g_coefficients

__all__ = [
    "IntegratorSettings",
    "Trajectory",
    "OutcomeLabel",
    "payoff_difference",
    "environment_drive",
    "rhs",
    "jacobian",
    "integrate",
    "integrate_many",
    "classify_trajectory",
    "write_trajectory_csv",
    "kernel_params",
    "N_TOL",
    "DEGENERATE_TOL",
]

CLAMP = 1e-12
N_TOL = 1e-3
# |alpha2 - theta1| below this is treated as the line-of-fixed-points case
DEGENERATE_TOL = 1e-9

METHODS = ("rk4_fixed", "rk45_adaptive")


@dataclass(frozen=True)
class IntegratorSettings:
    method: str = "rk4_fixed"
    dt: float = 0.01
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    t_max: float = 1e5
    convergence_window: float = 10.0
    convergence_eps: float = 1e-9
    # keep every k-th accepted step (the final state is always kept)
    record_every: int = 100

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameter(f"method must be one of {METHODS}, got {self.method!r}")
        for name in ("dt", "rel_tol", "abs_tol", "t_max", "convergence_window",
                     "convergence_eps"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidParameter(f"{name} must be a positive finite number, got {v!r}")
        if self.dt > self.t_max:
            raise InvalidParameter("dt must not exceed t_max")
        if int(self.record_every) < 1:
            raise InvalidParameter("record_every must be >= 1")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), 3)
    terminal_reason: str  # "converged" | "max_time"
    n_steps: int = 0
    max_excursion: float = 0.0

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> State:
        return State.from_array(self.states[i])

    @property
    def final(self) -> State:
        return self.state(-1)

    @property
    def t_final(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class OutcomeLabel:
    kind: str  # "tragedy" | "sustained" | "abundance" | "non_convergent"
    n_final: float
    initial_condition_dependent: bool = False

    def __str__(self):
        if self.kind == "sustained":
            return f"sustained({self.n_final:.6g})"
        return self.kind


def payoff_difference(coeffs: GCoefficients, x: float, n: float) -> float:
    """Payoff advantage of low over high consumers at ``(x, n)``."""
    return coeffs.a * x * n + coeffs.b * x + coeffs.c * n + coeffs.d


def environment_drive(cfg: SystemConfig, x1: float, x2: float) -> float:
    p1, p2 = cfg.pop1, cfg.pop2
    return (p1.theta * x1 - p1.alpha * (1 - x1)) + (p2.theta * x2 - p2.alpha * (1 - x2))


def rhs(cfg: SystemConfig, s: Union[State, Sequence[float]]) -> Tuple[float, float, float]:
    x1, x2, n = _unpack(s)
    g1 = payoff_difference(cfg.pop1.coefficients, x1, n)
    g2 = payoff_difference(cfg.pop2.coefficients, x2, n)
    h = environment_drive(cfg, x1, x2)
    return (
        x1 * (1 - x1) * g1,
        x2 * (1 - x2) * g2,
        cfg.epsilon * n * (1 - n) * h,
    )


def jacobian(cfg: SystemConfig, s: Union[State, Sequence[float]]) -> np.ndarray:
    x1, x2, n = _unpack(s)
    c1, c2 = cfg.pop1.coefficients, cfg.pop2.coefficients
    p1, p2 = cfg.pop1, cfg.pop2
    eps = cfg.epsilon
    J = np.zeros((3, 3))
    J[0, 0] = x1 * (1 - x1) * c1.dg_dx(n) + (1 - 2 * x1) * c1.g(x1, n)
    J[0, 2] = x1 * (1 - x1) * c1.dg_dn(x1)
    J[1, 1] = x2 * (1 - x2) * c2.dg_dx(n) + (1 - 2 * x2) * c2.g(x2, n)
    J[1, 2] = x2 * (1 - x2) * c2.dg_dn(x2)
    J[2, 0] = eps * n * (1 - n) * (p1.theta + p1.alpha)
    J[2, 1] = eps * n * (1 - n) * (p2.theta + p2.alpha)
    J[2, 2] = eps * (1 - 2 * n) * environment_drive(cfg, x1, x2)
    return J


def _unpack(s):
    if isinstance(s, State):
        return s.x1, s.x2, s.n
    x1, x2, n = s
    return float(x1), float(x2), float(n)


def kernel_params(cfg: SystemConfig) -> List[float]:
    c1 = g_coefficients(cfg.pop1.deltas)
    c2 = g_coefficients(cfg.pop2.deltas)
    return [c1.a, c1.b, c1.c, c1.d, c2.a, c2.b, c2.c, c2.d,
            cfg.pop1.theta, cfg.pop1.alpha, cfg.pop2.theta, cfg.pop2.alpha,
            cfg.epsilon]


def _clamp_bounds(y0):
    # Coordinates starting on a face stay there exactly; others are kept
    # strictly inside so floating-point drift cannot leave the cube.
    lo, hi = [], []
    for v in y0:
        if v == 0.0 or v == 1.0:
            lo.append(v)
            hi.append(v)
        else:
            lo.append(CLAMP)
            hi.append(1.0 - CLAMP)
    return lo, hi


def integrate(cfg: SystemConfig, s0: Union[State, Sequence[float]],
              settings: Optional[IntegratorSettings] = None) -> Trajectory:
    """Integrate from ``s0`` until convergence or ``settings.t_max``.

    Convergence means ``max|rhs| < convergence_eps`` held at every accepted
    step for ``convergence_window`` time units.
    """
    settings = settings or IntegratorSettings()
    y0 = list(_unpack(s0))
    if not all(math.isfinite(v) and 0.0 <= v <= 1.0 for v in y0):
        raise InvalidParameter(f"initial state {y0} is outside the unit cube")
    lo, hi = _clamp_bounds(y0)
    params = kernel_params(cfg)
    if settings.method == "rk4_fixed":
        out = kernels.integrate_rk4(
            params, y0, lo, hi, settings.dt, settings.t_max,
            settings.convergence_eps, settings.convergence_window,
            int(settings.record_every))
    else:
        out = kernels.integrate_dopri(
            params, y0, lo, hi, settings.rel_tol, settings.abs_tol, settings.dt,
            settings.convergence_window / 10.0, settings.t_max,
            settings.convergence_eps, settings.convergence_window,
            int(settings.record_every))
    times, states, reason, status, n_steps, max_exc = out
    if status == kernels.STATUS_NONFINITE:
        raise NonFiniteState(f"non-finite state after {n_steps} steps; reduce dt")
    if status == kernels.STATUS_UNDERFLOW:
        raise NonFiniteState(f"step size underflow after {n_steps} steps")
    return Trajectory(
        times=times,
        states=states,
        terminal_reason="converged" if reason == kernels.REASON_CONVERGED else "max_time",
        n_steps=int(n_steps),
        max_excursion=float(max_exc),
    )


def worker_count(requested: Optional[int] = None) -> int:
    cap = os.environ.get("ECOGAME_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise InvalidParameter(f"ECOGAME_THREADS must be an integer, got {cap!r}")
    return max(1, n)


def integrate_many(cfg: SystemConfig, initials: Iterable, settings=None,
                   threads: Optional[int] = None) -> List[Trajectory]:
    """Integrate several initial states; results keep the input order."""
    initials = list(initials)
    n = min(worker_count(threads), max(1, len(initials)))
    if n == 1:
        return [integrate(cfg, s, settings) for s in initials]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda s: integrate(cfg, s, settings), initials))


def classify_trajectory(t: Trajectory, cfg: SystemConfig, n_tol: float = N_TOL) -> OutcomeLabel:
    """Label the asymptotic outcome of a finished trajectory.

    A run that never met the convergence test is ``non_convergent`` whatever
    its last resource level (an oscillating run can end near n = 0).
    """
    n_final = float(t.states[-1, 2])
    degenerate = abs(cfg.pop2.alpha - cfg.pop1.theta) <= DEGENERATE_TOL
    if t.terminal_reason != "converged":
        kind = "non_convergent"
    elif n_final < n_tol:
        kind = "tragedy"
    elif n_final > 1 - n_tol:
        kind = "abundance"
    else:
        kind = "sustained"
    return OutcomeLabel(kind, n_final, initial_condition_dependent=degenerate)


def write_trajectory_csv(t: Trajectory, dest) -> None:
    """Write ``t,x1,x2,n`` rows at 17 significant digits to a path or text stream."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="") as fh:
            write_trajectory_csv(t, fh)
        return
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(["t", "x1", "x2", "n"])
    for ti, (a, b, c) in zip(t.times, t.states):
        w.writerow([f"{ti:.17g}", f"{a:.17g}", f"{b:.17g}", f"{c:.17g}"])


def trajectory_csv_text(t: Trajectory) -> str:
    buf = io.StringIO()
    write_trajectory_csv(t, buf)
    return buf.getvalue()
