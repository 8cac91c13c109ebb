"""Acceptance gate: one test per numbered criterion.

Each test records a PASS/FAIL line that conftest prints in the terminal
summary, and asserts at the stated tolerance.
"""

import math
import time

import numpy as np
import pytest

from ecogame.dynamics import classify_trajectory, integrate_many, jacobian, rhs
from ecogame.equilibria import (
    classify_two_population,
    enumerate_fixed_points,
    n_star_derivative,
    sustained_fixed_point,
)
from ecogame.exploit import (
    brute_force_optimum,
    interior_optimum,
    optimal_consumption,
    support_of_utility,
    threshold_C,
    utility_array,
)
from ecogame.model import reference_config, validate
from ecogame.sensitivity import (
    fd_sensitivities,
    resource_sensitivities,
    rho_array,
    seam_distance,
    sensitivity_ratio_map,
)
from ecogame.errors import BoundaryPolicy

from .conftest import D_PS1, D_TR1, THETA1, random_config, reference_pop1, sample_policies

RESULTS = {}


def record(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    assert ok, f"criterion {n}: {detail}"


def _in_region(p, region):
    """Policies at least 1e-2 from every seam, in branch a or b."""
    if seam_distance(p) <= 1e-2:
        return False
    above = p.deltas.d_rt0 >= threshold_C(p)
    return above if region == "a" else not above


def test_criterion_01_fixed_point_residual():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst, seen = 0.0, 0
    for _ in range(200):
        cfg = random_config(rng)
        validate(cfg, "strict")
        za = enumerate_fixed_points(cfg)[0]
        assert za.table_row == "zA"
        if za.exists:
            seen += 1
            worst = max(worst, max(abs(v) for v in rhs(cfg, za.point)))
    dt = time.perf_counter() - t0
    record(1, worst <= 1e-10 and seen > 0 and dt < 1.0,
           f"max |rhs(zA)| = {worst:.2e} over {seen} existing zA, {dt:.2f} s")


@pytest.mark.slow
def test_criterion_02_regime_vs_simulation():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    bad = []
    worst_gap = 0.0
    for a2 in (0.25, 0.5, 0.9, 1.2):
        cfg = reference_config(alpha2=a2)
        predicted = classify_two_population(cfg)
        ics = rng.uniform(0.05, 0.95, size=(20, 3))
        for ic, traj in zip(ics, integrate_many(cfg, ics)):
            label = classify_trajectory(traj, cfg)
            if label.kind != predicted.kind:
                bad.append((a2, tuple(ic), label.kind, predicted.kind))
            elif predicted.kind == "sustained":
                worst_gap = max(worst_gap, abs(label.n_final - predicted.n_star))
    _, n_ref = sustained_fixed_point(reference_pop1(), 0.25)
    dt = time.perf_counter() - t0
    ok = not bad and worst_gap <= 1e-3 and abs(n_ref - 0.053435) < 1e-6 and dt < 120
    record(2, ok, f"{80 - len(bad)}/80 outcomes match, max |n_final - n*| = {worst_gap:.2e}, {dt:.1f} s")


def test_criterion_03_closed_form_vs_oracle():
    t0 = time.perf_counter()
    worst_a = worst_u = 0.0
    for p in sample_policies(303, 100):
        r = optimal_consumption(p)
        a, u = brute_force_optimum(p, 1e-5)
        worst_a = max(worst_a, abs(r.alpha2_star - a))
        worst_u = max(worst_u, abs(r.utility - u))
    ref = optimal_consumption(reference_pop1())
    pinned = abs(ref.alpha2_star - 0.2490) <= 1e-3 and abs(ref.utility - 0.01336) <= 1e-4
    dt = time.perf_counter() - t0
    record(3, worst_a <= 1e-4 and worst_u <= 1e-8 and pinned and dt < 60,
           f"max |da2*| = {worst_a:.2e}, max |dU*| = {worst_u:.2e}, "
           f"reference a2* = {ref.alpha2_star:.6f} U* = {ref.utility:.6f}, {dt:.1f} s")


def test_criterion_04_branch_a_exact_and_seam():
    r = optimal_consumption(reference_pop1(3.0, 2.0))
    exact = r.alpha2_star == THETA1 and abs(r.resource - 1 / 6) <= 1e-12 and r.branch == "theorem3a"
    p = reference_pop1(3.0, 0.0)
    C = threshold_C(p)
    seam = p.with_policy(3.0, C)
    a_branch = optimal_consumption(seam)
    b_alpha, b_R = interior_optimum(seam)
    gap = max(abs(a_branch.alpha2_star - b_alpha), abs(a_branch.resource - b_R))
    record(4, exact and gap <= 1e-9 and abs(C - 0.95086) < 1e-3,
           f"(3,2): a2* = {r.alpha2_star!r}, R* - 1/6 = {r.resource - 1 / 6:.1e}; "
           f"C(3) = {C:.7f}, seam gap = {gap:.1e}")


def test_criterion_05_sensitivity_vs_fd():
    t0 = time.perf_counter()
    worst = 0.0
    counts = {}
    rng_pool = sample_policies(505, 4000)
    for region in ("a", "b"):
        picked = [p for p in rng_pool if _in_region(p, region)][:50]
        counts[region] = len(picked)
        for p in picked:
            rep = resource_sensitivities(p)
            fd = fd_sensitivities(p, 1e-6)
            for cf, f in zip((rep.dR_dsp0, rep.dR_drt0), fd):
                if cf == f:
                    continue
                worst = max(worst, abs(cf - f) / max(abs(f), 1e-300))
    exact = resource_sensitivities(reference_pop1(3.0, 2.0))
    exact_ok = exact.dR_dsp0 == 0.0 and exact.dR_drt0 == 10 / 144
    dt = time.perf_counter() - t0
    ok = worst <= 1e-4 and counts == {"a": 50, "b": 50} and exact_ok and dt < 30
    record(5, ok, f"max rel err = {worst:.2e} over {counts} policies, (3,2) -> "
                  f"({exact.dR_dsp0}, {exact.dR_drt0!r}), {dt:.1f} s")


def test_criterion_06_nonnegative_partials():
    worst = math.inf
    n = 0
    for p in sample_policies(606, 500):
        try:
            rep = resource_sensitivities(p, boundary_eps=0.0)
        except BoundaryPolicy:
            continue
        n += 1
        worst = min(worst, rep.dR_dsp0, rep.dR_drt0)
    record(6, n == 500 and worst >= -1e-12, f"min partial = {worst:.3e} over {n} policies")


def test_criterion_07_concavity_and_support():
    worst = -math.inf
    leak = 0.0
    for p in sample_policies(707, 100):
        s = support_of_utility(p)[1]
        a2 = np.linspace(0.0, s, 1000)
        U = utility_array(p, a2)
        if len(U) >= 3:
            worst = max(worst, float(np.max(U[2:] - 2 * U[1:-1] + U[:-2])))
        outside = np.linspace(s, s + 2.0, 500)[1:]
        leak = max(leak, float(np.max(np.abs(utility_array(p, outside)))))
    ref_support = support_of_utility(reference_pop1())
    ok = worst <= 1e-9 and leak == 0.0 and ref_support == (0.0, 0.5)
    record(7, ok, f"max second difference = {worst:.2e}, max |U| outside support = {leak}, "
                  f"supp U(3,-0.5) = {ref_support}")


def test_criterion_08_jacobian_vs_fd():
    rng = np.random.default_rng(808)
    h = 1e-6
    worst = 0.0
    for _ in range(10):
        cfg = random_config(rng)
        for _ in range(50):
            s = rng.uniform(0.01, 0.99, 3)
            J = jacobian(cfg, s)
            fd = np.empty((3, 3))
            for j in range(3):
                e = np.zeros(3)
                e[j] = h
                fd[:, j] = (np.array(rhs(cfg, s + e)) - np.array(rhs(cfg, s - e))) / (2 * h)
            worst = max(worst, float(np.max(np.abs(J - fd)) / np.max(np.abs(J))))
    record(8, worst <= 1e-6, f"max relative error = {worst:.2e} over 500 states")


def test_criterion_09_epsilon_invariance():
    verdicts = {}
    for eps in (0.01, 0.1, 1.0):
        for a2 in (0.25, 1.2):
            cfg = reference_config(alpha2=a2, epsilon=eps)
            label = classify_two_population(cfg)
            fps = tuple((r.table_row, r.exists, r.stability) for r in enumerate_fixed_points(cfg))
            verdicts.setdefault(a2, set()).add((label.kind, label.item, fps))
    ok = all(len(v) == 1 for v in verdicts.values())
    record(9, ok, f"distinct outcomes per alpha2: { {k: len(v) for k, v in verdicts.items()} }")


def test_criterion_10_figure_shapes():
    t0 = time.perf_counter()
    sp0 = np.linspace(0.1, 5.0, 40)
    rt0 = np.linspace(-3.75, 8.3, 40)
    R = np.full((40, 40), np.nan)
    base = reference_pop1()
    for i, s in enumerate(sp0):
        for j, r in enumerate(rt0):
            p = base.with_policy(float(s), float(r))
            try:
                R[i, j] = optimal_consumption(p).resource
            except Exception:
                pass
    drops = 0
    pairs = 0
    for A in (R, R.T):
        for row in A:
            for u, v in zip(row[:-1], row[1:]):
                if np.isfinite(u) and np.isfinite(v):
                    pairs += 1
                    drops += v < u - 1e-12
    sp_grid = np.linspace(0.05, 5.0, 60)
    rt_grid = np.linspace(-3.75, 25.0, 60)
    high = rho_array(sensitivity_ratio_map(reference_pop1(d_ps1=9.0), sp_grid, rt_grid))
    low_cells = sensitivity_ratio_map(reference_pop1(d_ps1=2.0), sp_grid, rt_grid)
    low = rho_array(low_cells)
    high_max = float(np.nanmax(high))
    over = [c for row in low_cells for c in row if c.rho is not None and c.rho > 1]
    near = min((abs(c.d_rt0 - threshold_C(reference_pop1(c.d_sp0, c.d_rt0, 2.0))) for c in over),
               default=math.inf)
    dt = time.perf_counter() - t0
    ok = drops == 0 and pairs > 500 and high_max < 1 and len(over) > 0 and dt < 120
    record(10, ok, f"R* drops in {drops}/{pairs} grid steps; max rho (d_ps1=9) = {high_max:.3f}; "
                   f"{len(over)} cells with rho > 1 (d_ps1=2), nearest {near:.3f} from C; {dt:.1f} s")


def test_criterion_11_resource_decreases_in_rate():
    rng = np.random.default_rng(1111)
    worst = 0.0
    largest = -math.inf
    for p in sample_policies(1111, 100):
        assert p.deltas.Y > 0
        a2 = rng.uniform(0.0, 0.9 * p.theta)
        d = n_star_derivative(p, a2)
        h = 1e-7
        fd = (sustained_fixed_point(p, a2 + h)[1] - sustained_fixed_point(p, a2 - h)[1]) / (2 * h)
        largest = max(largest, d)
        worst = max(worst, abs(d - fd) / abs(fd))
    record(11, largest < 0 and worst <= 1e-5,
           f"max dn*/da2 = {largest:.3e}, max rel err vs FD = {worst:.2e}")
