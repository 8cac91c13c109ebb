import io
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ecogame import _kernels_py
from ecogame.dynamics import (
    IntegratorSettings,
    _clamp_bounds,
    classify_trajectory,
    environment_drive,
    integrate,
    integrate_many,
    jacobian,
    kernel_params,
    payoff_difference,
    rhs,
    worker_count,
    write_trajectory_csv,
)
from ecogame.equilibria import sustained_fixed_point
from ecogame.errors import InvalidParameter, NonFiniteState
from ecogame.model import (
    PolicyDeltas,
    PopulationSpec,
    SystemConfig,
    reference_config,
    single_population_config,
)

from .conftest import random_config, reference_pop1

try:
    from ecogame import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

unit = st.floats(0.0, 1.0)


def test_payoff_difference_examples():
    co = reference_pop1().coefficients
    assert payoff_difference(co, 0.5, 0.5) == pytest.approx(-3.375)
    assert payoff_difference(co, 0.0, 0.0) == co.d
    assert payoff_difference(co, 4 / 7, 0.0) == pytest.approx(1.0)


def test_environment_drive_examples():
    cfg = reference_config()
    assert environment_drive(cfg, 1.0, 0.0) == pytest.approx(0.5)
    assert environment_drive(cfg, 5 / 7, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert environment_drive(cfg, 0.0, 0.0) == pytest.approx(-1.25)


def test_rhs_by_hand():
    cfg = reference_config()
    x1 = x2 = n = 0.5
    g1 = -0.5 * 0.25 - 3.5 * 0.5 - 9 * 0.5 + 3  # pop1: a, b, c, d = -0.5, -3.5, -9, 3
    # pop2 deltas (-1, -1, 10, 6): a = -1 + 1 + 6 - 10, b = 0, c = -5, d = -1
    g2 = -4 * 0.25 + 0 * 0.5 - 5 * 0.5 - 1
    h = (0.75 * 0.5 - 1.0 * 0.5) + (0.75 * 0.5 - 0.25 * 0.5)
    expected = (0.25 * g1, 0.25 * g2, 0.1 * 0.25 * h)
    assert rhs(cfg, (x1, x2, n)) == pytest.approx(expected, abs=1e-15)


def test_rhs_vanishes_at_corner_and_sustained_point():
    cfg = reference_config()
    assert rhs(cfg, (0, 0, 0)) == (0.0, 0.0, 0.0)
    x1, n = sustained_fixed_point(cfg.pop1, cfg.pop2.alpha)
    assert max(map(abs, rhs(cfg, (x1, 0.0, n)))) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(unit, unit, unit)
def test_jacobian_zero_pattern(x1, x2, n):
    J = jacobian(reference_config(), (x1, x2, n))
    assert J[0, 1] == 0.0 and J[1, 0] == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), unit, unit, unit)
def test_face_invariance_of_rhs(seed, a, b, c):
    cfg = random_config(np.random.default_rng(seed))
    for s in ((0.0, b, c), (1.0, b, c)):
        assert rhs(cfg, s)[0] == 0.0
    for s in ((a, 0.0, c), (a, 1.0, c)):
        assert rhs(cfg, s)[1] == 0.0
    for s in ((a, b, 0.0), (a, b, 1.0)):
        assert rhs(cfg, s)[2] == 0.0


def _kernel_call(mod, cfg, y0, method):
    lo, hi = _clamp_bounds(y0)
    p = kernel_params(cfg)
    if method == "rk4":
        return mod.integrate_rk4(p, y0, lo, hi, 0.01, 200.0, 1e-9, 10.0, 7)
    return mod.integrate_dopri(p, y0, lo, hi, 1e-8, 1e-10, 0.01, 1.0, 200.0, 1e-9, 10.0, 3)


@pytest.mark.skipif(_kernels_c is None, reason="compiled kernel not built")
@pytest.mark.parametrize("method", ["rk4", "dopri"])
def test_compiled_and_python_kernels_agree(method):
    rng = np.random.default_rng(3)
    for _ in range(3):
        cfg = random_config(rng)
        y0 = list(rng.uniform(0.05, 0.95, 3))
        tc, sc, *rest_c = _kernel_call(_kernels_c, cfg, y0, method)
        tp, sp, *rest_p = _kernel_call(_kernels_py, cfg, y0, method)
        assert rest_c[:3] == rest_p[:3]  # reason, status, step count
        np.testing.assert_allclose(tc, tp, rtol=1e-12, atol=0)
        np.testing.assert_allclose(sc, sp, rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize("method", ["rk4_fixed", "rk45_adaptive"])
def test_converges_to_sustained_point(method):
    cfg = reference_config()
    t = integrate(cfg, (0.3, 0.6, 0.4), IntegratorSettings(method=method))
    x1, n = sustained_fixed_point(cfg.pop1, 0.25)
    assert t.terminal_reason == "converged"
    assert t.final.x1 == pytest.approx(x1, abs=1e-6)
    assert t.final.n == pytest.approx(n, abs=1e-6)
    assert classify_trajectory(t, cfg).kind == "sustained"


def test_trajectory_is_well_formed():
    t = integrate(reference_config(), (0.5, 0.5, 0.5), IntegratorSettings(record_every=1))
    assert np.all(np.diff(t.times) > 0)
    assert t.states.shape == (len(t.times), 3)
    assert np.all((t.states >= 0) & (t.states <= 1))
    assert t.max_excursion <= 1e-12
    assert len(t) == t.n_steps + 1


def test_face_invariance_of_integration():
    t = integrate(reference_config(), (0.5, 0.0, 0.5))
    assert np.all(t.states[:, 1] == 0.0)


def test_irresponsible_share_decays_monotonically():
    t = integrate(reference_config(), (0.4, 0.7, 0.5), IntegratorSettings(record_every=1))
    assert np.all(np.diff(t.states[:, 1]) <= 0)


@pytest.mark.parametrize("alpha2", [0.9, 1.2])
def test_fast_consumption_ends_in_tragedy(alpha2):
    cfg = reference_config(alpha2=alpha2)
    t = integrate(cfg, (0.5, 0.5, 0.5))
    assert classify_trajectory(t, cfg).kind == "tragedy"


def test_oscillating_single_population_is_non_convergent():
    p = PopulationSpec(PolicyDeltas(1.0, 3.0, 10.0, 6.0), 0.75, 1.0)  # Y < 0
    cfg = single_population_config(p)
    t = integrate(cfg, (0.5, 0.0, 0.5), IntegratorSettings(t_max=2000.0))
    assert t.terminal_reason == "max_time"
    assert classify_trajectory(t, cfg).kind == "non_convergent"


def test_line_segment_flagged_initial_condition_dependent():
    cfg = reference_config(alpha2=0.75, d_rt0=2.0)
    t = integrate(cfg, (0.5, 0.5, 0.05), IntegratorSettings(t_max=5000.0))
    assert classify_trajectory(t, cfg).initial_condition_dependent


def test_nonfinite_state_raises():
    ref = reference_config()
    huge = PopulationSpec(PolicyDeltas(1e308, -1e308, 1e308, 1e308), 0.75, 1.0)
    with pytest.raises(NonFiniteState):
        integrate(SystemConfig(huge, ref.pop2), (0.5, 0.5, 0.5))


def test_initial_state_outside_cube():
    with pytest.raises(InvalidParameter):
        integrate(reference_config(), (1.5, 0.5, 0.5))


def test_settings_validation():
    with pytest.raises(InvalidParameter):
        IntegratorSettings(method="euler")
    with pytest.raises(InvalidParameter):
        IntegratorSettings(dt=-1.0)
    with pytest.raises(InvalidParameter):
        IntegratorSettings(dt=2.0, t_max=1.0)


def test_integrate_many_keeps_order(monkeypatch):
    cfg = reference_config()
    ics = [(0.2, 0.3, 0.4), (0.8, 0.1, 0.6), (0.5, 0.5, 0.5)]
    serial = [integrate(cfg, s) for s in ics]
    monkeypatch.setenv("ECOGAME_THREADS", "3")
    parallel = integrate_many(cfg, ics)
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(a.states, b.states)


def test_worker_count_cap(monkeypatch):
    monkeypatch.setenv("ECOGAME_THREADS", "2")
    assert worker_count(16) == 2
    monkeypatch.setenv("ECOGAME_THREADS", "many")
    with pytest.raises(InvalidParameter):
        worker_count()


def test_trajectory_csv():
    t = integrate(reference_config(), (0.5, 0.5, 0.5), IntegratorSettings(t_max=1.0, record_every=10))
    buf = io.StringIO()
    write_trajectory_csv(t, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,x1,x2,n"
    assert len(lines) == len(t) + 1
    row = [float(v) for v in lines[-1].split(",")]
    assert row[1:] == t.states[-1].tolist()  # 17 digits round-trip exactly


def test_pure_python_backend_can_be_forced():
    import subprocess
    import sys

    env = dict(os.environ, ECOGAME_PURE_PYTHON="1")
    code = ("import ecogame; from ecogame.dynamics import integrate; "
            "t = integrate(ecogame.reference_config(), (0.5, 0.5, 0.5)); "
            "print(ecogame.BACKEND, round(t.final.n, 6))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.split() == ["python", "0.053435"]
