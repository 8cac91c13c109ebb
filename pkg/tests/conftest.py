import numpy as np
import pytest

from ecogame.model import PolicyDeltas, PopulationSpec, SystemConfig, reference_config

THETA1, ALPHA1, D_TR1, D_PS1 = 0.75, 1.0, 10.0, 6.0


def reference_pop1(d_sp0=3.0, d_rt0=-0.5, d_ps1=D_PS1):
    return PopulationSpec(PolicyDeltas(d_sp0, d_rt0, D_TR1, d_ps1), THETA1, ALPHA1)


def sample_policy(rng, d_ps1=D_PS1, sp0_range=(0.05, 5.0), shrink=1e-6):
    """Uniform-ish policy strictly inside the sustainable region (reference rates)."""
    sp0 = rng.uniform(*sp0_range)
    lo = max(-THETA1 / ALPHA1 * sp0, -D_TR1)
    hi = D_TR1 / d_ps1 * sp0
    w = hi - lo
    rt0 = rng.uniform(lo + shrink * w, hi - shrink * w)
    return reference_pop1(sp0, rt0, d_ps1)


def sample_policies(seed, count, **kw):
    rng = np.random.default_rng(seed)
    return [sample_policy(rng, **kw) for _ in range(count)]


def random_config(rng):
    """A configuration that passes strict validation, rates in (0, 2)."""
    tr1, ps1 = rng.uniform(0.5, 12.0, 2)
    th1, al1, th2, al2 = rng.uniform(0.01, 2.0, 4)
    sp0 = rng.uniform(0.05, 5.0)
    lo = max(-th1 / al1 * sp0, -tr1)
    hi = tr1 / ps1 * sp0
    rt0 = rng.uniform(lo + 1e-6 * (hi - lo), hi - 1e-6 * (hi - lo))
    pop1 = PopulationSpec(PolicyDeltas(sp0, rt0, tr1, ps1), th1, al1)
    sp2, rt2 = rng.uniform(-5.0, -0.05, 2)
    tr2, ps2 = rng.uniform(0.5, 12.0, 2)
    sp2 = max(sp2, -0.9 * ps2)
    rt2 = max(rt2, -0.9 * tr2)
    pop2 = PopulationSpec(PolicyDeltas(sp2, rt2, tr2, ps2), th2, al2)
    return SystemConfig(pop1, pop2, rng.uniform(0.01, 1.0))


@pytest.fixture
def ref_cfg():
    return reference_config()


@pytest.fixture
def ref_pop1():
    return reference_pop1()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
