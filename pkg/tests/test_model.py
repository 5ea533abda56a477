import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinboson.model import (
    Channel,
    ParameterError,
    SimulationParams,
    default_dt,
    default_m_max,
    derived_scales,
    effective_frequency,
    exact_quality_factor,
    renormalized_frequency,
    validate,
)


def params(**kw):
    base = dict(delta=2.0, alpha=0.1, omega_c=100.0)
    base.update(kw)
    return SimulationParams(**base)


def test_renormalized_frequency_reference_value():
    # 2 * (2/100)^(1/9)
    assert renormalized_frequency(params()) == pytest.approx(1.29496, rel=1e-5)


def test_effective_frequency_reference_value():
    assert effective_frequency(params()) == pytest.approx(1.3704, rel=1e-4)


def test_effective_frequency_against_stdlib_gamma():
    for a in (0.05, 0.1, 0.2, 0.3, 0.45):
        p = params(alpha=a)
        expect = (math.gamma(1 - 2 * a) * math.cos(math.pi * a)) ** (1 / (2 - 2 * a)) \
            * renormalized_frequency(p)
        assert effective_frequency(p) == pytest.approx(expect, rel=1e-13)


def test_effective_frequency_quarter_coupling_closed_form():
    p = params(alpha=0.25)
    expect = (math.sqrt(math.pi) * math.sqrt(0.5)) ** (2 / 3) * renormalized_frequency(p)
    assert effective_frequency(p) == pytest.approx(expect, rel=1e-13)


def test_zero_coupling_reduces_to_bare_tunnelling():
    s = derived_scales(params(alpha=0.0))
    assert s.delta_r == pytest.approx(2.0) and s.delta_eff == pytest.approx(2.0)
    assert s.omega_0 == pytest.approx(2.0) and s.gamma_0 == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("alpha, q", [(0.1, 5.6713), (0.2, 2.4142), (0.25, math.sqrt(3)),
                                      (0.3, 1.25396)])
def test_exact_quality_factor(alpha, q):
    assert exact_quality_factor(alpha) == pytest.approx(q, rel=1e-4)


def test_derived_scales_reference_values():
    s = derived_scales(params())
    assert s.omega_0 == pytest.approx(1.34955, rel=1e-5)
    assert s.gamma_0 == pytest.approx(0.23796, rel=1e-4)
    assert s.quality_factor == pytest.approx(exact_quality_factor(0.1), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 0.49), st.floats(0.5, 5.0), st.floats(10.0, 1e4))
def test_pole_pythagoras(alpha, delta, ratio):
    s = derived_scales(params(alpha=alpha, delta=delta, omega_c=delta * ratio))
    assert math.hypot(s.omega_0, s.gamma_0) == pytest.approx(s.delta_eff, rel=1e-12)
    assert s.omega_0 > 0 and s.gamma_0 >= 0


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 0.45), st.floats(0.001, 0.04))
def test_renormalized_frequency_decreases_with_coupling(alpha, step):
    lo = renormalized_frequency(params(alpha=alpha))
    hi = renormalized_frequency(params(alpha=alpha + step))
    assert hi < lo


def test_defaults_fill_grid_and_modes():
    p = params()
    assert p.dt == default_dt(2.0, 100.0) == pytest.approx(1e-3)
    assert p.m_max == default_m_max(100.0, 20.0) == 6368
    assert p.channel is Channel.NONE
    assert p.n_steps * p.step == pytest.approx(p.t_max, rel=1e-14)


def test_replace_recomputes_dependents():
    p = params().replace(t_max=10.0, gamma_phi=0.3)
    assert p.m_max == default_m_max(100.0, 10.0)
    assert p.channel is Channel.DEPHASING


def test_channel_from_rates():
    assert Channel.from_rates(0, 0) is Channel.NONE
    assert Channel.from_rates(0.1, 0) is Channel.DEPHASING
    assert Channel.from_rates(0, 0.1) is Channel.DEPOLARIZATION
    assert Channel.from_rates(0.1, 0.1) is Channel.BOTH


def test_validate_accepts_reference_point():
    p = params(gamma_phi=0.4)
    assert validate(p) is p


@pytest.mark.parametrize("bad", [
    dict(alpha=0.5),
    dict(alpha=-0.01),
    dict(omega_c=10.0),
    dict(gamma_phi=-0.1),
    dict(delta=0.0),
    dict(n_traj=0),
    dict(t_max=0.0),
    dict(m_max=0),
    dict(gamma_phi=0.2, channel=Channel.DEPOLARIZATION),
])
def test_validate_rejects(bad):
    with pytest.raises(ParameterError):
        validate(params(**bad))
