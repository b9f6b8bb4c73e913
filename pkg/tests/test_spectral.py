import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from dephasing_control import (
    DomainError,
    HorizonTooShortError,
    NoCrossingError,
    SpectralParams,
    control_phase_y,
    decay_rate,
    decoherence_fn,
    horizon,
    kernel_table,
    phase_fn,
    rate_zero_crossings,
    spectral_density,
)
from dephasing_control.oracle import oracle_control_phase, oracle_phase

ohmicity = st.floats(min_value=1.05, max_value=8.0)


@pytest.mark.parametrize("s", [0.5, 1.0, 8.5, float("nan")])
def test_params_reject_out_of_range(s):
    with pytest.raises(DomainError):
        SpectralParams(s)


def test_params_gamma_values():
    p = SpectralParams(4.5)
    assert p.gamma_s == pytest.approx(math.gamma(4.5), rel=1e-14)
    assert p.gamma_s_minus_1 == pytest.approx(math.gamma(3.5), rel=1e-14)
    assert SpectralParams(3).asymptotic_decoherence == pytest.approx(1.0)


@pytest.mark.parametrize(
    "omega,s,expected",
    [(0.0, 3.0, 0.0), (1.0, 1.000000001, math.exp(-1)), (2.0, 3.0, 8 * math.exp(-2))],
)
def test_spectral_density_values(omega, s, expected):
    assert spectral_density(omega, SpectralParams(s)) == pytest.approx(expected, rel=1e-7, abs=1e-15)


def test_spectral_density_rejects_negative_frequency():
    with pytest.raises(DomainError):
        spectral_density(-1.0, SpectralParams(3))


def test_decay_rate_values():
    assert decay_rate(0.0, SpectralParams(3)) == 0.0
    assert decay_rate(1.0, SpectralParams(3)) == pytest.approx(0.5, abs=1e-12)
    assert decay_rate(1.0, SpectralParams(1.000001)) == pytest.approx(0.5, abs=1e-5)


def test_decoherence_values():
    assert decoherence_fn(0.0, SpectralParams(2.7)) == 0.0
    assert decoherence_fn(1.0, SpectralParams(2)) == pytest.approx(0.5, abs=1e-12)
    assert decoherence_fn(1.0, SpectralParams(4)) == pytest.approx(2.5, abs=1e-12)
    assert decoherence_fn(1e6, SpectralParams(3)) == pytest.approx(1.0, abs=1e-5)


def test_negative_time_rejected():
    p = SpectralParams(3)
    for fn in (decay_rate, decoherence_fn, phase_fn):
        with pytest.raises(DomainError):
            fn(-0.1, p)


def test_array_input_matches_scalar():
    p = SpectralParams(3.3)
    t = np.linspace(0, 7, 15)
    vec = decoherence_fn(t, p)
    assert np.allclose(vec, [decoherence_fn(float(x), p) for x in t], rtol=0, atol=1e-15)


@pytest.mark.parametrize("s", [2.5, 3.0, 4.0, 5.0])
@pytest.mark.parametrize("t", [0.3, 1.0, 2.0, 6.0])
def test_kernels_match_frequency_integrals(s, t):
    # independent quadratures of the spectral density
    p = SpectralParams(s)
    J = lambda w: spectral_density(w, p)
    gamma = quad(lambda w: J(w) * math.sin(w * t) / w, 0, np.inf, limit=400)[0]
    big = quad(lambda w: J(w) * (1 - math.cos(w * t)) / w**2, 0, np.inf, limit=400)[0]
    phase = quad(lambda w: J(w) * math.sin(w * t) / w**2, 0, np.inf, limit=400)[0]
    assert decay_rate(t, p) == pytest.approx(gamma, abs=1e-8)
    assert decoherence_fn(t, p) == pytest.approx(big, abs=1e-8)
    assert phase_fn(t, p) == pytest.approx(phase, abs=1e-8)


def test_phase_fn_against_oracle(env_s3, env_s4):
    assert phase_fn(0.0, SpectralParams(3)) == 0.0
    assert phase_fn(1.0, SpectralParams(3)) == pytest.approx(oracle_phase(env_s3, 1.0), abs=1e-3)
    assert phase_fn(2.0, SpectralParams(4)) == pytest.approx(oracle_phase(env_s4, 2.0), abs=1e-3)


def test_control_phase_against_oracle(env_s3, env_s4):
    p3 = SpectralParams(3)
    assert control_phase_y(1.2, 1.2, p3) == 0.0
    assert control_phase_y(2.0, 1.0, SpectralParams(4)) == pytest.approx(
        oracle_control_phase(env_s4, 2.0, 1.0), abs=1e-3
    )
    assert control_phase_y(5.0, math.sqrt(3), p3) == pytest.approx(
        oracle_control_phase(env_s3, 5.0, math.sqrt(3)), abs=1e-3
    )


def test_control_phase_requires_pulse_first():
    with pytest.raises(DomainError):
        control_phase_y(1.0, 2.0, SpectralParams(3))


@given(ohmicity, st.floats(min_value=0.0, max_value=200.0))
def test_decoherence_never_negative(s, t):
    assert decoherence_fn(t, SpectralParams(s)) >= -1e-12


@settings(max_examples=80)
@given(st.floats(min_value=2.1, max_value=6.0), st.floats(min_value=0.01, max_value=20.0))
def test_derivative_of_decoherence_is_rate(s, t):
    # five-point stencil keeps truncation well below the tolerance near sign changes
    p = SpectralParams(s)
    h = 5e-4
    G = lambda x: decoherence_fn(x, p)
    fd = (8 * (G(t + h) - G(t - h)) - (G(t + 2 * h) - G(t - 2 * h))) / (12 * h)
    g = decay_rate(t, p)
    assert abs(fd - g) <= 1e-6 * max(abs(g), 1e-3)


@settings(max_examples=80)
@given(st.floats(min_value=2.1, max_value=8.0), st.floats(min_value=0.01, max_value=40.0))
def test_central_difference_within_truncation_bound(s, t):
    p = SpectralParams(s)
    h = 1e-4
    fd = (decoherence_fn(t + h, p) - decoherence_fn(t - h, p)) / (2 * h)
    curvature = abs(decay_rate(t + h, p) - 2 * decay_rate(t, p) + decay_rate(t - h, p)) / h**2
    bound = h**2 / 6 * curvature * 1.01 + 1e-10 * (1 + p.asymptotic_decoherence)
    assert abs(fd - decay_rate(t, p)) <= bound


@pytest.mark.parametrize(
    "s,expected",
    [(3, [math.sqrt(3)]), (4, [1.0]), (5, [0.7265425280053609, 3.0776835371752536]), (2, [])],
)
def test_zero_crossings(s, expected):
    roots = rate_zero_crossings(SpectralParams(s))
    assert len(roots) == len(expected)
    for r, e in zip(roots, expected):
        assert r == pytest.approx(e, abs=1e-12)
        assert abs(decay_rate(r, SpectralParams(s))) < 1e-12


@given(ohmicity)
def test_rate_sign_changes_only_at_crossings(s):
    p = SpectralParams(s)
    roots = rate_zero_crossings(p)
    t = np.linspace(1e-3, 50, 4001)
    g = decay_rate(t, p)
    sign_changes = np.count_nonzero(np.diff(np.sign(g[np.abs(g) > 1e-12])))
    assert sign_changes == len([r for r in roots if r < 50])


def test_horizon_rule():
    assert horizon(SpectralParams(4), 30) == (30.0, pytest.approx(1.0, abs=1e-15))
    T, tt = horizon(SpectralParams(5), 30)
    assert T == pytest.approx(3.0776835, abs=1e-7)
    assert tt == pytest.approx(0.7265425, abs=1e-7)
    with pytest.raises(HorizonTooShortError):
        horizon(SpectralParams(2.02), 30)
    with pytest.raises(NoCrossingError):
        horizon(SpectralParams(2.0), 30)


def test_kernel_table_columns():
    p = SpectralParams(3)
    rows = kernel_table(p, [0.0, 1.0])
    assert rows[1].t == 1.0
    assert rows[1].gamma == pytest.approx(0.5)
    assert rows[1].big_gamma == pytest.approx(decoherence_fn(1.0, p))
    assert rows[1].tilde_gamma == pytest.approx(phase_fn(1.0, p))
