import math

import numpy as np
import pytest
from scipy.integrate import quad

from dephasing_control import (
    BlochVector,
    ControlProtocol,
    InfeasibleProtocolError,
    InputError,
    SpectralParams,
    Trajectory,
    average_coherence,
    controlled_average_coherence,
    controlled_protocol,
    decoherence_fn,
    horizon,
    grid_search_verify,
    horizon_sensitivity,
    propagate_fixed_dissipator,
    solve_initial_angle,
    sweep,
    trajectory,
    uncontrolled_optimum,
)
from dephasing_control.control import initial_angle_from_decoherence, protocol_average_coherence

S3, S4 = SpectralParams(3), SpectralParams(4)


def _const(state, T=5.0):
    t = np.linspace(0, T, 11)
    return Trajectory(t, np.tile(state, (t.size, 1)))


def test_average_coherence_constant_states():
    assert average_coherence(_const([1, 0, 0]), 5.0) == pytest.approx(1.0)
    assert average_coherence(_const([0, 0, 1]), 5.0) == 0.0
    with pytest.raises(InputError):
        average_coherence(_const([1, 0, 0]), 6.0)


def test_average_coherence_uncontrolled_against_quadrature():
    exact = quad(lambda t: math.exp(-decoherence_fn(t, S3)), 0, 30, limit=200, epsabs=1e-13)[0] / 30
    assert uncontrolled_optimum(S3, 30.0).cbar_uncontrolled == pytest.approx(exact, abs=1e-7)


def test_average_coherence_refinement():
    a = uncontrolled_optimum(S4, 30.0, steps=10_000).cbar_uncontrolled
    b = uncontrolled_optimum(S4, 30.0, steps=20_000).cbar_uncontrolled
    assert abs(a - b) < 1e-6
    phi, prot = controlled_protocol(S4)
    c1, _ = protocol_average_coherence(S4, 30.0, phi, prot, steps=10_000)
    c2, _ = protocol_average_coherence(S4, 30.0, phi, prot, steps=20_000)
    assert abs(c1 - c2) < 1e-6


def test_uncontrolled_optimum():
    res = uncontrolled_optimum(S3, 30.0)
    assert res.phi_in == math.pi / 2
    assert not res.feasible
    assert 0 < res.cbar_uncontrolled < 1
    assert uncontrolled_optimum(S3, 1e-4, steps=100).cbar_uncontrolled == pytest.approx(1.0, abs=1e-6)


def test_initial_angle_edge_cases():
    assert initial_angle_from_decoherence(1.3, 1.3) == 0.0
    assert initial_angle_from_decoherence(0.4, 0.0) == math.pi / 2
    # almost no first-leg loss, fully undone by the revival
    assert initial_angle_from_decoherence(1e-6, 1e-9) == pytest.approx(math.pi / 2, abs=0.05)
    with pytest.raises(InfeasibleProtocolError):
        initial_angle_from_decoherence(1.0, 1.5)


def test_solve_initial_angle_s4():
    phi = solve_initial_angle(S4, 30.0, 1.0)
    assert phi == pytest.approx(0.923, abs=1e-3)
    assert phi > 0.2 * math.pi
    # the defining constraint
    G1, G30 = decoherence_fn(1.0, S4), decoherence_fn(30.0, S4)
    lhs = math.cos(phi) ** 2 + math.sin(phi) ** 2 * math.exp(-2 * G1)
    assert lhs == pytest.approx(math.exp(2 * (G30 - G1)), rel=1e-13)


@pytest.mark.parametrize("s", [3.0, 4.0, 5.0, 6.0])
def test_controlled_protocol_ends_on_sphere(s):
    p = SpectralParams(s)
    phi, prot = controlled_protocol(p)
    T = horizon(p, 30.0)[0]
    r0 = BlochVector.from_polar(phi)
    tp = prot.pulses[0].time
    after = propagate_fixed_dissipator(r0, prot, tp, p)
    assert abs(after.rz) <= 1e-12
    end = propagate_fixed_dissipator(r0, prot, T, p)
    assert abs(end.norm - 1) <= 1e-9
    assert abs(abs(end.rx) - 1) <= 1e-9


def test_controlled_protocol_s5_uses_second_crossing():
    res = controlled_average_coherence(SpectralParams(5))
    assert res.T == pytest.approx(math.tan(2 * math.pi / 5), abs=1e-12)
    assert res.final_norm == pytest.approx(1.0, abs=1e-9)


def test_controlled_beats_uncontrolled_s4():
    res = controlled_average_coherence(S4)
    assert res.feasible
    assert res.cbar_controlled > res.cbar_uncontrolled + 1e-3
    assert 0 <= res.cbar_controlled_microscopic <= 1


def test_markovian_regime_is_infeasible():
    res = controlled_average_coherence(SpectralParams(2))
    assert not res.feasible
    assert res.cbar_controlled is None
    with pytest.raises(InfeasibleProtocolError):
        controlled_protocol(SpectralParams(2))


def test_degenerate_angle_zero_protocol():
    prot = ControlProtocol.single(1.0, "y", 0.0)
    cbar, _ = protocol_average_coherence(S4, 30.0, 0.0, prot, steps=1000)
    pole = trajectory(BlochVector(0, 0, 1), ControlProtocol(), np.linspace(0, 30, 1001), S4)
    assert cbar == average_coherence(pole, 30.0) == 0.0


def test_sweep_ordinal_structure():
    low = sweep([4.0, 2.5, 3.5, 3.0], steps=4000)
    assert [r.s for r in low] == [2.5, 3.0, 3.5, 4.0]
    assert all(np.diff([r.phi_in for r in low]) > 0)
    assert all(np.diff([r.cbar_controlled for r in low]) > 0)
    assert all(r.cbar_controlled > r.cbar_uncontrolled + 1e-3 for r in low)
    high = sweep([4.5, 5.0, 5.5, 6.0], steps=4000)
    assert all(np.diff([r.phi_in for r in high]) > 0)
    assert all(np.diff([r.cbar_controlled for r in high]) < 0)


def test_horizon_sensitivity_trend():
    rows = horizon_sensitivity(S3, [20.0, 30.0, 60.0], steps=3000)
    assert [r.T for r in rows] == [20.0, 30.0, 60.0]
    assert all(np.diff([r.cbar_controlled for r in rows]) > 0)


def test_grid_search_s4():
    best = grid_search_verify(S4, 30.0, resolution=100)
    analytic = controlled_average_coherence(S4).cbar_controlled
    assert best.cbar <= analytic + 1e-2
    assert abs(best.pulse_time - 1.0) <= 30.0 / 100
    assert best.n_evaluated == 100**3


def test_grid_search_s3_rotates_to_equator():
    best = grid_search_verify(S3, 30.0, resolution=100)
    assert abs(best.post_pulse_rz) <= math.sin(math.pi / 100)


def test_grid_search_single_candidate():
    best = grid_search_verify(S4, 30.0, resolution=1)
    assert best.n_evaluated == 1
    assert best.phi_in == pytest.approx(math.pi / 4)
    assert best.pulse_time == pytest.approx(15.0)
    assert best.pulse_angle == pytest.approx(math.pi / 2)
