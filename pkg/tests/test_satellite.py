import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perisat.errors import SimulationBlowup
from perisat.ltp import LtpSystem
from perisat.satellite import (AbacusParams, DisturbanceModel, build_abacus,
                               simulate_closed_loop, uncertainty_sweep)

P = AbacusParams()
T = P.period
ZERO_K = LtpSystem.lti(np.zeros((0, 0)), np.zeros((0, 3)), np.zeros((3, 0)), np.zeros((3, 3)))


def _direct_A(p, t):
    """State matrix read straight off the second-order equations of motion."""
    n = p.n
    J1, J2, J3 = p.inertias
    c, s = math.cos(n * t), math.sin(n * t)
    A = np.zeros((6, 6))
    A[0, 1] = A[2, 3] = A[4, 5] = 1.0
    A[1, 0] = -3 * n**2 * (J2 - J3) * c**2 / J1
    A[1, 4] = -3 * n**2 * (J2 - J3) * 0.5 * math.sin(2 * n * t) / J1
    A[3, 2] = -3 * n**2 * (J1 - J3) * math.cos(2 * n * t) / J2
    A[5, 4] = -3 * n**2 * (J2 - J1) * s**2 / J3
    A[5, 0] = -3 * n**2 * (J2 - J1) * 0.5 * math.sin(2 * n * t) / J3
    return A


@pytest.mark.parametrize("frac", [0.0, 0.125, 0.25, 0.4, 0.5, 0.9])
def test_state_matrix_matches_equations(frac):
    for p in (P, P.perturbed((0.8, 1.2, 1.0))):
        sys = build_abacus(p)
        t = frac * p.period
        assert np.allclose(sys.A(t), _direct_A(p, t), rtol=1e-12, atol=1e-24)


def test_model_structure():
    sys = build_abacus(P)
    assert sys.period == pytest.approx(2 * math.pi / 7.292e-5)
    assert (sys.nx, sys.nu, sys.ny) == (6, 3, 3)
    t = np.linspace(0, T, 33)
    A = sys.A.sample(t)
    # pitch (states 2, 3) does not couple to roll or yaw
    assert np.all(A[:, 2:4, [0, 1, 4, 5]] == 0) and np.all(A[:, [0, 1, 4, 5], 2:4] == 0)
    assert np.allclose(sys.B(0.0)[[1, 3, 5], [0, 1, 2]], 1 / P.inertias)


def test_literal_exponent_scales_inertias():
    lit = AbacusParams(literal_exponent=True)
    assert np.allclose(lit.inertias, 1e10 * P.inertias)
    with pytest.raises(ValueError):
        AbacusParams(J1=-1.0)
    with pytest.raises(ValueError):
        AbacusParams(inertia_perturbation=(1.0, 0.0, 1.0))


def test_disturbance_values():
    d = DisturbanceModel(P)
    assert np.allclose(d(0.0), [20.0, 240.0, 0.0])
    assert np.allclose(d(T / 4), [2400.0, 240.0, -2380.0], atol=1e-9)
    assert np.allclose(d(T / 2), [4780.0, 240.0, 0.0], atol=1e-9)
    gg = 3 * P.n**2 / 10 * (4.6e13 - 2.8e13)
    assert d(T / 8)[1] == pytest.approx(240.0 + gg)
    assert d(np.array([0.0, 1.0])).shape == (2, 3)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1e6))
def test_disturbance_periodic(t):
    d = DisturbanceModel(P)
    assert np.allclose(d(t), d(t + T), atol=1e-6)


def test_zero_initial_state_without_disturbance_stays_zero(abacus_design):
    res = simulate_closed_loop(build_abacus(P), abacus_design["controller"], None,
                               (0.0, 0.0, 0.0), 1.0, steps_per_orbit=1000)
    assert np.all(res.theta == 0) and np.all(res.control == 0)
    assert np.all(res.final_orbit_max_deg == 0)


def test_open_loop_pitch_drifts():
    res = simulate_closed_loop(build_abacus(P), ZERO_K, DisturbanceModel(P), (0.0, 0.0, 0.0),
                               1.0, steps_per_orbit=2000)
    assert res.final_orbit_max_deg[1] > 0.5
    assert np.all(res.control == 0)


def test_superposition(abacus_design):
    K = abacus_design["controller"]
    plant, d = build_abacus(P), DisturbanceModel(P)
    kw = dict(horizon_orbits=1.0, steps_per_orbit=1000)
    both = simulate_closed_loop(plant, K, d, (10.0, -5.0, 3.0), **kw)
    ic = simulate_closed_loop(plant, K, None, (10.0, -5.0, 3.0), **kw)
    dist = simulate_closed_loop(plant, K, d, (0.0, 0.0, 0.0), **kw)
    scale = np.max(np.abs(both.theta))
    assert np.max(np.abs(both.theta - ic.theta - dist.theta)) < 1e-10 * scale


def test_initial_condition_and_step_refinement(abacus_design):
    K = abacus_design["controller"]
    plant, d = build_abacus(P), DisturbanceModel(P)
    coarse = simulate_closed_loop(plant, K, d, horizon_orbits=2.0, steps_per_orbit=2000)
    fine = simulate_closed_loop(plant, K, d, horizon_orbits=2.0, steps_per_orbit=4000)
    assert np.allclose(coarse.theta_deg[0], [10.0, 10.0, 10.0])
    assert np.all(np.abs(fine.final_orbit_max_deg / coarse.final_orbit_max_deg - 1) < 0.01)
    assert np.array_equal(fine.time[::2], coarse.time)


def test_blowup_raises():
    K = LtpSystem.lti(np.zeros((0, 0)), np.zeros((0, 3)), np.zeros((3, 0)), -1e12 * np.eye(3))
    with pytest.raises(SimulationBlowup) as info:
        simulate_closed_loop(build_abacus(P), K, None, horizon_orbits=50.0, steps_per_orbit=200)
    assert info.value.time > 0


def test_step_arguments():
    with pytest.raises(ValueError):
        simulate_closed_loop(build_abacus(P), ZERO_K, step=-1.0)
    res = simulate_closed_loop(build_abacus(P), ZERO_K, None, horizon_orbits=0.01, step=T / 500)
    assert res.time[1] == pytest.approx(T / 500)


@pytest.fixture(scope="module")
def short_sweep(abacus_design):
    return uncertainty_sweep(P, abacus_design["controller"], horizon_orbits=1.0,
                             steps_per_orbit=1000)


def test_sweep_corners_and_nominal(short_sweep, abacus_design):
    rep = short_sweep
    assert len(rep.corners) == 27 and rep.all_stable and rep.failed == []
    assert rep.corners[0].factors == (0.8, 0.8, 0.8) and rep.corners[-1].factors == (1.2, 1.2, 1.2)
    nom = simulate_closed_loop(build_abacus(P), abacus_design["controller"], DisturbanceModel(P),
                               horizon_orbits=1.0, steps_per_orbit=1000)
    assert np.array_equal(rep.nominal.theta, nom.theta)
    assert np.all(rep.theta_min_deg <= nom.theta_deg) and np.all(nom.theta_deg <= rep.theta_max_deg)
    assert np.all(rep.worst_final_orbit_deg >= nom.final_orbit_max_deg)


def test_sweep_is_deterministic(short_sweep, abacus_design):
    again = uncertainty_sweep(P, abacus_design["controller"], horizon_orbits=1.0,
                              steps_per_orbit=1000)
    assert np.array_equal(again.theta_max_deg, short_sweep.theta_max_deg)
    assert all(np.array_equal(a.final_orbit_max_deg, b.final_orbit_max_deg)
               for a, b in zip(again.corners, short_sweep.corners))
