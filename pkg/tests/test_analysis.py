import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_stable
from perisat.analysis import (brl_gamma_certificate, brl_threshold, closed_loop_maps,
                              frozen_frequency_response, is_periodically_stable, loop_margins,
                              monodromy, shape_compliance, siso_margins)
from perisat.ltp import LtpSystem, TimeGrid, TrigMatrixFunction

LAG = LtpSystem.lti([[-1.0]], [[1.0]], [[1.0]])
W = np.logspace(-3, 3, 600)


def test_frozen_response_first_order():
    r = frozen_frequency_response(LAG, 0.0, [1.0])
    assert r.response[0, 0, 0] == pytest.approx(1 / (1 + 1j))
    assert r.peak_gain() == pytest.approx(1 / math.sqrt(2))
    hf = LtpSystem.lti([[-1.0]], [[1.0]], [[1.0]], [[0.3]])
    assert frozen_frequency_response(hf, 0.0, [1e12]).response[0, 0, 0] == pytest.approx(0.3)


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 100))
def test_frozen_response_periodic_in_time(t):
    A = TrigMatrixFunction(10.0, [[-1.0]], cos={1: [[0.5]]})
    sys = LtpSystem(A, np.ones((1, 1)), np.ones((1, 1)))
    a = frozen_frequency_response(sys, t, [0.1, 1.0]).response
    b = frozen_frequency_response(sys, t + 10.0, [0.1, 1.0]).response
    assert np.allclose(a, b, rtol=1e-9)


def test_closed_loop_maps_zero_controller():
    rng = np.random.default_rng(0)
    P = LtpSystem.lti(*random_stable(rng, 3, 2, 2))
    K = LtpSystem.lti(np.zeros((0, 0)), np.zeros((0, 2)), np.zeros((2, 0)), np.zeros((2, 2)))
    S, SP, KS, KSP = closed_loop_maps(P, K, 0.0, W)
    assert np.allclose(S.response, np.eye(2))
    assert np.allclose(SP.response, frozen_frequency_response(P, 0.0, W).response)
    assert np.all(KS.response == 0) and np.all(KSP.response == 0)


def test_closed_loop_maps_scalar_and_identity():
    unit = LtpSystem.lti(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), [[1.0]])
    S, _, KS, _ = closed_loop_maps(LAG, unit, 0.0, [1e-12])
    assert S.response[0, 0, 0] == pytest.approx(0.5)
    assert KS.response[0, 0, 0] == pytest.approx(0.5)
    rng = np.random.default_rng(1)
    P = LtpSystem.lti(*random_stable(rng, 4, 2, 2))
    K = LtpSystem.lti(*random_stable(rng, 2, 2, 2))
    S, SP, _, _ = closed_loop_maps(P, K, 0.0, W)
    Kw = frozen_frequency_response(K, 0.0, W).response
    assert np.allclose(S.response + SP.response @ Kw, np.eye(2), atol=1e-10)


def test_margins_integrator():
    gm, pm = siso_margins(lambda w: 1 / (1j * w), W)
    assert gm == math.inf
    assert pm == pytest.approx(90.0, abs=1e-8)


def test_margins_third_order_lag():
    gm, pm = siso_margins(lambda w: 2 / (1j * w + 1) ** 3, W)
    # phase crossover at w = sqrt(3) where |l| = 1/4
    assert gm == pytest.approx(20 * math.log10(4), abs=1e-8)
    wc = math.sqrt(2 ** (2 / 3) - 1)
    assert pm == pytest.approx(180 - 3 * math.degrees(math.atan(wc)), abs=1e-8)


def test_margins_no_crossover():
    gm, pm = siso_margins(lambda w: 0.5 / (1j * w + 1), W)
    assert gm == math.inf and math.isnan(pm)


def test_loop_margins_reduce_to_siso_for_decoupled_loops():
    P = LtpSystem.lti(-np.eye(2), np.eye(2), np.diag([2.0, 4.0]))
    K = LtpSystem.lti(-np.eye(2), np.eye(2), np.eye(2))
    rep = loop_margins(P, K, [0.0], freqs=W, period=1.0)
    for j, g in enumerate((2.0, 4.0)):
        gm, pm = siso_margins(lambda w: g / (1j * w + 1) ** 2, W)
        assert rep.gain_margin_db[0, j] == gm
        assert rep.phase_margin_deg[0, j] == pytest.approx(pm)
    assert len(list(rep.rows())) == 2


def test_monodromy_scalar_closed_form():
    T = 3.0
    a = TrigMatrixFunction(T, [[-0.4]], cos={1: [[2.0]]}, sin={2: [[1.0]]})
    # the oscillating terms integrate to zero over a period
    assert monodromy(a, T)[0, 0] == pytest.approx(math.exp(-0.4 * T), rel=1e-10)
    assert is_periodically_stable(a, T)
    b = TrigMatrixFunction(T, [[0.1]], cos={1: [[2.0]]})
    assert not is_periodically_stable(b, T)


def test_brl_first_order():
    g = TimeGrid(10.0, 200)
    assert brl_gamma_certificate(LAG, 1.1, g)
    assert not brl_gamma_certificate(LAG, 0.9, g)
    zero = LtpSystem.lti(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), [[0.0]])
    assert brl_gamma_certificate(zero, 1e-6, g)
    unstable = LtpSystem.lti([[0.5]], [[1.0]], [[1.0]])
    assert not brl_gamma_certificate(unstable, 100.0, g)
    with pytest.raises(ValueError):
        brl_gamma_certificate(LAG, 0.0, g)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_brl_threshold_matches_peak_gain(seed):
    rng = np.random.default_rng(seed)
    sys = LtpSystem.lti(*random_stable(rng, 3, 2, 2, margin=0.5))
    w = np.logspace(-3, 3, 4000)
    peak = frozen_frequency_response(sys, 0.0, w).peak_gain()
    g = TimeGrid(10.0, 400)
    thr = brl_threshold(sys, g, 0.5 * peak, 2.0 * peak, rel_tol=1e-4, tol=1e-11,
                        max_periods=1000)
    assert abs(thr - peak) / peak < 0.01
    ladder = [brl_gamma_certificate(sys, k * peak, g) for k in (0.8, 0.95, 1.05, 1.5)]
    assert ladder == [False, False, True, True]


def test_abacus_margins_vary_continuously(abacus_margins):
    gm, pm = abacus_margins.gain_margin_db, abacus_margins.phase_margin_deg
    assert np.all(np.isfinite(gm)) and np.all(np.isfinite(pm))
    # wrap the orbit around to compare the last point with the first
    assert np.max(np.abs(np.diff(np.vstack([gm, gm[:1]]), axis=0))) < 1.0
    assert np.max(np.abs(np.diff(np.vstack([pm, pm[:1]]), axis=0))) < 2.0


def test_shape_ratios_identity_weights():
    P = LtpSystem.lti([[-1.0]], [[1.0]], [[1.0]])
    unit = LtpSystem.lti(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), [[1.0]])

    class Sc:
        Ve = np.ones(1)
        Vu = np.ones(1)

    rep = shape_compliance(P, unit, unit, unit, Sc, 2.0, [0.0], [1e-12], period=1.0)
    assert rep.ratio_S[0, 0, 0] == pytest.approx(0.25)
    assert rep.worst_ratio() == pytest.approx((0.25, 0.25))
    assert rep.complies(1.1)
