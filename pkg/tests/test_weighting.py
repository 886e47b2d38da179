import numpy as np
import pytest

from helpers import random_stable
from perisat.analysis import _response_at
from perisat.ltp import LtpSystem, lft
from perisat.weighting import (ControlWeight, ScalingSet, SensitivityWeight,
                               assemble_weighted_controller, build_weighted_design_plant,
                               diagonal_weight, identity_weight, make_control_weight,
                               make_sensitivity_weight, weighted_closed_loop)

W = np.logspace(-7, -1, 300)


def _siso(sys, w):
    return _response_at(sys, 0.0, w)[:, 0, 0]


@pytest.mark.parametrize("omega_bw,eps", [(1e-5, 1e-4), (1e-3, 1e-2), (2.0, 0.1)])
def test_sensitivity_weight(omega_bw, eps):
    ref = SensitivityWeight(omega_bw, eps)
    sys = make_sensitivity_weight(omega_bw, eps)
    w = np.logspace(-4, 4, 50) * omega_bw
    assert np.allclose(_siso(sys, w), ref(1j * w), rtol=1e-10)
    assert ref(0.0) == pytest.approx(1 / eps)
    assert abs(ref(1e9j * omega_bw)) == pytest.approx(0.5, rel=1e-6)
    # the corner is placed so the magnitude crosses one at omega_bw
    assert abs(ref(1j * omega_bw)) == pytest.approx(1.0, rel=1e-12)
    assert np.max(sys.A(0.0)) < 0


@pytest.mark.parametrize("omega_u", [1.3e-3, 1.0])
def test_control_weight(omega_u):
    ref = ControlWeight(omega_u)
    sys = make_control_weight(omega_u)
    w = np.logspace(-4, 4, 50) * omega_u
    assert np.allclose(_siso(sys, w), ref(1j * w), rtol=1e-10)
    assert ref(0.0) == 1.0
    assert abs(ref(1e9j * omega_u)) == pytest.approx(100.0, rel=1e-6)
    assert abs(ref(10j * omega_u)) == pytest.approx(10.0, rel=0.2)


def test_weight_argument_checks():
    with pytest.raises(ValueError):
        SensitivityWeight(0.0)
    with pytest.raises(ValueError):
        SensitivityWeight(1.0, 1.0)
    with pytest.raises(ValueError):
        ControlWeight(-1.0)
    with pytest.raises(ValueError):
        ScalingSet([1.0, 0.0], [1.0], [1.0])


def test_degree_scalings_are_radians():
    deg = [0.1, 0.1, 0.1]
    sc = ScalingSet.from_degrees(deg, [5.0, 3.0, 5.0], [2400.0, 240.0, 2380.0])
    assert np.array_equal(sc.Ve, np.radians(deg))


def test_diagonal_weight_is_decoupled():
    Wd = diagonal_weight([make_sensitivity_weight(1.0), make_sensitivity_weight(2.0)])
    R = _response_at(Wd, 0.0, [0.5, 3.0])
    assert np.all(R[:, 0, 1] == 0) and np.all(R[:, 1, 0] == 0)
    assert np.allclose(R[:, 1, 1], SensitivityWeight(2.0)(1j * np.array([0.5, 3.0])))


def test_abacus_design_dimensions(abacus_design):
    d = abacus_design
    design = d["synthesis"].design
    assert design.augmented.nx == 12
    assert (design.augmented.ny, design.augmented.nu) == (9, 9)
    K = d["controller"].realization
    assert K.nx == 12
    assert np.array_equal(K.Dmat, np.zeros((3, 3)))
    t = np.linspace(0, d["params"].period, 7)
    BK = K.B.sample(t)
    assert np.all(BK[:, 9:, :] == 0)
    assert np.all(K.A.sample(t)[:, 6:9, :6] == 0)


def test_identity_weights_reduce_to_plain_plant():
    rng = np.random.default_rng(3)
    P = LtpSystem.lti(*random_stable(rng, 3, 2, 2))
    design = build_weighted_design_plant(P, identity_weight(2), identity_weight(2),
                                         ScalingSet.identity(2, 2))
    assert design.augmented.nx == 3
    assert np.array_equal(design.filter_system.C(0.0), P.C(0.0))
    L = rng.standard_normal((3, 2))
    F = rng.standard_normal((2, 3))
    K = assemble_weighted_controller(P, L, F, identity_weight(2), identity_weight(2),
                                     ScalingSet.identity(2, 2))
    assert np.allclose(K.realization.A(0.0), P.A(0.0) + L @ P.C(0.0) + P.B(0.0) @ F)


def _closed_maps(P, K, t, w):
    Pw, Kw = _response_at(P, t, w), _response_at(K, t, w)
    S = np.linalg.inv(np.eye(Pw.shape[1]) + Pw @ Kw)
    return Pw, Kw, S


def _close(a, b, tol):
    return np.max(np.abs(a - b)) <= tol * np.max(np.abs(b))


def test_weighted_chain_matches_scaled_loop_maps(abacus_design):
    d = abacus_design
    design, K = d["synthesis"].design, d["controller"]
    sc = d["scalings"]
    Ve, Vd, Vu_inv = np.diag(sc.Ve), np.diag(sc.Vd), np.diag(1 / sc.Vu)
    Ve_inv = np.diag(1 / sc.Ve)
    for t in (0.0, 0.3 * d["params"].period):
        cl = _response_at(lft(design.augmented, K.realization, 3, 3), t, W)
        Pw, Kw, S = _closed_maps(d["plant"], K, t, W)
        We, Wu = _response_at(d["We"], 0.0, W), _response_at(d["Wu"], 0.0, W)
        assert _close(cl[:, :3, :3], We @ Ve_inv @ S @ Ve, 1e-8)
        assert _close(cl[:, 3:, :3], Wu @ Vu_inv @ Kw @ S @ Ve, 1e-8)
        assert _close(cl[:, :3, 3:], -We @ Ve_inv @ S @ Pw @ Vd, 1e-8)
        assert _close(cl[:, 3:, 3:], -Wu @ Vu_inv @ Kw @ S @ Pw @ Vd, 1e-8)


def test_reduced_closed_loop_matches_full_lft(abacus_design):
    d = abacus_design
    design, K = d["synthesis"].design, d["controller"]
    reduced = weighted_closed_loop(design, K)
    full = lft(design.augmented, K.realization, 3, 3)
    assert reduced.nx == 18 and full.nx == 24
    for t in (0.0, 0.61 * d["params"].period):
        assert _close(_response_at(reduced, t, W), _response_at(full, t, W), 1e-8)
