import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from perisat.ltp import (GriddedMatrixFunction, LtpSystem, TimeGrid, TrigMatrixFunction, block,
                         constant, feedback, lft, series, submatrix)


def trig(period=10.0):
    return TrigMatrixFunction(period, [[1.0, 2.0], [0.0, -1.0]],
                              cos={1: [[0.5, 0.0], [0.0, 0.0]]}, sin={2: [[0.0, 0.0], [1.0, 0.0]]})


def test_trig_values():
    f = trig()
    w = 2 * np.pi / 10.0
    t = 1.3
    expect = np.array([[1 + 0.5 * np.cos(w * t), 2.0], [np.sin(2 * w * t), -1.0]])
    assert np.allclose(f(t), expect, atol=1e-15)


@given(st.floats(-1e4, 1e4), st.integers(-5, 5))
def test_periodicity(t, k):
    f = trig()
    assert np.allclose(f(t), f(t + k * 10.0), atol=1e-9)


def test_algebra_pointwise():
    f, g = trig(), trig().T
    t = np.array([0.0, 2.5, 7.1])
    assert np.allclose((f @ g).sample(t), f.sample(t) @ g.sample(t))
    assert np.allclose((f + g - 2.0 * f).sample(t), g.sample(t) - f.sample(t))
    assert np.allclose((-f).sample(t), -f.sample(t))
    M = np.array([[1.0, 1.0], [0.0, 3.0]])
    assert np.allclose((M @ f).sample(t), M @ f.sample(t))


def test_shape_and_period_errors():
    with pytest.raises(ValueError):
        trig() @ constant(np.ones((3, 1)))
    with pytest.raises(ValueError):
        trig(10.0) + trig(11.0)
    with pytest.raises(ValueError):
        TrigMatrixFunction(None, np.eye(2), cos={1: np.eye(2)})
    with pytest.raises(ValueError):
        trig()(np.nan)


def test_gridded_interpolates_nodes_and_wraps():
    g = TimeGrid(6.0, 12)
    vals = np.sin(2 * np.pi * g.points / 6.0)[:, None, None] * np.ones((1, 2, 2))
    f = GriddedMatrixFunction(6.0, vals)
    assert np.allclose(f.sample(g.points), vals, atol=1e-14)
    assert np.allclose(f(6.5), f(0.5))
    assert abs(f(0.25)[0, 0] - np.sin(2 * np.pi * 0.25 / 6.0)) < 1e-3


def test_block_with_none_and_empty():
    f = block([[trig(), None], [None, np.eye(1)]])
    v = f(1.0)
    assert v.shape == (3, 3)
    assert np.all(v[:2, 2] == 0) and v[2, 2] == 1.0
    e = block([[np.zeros((2, 0)), np.ones((2, 1))]])
    assert e.shape == (2, 1)


def test_submatrix():
    f = trig()
    s = submatrix(f, slice(0, 1), slice(None))
    assert s.shape == (1, 2)
    assert np.allclose(s(0.4), f(0.4)[:1])


def test_system_dimension_checks():
    with pytest.raises(ValueError):
        LtpSystem.lti(np.eye(2), np.ones((3, 1)), np.ones((1, 2)))
    with pytest.raises(ValueError):
        LtpSystem.lti(np.eye(2), np.ones((2, 1)), np.ones((1, 2)), np.zeros((2, 2)))
    s = LtpSystem(trig(), np.ones((2, 1)), np.ones((1, 2)))
    assert not s.is_lti and s.period == 10.0 and s.Dmat.shape == (1, 1)


def _frozen_tf(sys, t, w):
    A, B, C = sys.evaluate(t)
    return C @ np.linalg.solve(1j * w * np.eye(A.shape[0]) - A, B) + sys.Dmat


def test_series_and_feedback_frozen_algebra():
    P = LtpSystem(trig(), np.array([[0.0], [1.0]]), np.array([[1.0, 0.0]]))
    K = LtpSystem.lti([[-2.0]], [[1.0]], [[3.0]], [[0.5]])
    t, w = 1.7, 0.8
    p, k = _frozen_tf(P, t, w), _frozen_tf(K, t, w)
    assert np.allclose(_frozen_tf(series(P, K), t, w), k @ p)
    S = np.linalg.inv(np.eye(1) + p @ k)
    expect = np.block([[S, -S @ p], [k @ S, -k @ S @ p]])
    assert np.allclose(_frozen_tf(feedback(P, K), t, w), expect)


def test_lft_matches_feedback():
    # generalized plant for the unweighted four-block map: inputs (r, d, u), outputs (e, u, e)
    P = LtpSystem(trig(), np.array([[0.0], [1.0]]), np.array([[1.0, 0.0]]))
    K = LtpSystem.lti([[-2.0]], [[1.0]], [[3.0]], [[0.5]])
    B = block([[np.zeros((2, 1)), P.B, P.B]])
    C = block([[-P.C], [np.zeros((1, 2))], [-P.C]])
    D = np.array([[1.0, 0, 0], [0, 0, 1.0], [1.0, 0, 0]])
    G = LtpSystem(P.A, B, C, D)
    a, b = lft(G, K, 1, 1), feedback(P, K)
    for t in (0.0, 3.3):
        for w in (0.1, 2.0):
            assert np.allclose(_frozen_tf(a, t, w), _frozen_tf(b, t, w))
    with pytest.raises(ValueError):
        lft(LtpSystem(P.A, B, C, np.ones((3, 3))), K, 1, 1)
