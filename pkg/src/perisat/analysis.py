"""Frozen-time frequency analysis, loop margins, and the periodic bounded-real certificate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import RdeError
from .ltp import LtpSystem, TimeGrid
from .rde import RdeCoefficients, solve_periodic_rde

__all__ = [
    "FrozenResponse",
    "frozen_frequency_response",
    "closed_loop_maps",
    "siso_margins",
    "MarginReport",
    "loop_margins",
    "brl_coefficients",
    "brl_gamma_certificate",
    "brl_threshold",
    "monodromy",
    "is_periodically_stable",
    "ShapeReport",
    "shape_compliance",
]


@dataclass(frozen=True)
class FrozenResponse:
    frozen_time: float
    frequencies: np.ndarray
    response: np.ndarray  # (n_freq, ny, nu), complex

    def __post_init__(self):
        w = np.asarray(self.frequencies)
        if np.any(w <= 0) or np.any(np.diff(w) <= 0):
            raise ValueError("frequencies must be positive and strictly increasing")

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.response)

    def peak_gain(self) -> float:
        return float(np.max(np.linalg.norm(self.response, ord=2, axis=(1, 2))))


def _realization(sys):
    return getattr(sys, "realization", sys)


def _response_at(sys: LtpSystem, t: float, freqs) -> np.ndarray:
    sys = _realization(sys)
    A, B, C = sys.evaluate(t)
    D = sys.Dmat
    freqs = np.asarray(freqs, dtype=float)
    n = A.shape[0]
    if n == 0:
        return np.broadcast_to(D.astype(complex), (freqs.size,) + D.shape).copy()
    lhs = 1j * freqs[:, None, None] * np.eye(n) - A
    try:
        X = np.linalg.solve(lhs, np.broadcast_to(B.astype(complex), (freqs.size,) + B.shape))
    except np.linalg.LinAlgError:
        for w, M in zip(freqs, lhs):
            if np.linalg.cond(M) > 1e15:
                raise ValueError(f"singular resolvent at omega = {w:g} rad/s") from None
        raise
    return C @ X + D


def frozen_frequency_response(sys, t: float, freqs) -> FrozenResponse:
    """``C(t) (j w I - A(t))^-1 B(t) + D`` with coefficients frozen at ``t``."""
    freqs = np.asarray(freqs, dtype=float)
    return FrozenResponse(float(t), freqs, _response_at(sys, t, freqs))


def closed_loop_maps(plant, controller, t: float, freqs):
    """Frozen ``S, S P, K S, K S P`` at time ``t`` (loop convention ``e = r - y``, ``u = K e``)."""
    freqs = np.asarray(freqs, dtype=float)
    P = _response_at(plant, t, freqs)
    K = _response_at(controller, t, freqs)
    ny = P.shape[1]
    IPK = np.eye(ny) + P @ K
    if np.any(np.abs(np.linalg.det(IPK)) < 1e-300):
        raise ValueError("I + P K singular on the frequency grid")
    S = np.linalg.inv(IPK)
    SP = S @ P
    KS = K @ S
    KSP = KS @ P
    wrap = lambda R: FrozenResponse(float(t), freqs, R)
    return wrap(S), wrap(SP), wrap(KS), wrap(KSP)


# -- margins -----------------------------------------------------------------

def _broken_loop(G: np.ndarray, i: int) -> np.ndarray:
    """SISO loop at channel ``i`` of the loop gain ``G`` with the other loops closed."""
    n = G.shape[-1]
    if n == 1:
        return G[..., 0, 0]
    o = [k for k in range(n) if k != i]
    Goo = G[..., o, :][..., :, o]
    Gio = G[..., i:i + 1, :][..., :, o]
    Goi = G[..., o, :][..., :, i:i + 1]
    corr = Gio @ np.linalg.solve(np.eye(n - 1) + Goo, Goi)
    return G[..., i, i] - corr[..., 0, 0]


def _refine(f, a, b, iters=80, xtol=1e-12):
    """Bisection for a sign change of ``f`` on ``[a, b]`` in log frequency."""
    la, lb = math.log(a), math.log(b)
    fa = f(a)
    for _ in range(iters):
        lm = 0.5 * (la + lb)
        fm = f(math.exp(lm))
        if (fm > 0) == (fa > 0):
            la, fa = lm, fm
        else:
            lb = lm
        if lb - la < xtol:
            break
    return math.exp(0.5 * (la + lb))


def siso_margins(loop, freqs):
    """Gain margin (dB) and phase margin (deg) of a SISO loop ``loop(w)`` under negative feedback.

    Gain margins are measured at phase crossovers (loop real and negative) as
    ``-20 log10 |l|``; the one closest to instability in magnitude is returned
    as a non-negative distance (``inf`` without phase crossover).  Phase
    margins ``180 + arg l`` are evaluated at every unity-gain crossover and
    the smallest is returned (``nan`` without gain crossover).
    """
    freqs = np.asarray(freqs, dtype=float)
    l = np.asarray(loop(freqs))
    gms, pms = [], []
    im = l.imag
    for k in np.nonzero(np.sign(im[:-1]) * np.sign(im[1:]) < 0)[0]:
        w = _refine(lambda x: float(np.imag(loop(np.array([x]))[0])), freqs[k], freqs[k + 1])
        v = complex(loop(np.array([w]))[0])
        if v.real < 0:
            gms.append(abs(-20.0 * math.log10(abs(v))))
    mag = np.log(np.abs(l))
    for k in np.nonzero(np.sign(mag[:-1]) * np.sign(mag[1:]) < 0)[0]:
        w = _refine(lambda x: float(np.log(np.abs(loop(np.array([x]))[0]))), freqs[k], freqs[k + 1])
        v = complex(loop(np.array([w]))[0])
        pm = (math.degrees(math.atan2(v.imag, v.real)) + 180.0) % 360.0
        if pm > 180.0:
            pm -= 360.0
        pms.append(pm)
    gm = min(gms) if gms else math.inf
    pm = min(pms) if pms else math.nan
    return gm, pm


@dataclass
class MarginReport:
    orbit_fractions: np.ndarray
    channels: list
    gain_margin_db: np.ndarray  # (n_fractions, n_channels)
    phase_margin_deg: np.ndarray

    def rows(self):
        for i, f in enumerate(self.orbit_fractions):
            for j, c in enumerate(self.channels):
                yield float(f), c, float(self.gain_margin_db[i, j]), float(self.phase_margin_deg[i, j])

    def min_gain_margin(self, channel=None) -> float:
        cols = slice(None) if channel is None else [self.channels.index(channel)]
        return float(np.min(self.gain_margin_db[:, cols]))

    def min_phase_margin(self, channel=None) -> float:
        cols = slice(None) if channel is None else [self.channels.index(channel)]
        return float(np.nanmin(self.phase_margin_deg[:, cols]))


def default_margin_freqs(lo=1e-8, hi=1e-1, n=400):
    return np.logspace(math.log10(lo), math.log10(hi), n)


def loop_margins(plant, controller, orbit_fractions, channel=None, freqs=None,
                 period: float | None = None) -> MarginReport:
    """One-loop-at-a-time margins at the plant input, frozen at each orbit fraction.

    ``channel`` is a 0-based input index or ``None`` for all channels.
    """
    plant = _realization(plant)
    if freqs is None:
        freqs = default_margin_freqs()
    period = period or plant.period or _realization(controller).period
    if period is None:
        period = 1.0
    channels = list(range(plant.nu)) if channel is None else [int(channel)]
    fractions = np.asarray(orbit_fractions, dtype=float)
    gm = np.empty((fractions.size, len(channels)))
    pm = np.empty_like(gm)
    for a, frac in enumerate(fractions):
        t = frac * period

        def loop_gain(w, t=t):
            P = _response_at(plant, t, w)
            K = _response_at(controller, t, w)
            return K @ P

        for b, ch in enumerate(channels):
            gm[a, b], pm[a, b] = siso_margins(lambda w: _broken_loop(loop_gain(w), ch), freqs)
    return MarginReport(fractions, channels, gm, pm)


# -- periodic stability and bounded-real certificate -------------------------

def monodromy(A, period: float, steps: int = 2000) -> np.ndarray:
    """State-transition matrix over one period of ``dx/dt = A(t) x`` (RK4)."""
    h = period / steps
    samples = np.ascontiguousarray(A.sample(np.arange(2 * steps) * 0.5 * h))
    n = samples.shape[1]
    f = np.zeros((2 * steps, n))
    Phi = np.empty((n, n))
    out = np.empty((steps + 1, n))
    for j in range(n):
        x0 = np.zeros(n)
        x0[j] = 1.0
        if kernels.linear_rk4(samples, f, x0, h, steps, out) >= 0:
            return np.full((n, n), np.inf)
        Phi[:, j] = out[-1]
    return Phi


def is_periodically_stable(A, period: float, steps: int = 2000) -> bool:
    Phi = monodromy(A, period, steps)
    return bool(np.all(np.isfinite(Phi)) and np.max(np.abs(np.linalg.eigvals(Phi))) < 1.0)


def brl_coefficients(sys: LtpSystem, gamma: float) -> RdeCoefficients:
    """Backward bounded-real RDE ``-dP/dt = A'P + PA + C'C + (PB + C'D) Rg^-1 (B'P + D'C)``.

    ``Rg = gamma^2 I - D'D`` must be positive definite.
    """
    D = sys.Dmat
    Rg = gamma**2 * np.eye(sys.nu) - D.T @ D
    if np.min(np.linalg.eigvalsh(Rg)) <= 0:
        raise ValueError("gamma does not exceed the feedthrough norm")
    Ri = np.linalg.inv(Rg)
    drift = sys.A + sys.B @ (Ri @ D.T) @ sys.C
    quad = -(sys.B @ Ri @ sys.B.T)
    const = sys.C.T @ (np.eye(sys.ny) + D @ Ri @ D.T) @ sys.C
    return RdeCoefficients(drift, quad, const, "backward")


def brl_gamma_certificate(closed_loop: LtpSystem, gamma: float, grid: TimeGrid,
                          tol: float = 1e-9, max_periods: int = 200,
                          substeps: int | None = None, check_stability: bool = True) -> bool:
    """``True`` when the bounded-real RDE has a bounded PSD periodic solution at ``gamma``.

    This certifies an induced L2 gain of at most ``gamma``.  With
    ``check_stability`` the system matrix is additionally required to be
    exponentially stable (monodromy spectral radius below one).
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if closed_loop.nx == 0:
        return bool(np.linalg.norm(closed_loop.Dmat, 2) < gamma)
    if np.linalg.norm(closed_loop.Dmat, 2) >= gamma:
        return False
    if check_stability and not is_periodically_stable(closed_loop.A, grid.period):
        return False
    try:
        solve_periodic_rde(brl_coefficients(closed_loop, gamma), grid, tol, max_periods, substeps)
    except RdeError:
        return False
    return True


def brl_threshold(closed_loop: LtpSystem, grid: TimeGrid, lo: float, hi: float,
                  rel_tol: float = 1e-4, **kw) -> float:
    """Smallest certified level in ``[lo, hi]`` found by bisection."""
    if not brl_gamma_certificate(closed_loop, hi, grid, **kw):
        raise ValueError("upper level not certified")
    while (hi - lo) / hi > rel_tol:
        mid = 0.5 * (lo + hi)
        if brl_gamma_certificate(closed_loop, mid, grid, **kw):
            hi = mid
        else:
            lo = mid
    return hi


# -- loop-shape compliance ---------------------------------------------------

@dataclass
class ShapeReport:
    """Frozen ``|S_ii|`` and ``|KS_ii|`` against their gamma-scaled inverse-weight bounds.

    ``ratio_*`` is the response magnitude divided by ``gamma`` times the
    bound shape, so compliance at factor ``c`` means every ratio is ``<= c``.
    """

    orbit_fractions: np.ndarray
    frequencies: np.ndarray
    gamma: float
    S_mag: np.ndarray  # (n_fractions, n_freq, n_channels)
    KS_mag: np.ndarray
    ratio_S: np.ndarray
    ratio_KS: np.ndarray

    def worst_ratio(self) -> tuple[float, float]:
        return float(np.max(self.ratio_S)), float(np.max(self.ratio_KS))

    def complies(self, factor: float = 1.1) -> bool:
        return max(self.worst_ratio()) <= factor


def _diag_weight_response(W: LtpSystem, freqs) -> np.ndarray:
    R = _response_at(W, 0.0, freqs)
    return np.abs(np.diagonal(R, axis1=1, axis2=2))


def shape_compliance(plant, controller, We: LtpSystem, Wu: LtpSystem, scalings, gamma: float,
                     orbit_fractions, freqs, period: float | None = None) -> ShapeReport:
    """Per-channel check of ``|We_i S_ii| <= gamma`` and ``|Wu_i KS_ii| Ve_i / Vu_i <= gamma``."""
    plant = _realization(plant)
    period = period or plant.period or 1.0
    fractions = np.asarray(orbit_fractions, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    we = _diag_weight_response(We, freqs)
    wu = _diag_weight_response(Wu, freqs)
    Ve, Vu = np.asarray(scalings.Ve), np.asarray(scalings.Vu)
    S_mag, KS_mag = [], []
    for frac in fractions:
        S, _, KS, _ = closed_loop_maps(plant, controller, frac * period, freqs)
        S_mag.append(np.abs(np.diagonal(S.response, axis1=1, axis2=2)))
        KS_mag.append(np.abs(np.diagonal(KS.response, axis1=1, axis2=2)))
    S_mag, KS_mag = np.array(S_mag), np.array(KS_mag)
    ratio_S = S_mag * we / gamma
    ratio_KS = KS_mag * wu * (Ve / Vu) / gamma
    return ShapeReport(fractions, freqs, gamma, S_mag, KS_mag, ratio_S, ratio_KS)
