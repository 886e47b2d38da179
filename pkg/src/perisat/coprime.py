"""Normalized left coprime factorization ``P = M^-1 N`` of an LTP plant."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import _response_at
from .ltp import GriddedMatrixFunction, LtpSystem, PeriodicMatrixFunction, TimeGrid, constant
from .rde import DEFAULT_MAX_PERIODS, DEFAULT_TOL, PeriodicRdeSolution, solve_periodic_filter_rde

__all__ = ["CoprimeFactorization", "normalized_coprime_factorization", "coisometry_residual"]


@dataclass(frozen=True, eq=False)
class CoprimeFactorization:
    Z: PeriodicRdeSolution
    L_tilde: PeriodicMatrixFunction
    N: LtpSystem
    M: LtpSystem  # identity feedthrough


def _filter_gain(sys: LtpSystem, Z: PeriodicRdeSolution) -> PeriodicMatrixFunction:
    C = sys.C.sample(Z.grid.points)
    L = -Z.values @ np.swapaxes(C, 1, 2)
    if sys.is_lti:
        # keep LTI plants LTI; the grid values agree to the RDE tolerance
        return constant(L[0])
    return GriddedMatrixFunction(Z.grid.period, L)


def normalized_coprime_factorization(sys: LtpSystem, grid: TimeGrid, tol: float = DEFAULT_TOL,
                                     max_periods: int = DEFAULT_MAX_PERIODS,
                                     Z: PeriodicRdeSolution | None = None) -> CoprimeFactorization:
    """``N = (A + L C, B, C, 0)``, ``M = (A + L C, L, C, I)`` with ``L = -Z C'``.

    ``Z`` is the stabilizing periodic filter solution; pass it to reuse one.
    """
    if Z is None:
        Z = solve_periodic_filter_rde(sys, grid, tol, max_periods)
    L = _filter_gain(sys, Z)
    Af = sys.A + L @ sys.C
    N = LtpSystem(Af, sys.B, sys.C)
    M = LtpSystem(Af, L, sys.C, np.eye(sys.ny))
    return CoprimeFactorization(Z, L, N, M)


def coisometry_residual(fact: CoprimeFactorization, freq_grid) -> float:
    """``max_w || M M* + N N* - I ||_2`` for a factorization of an LTI plant."""
    if not fact.N.is_lti:
        raise ValueError("co-isometry check is defined for LTI plants only")
    freqs = np.asarray(freq_grid, dtype=float)
    Mw = _response_at(fact.M, 0.0, freqs)
    Nw = _response_at(fact.N, 0.0, freqs)
    E = Mw @ np.conj(np.swapaxes(Mw, 1, 2)) + Nw @ np.conj(np.swapaxes(Nw, 1, 2))
    E -= np.eye(E.shape[1])
    return float(np.max(np.linalg.norm(E, ord=2, axis=(1, 2))))
