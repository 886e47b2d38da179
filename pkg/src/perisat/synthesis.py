"""Structured observer-based output-feedback synthesis.

The controller is a filter ``xi' = (A + L C) xi + L e + B u`` with state
feedback ``u = F xi``.  ``L`` comes from the normalized coprime factorization
of the plant, which turns the four-block problem into a state-feedback problem
for ``F``; its Riccati equation is solved for a bisected performance level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoBracket, RdeError, UpperBoundInfeasible
from .ltp import (GriddedMatrixFunction, LtpSystem, PeriodicMatrixFunction, TimeGrid,
                  as_function, block, constant)
from .rde import (DEFAULT_MAX_PERIODS, DEFAULT_TOL, PeriodicRdeSolution, RdeCoefficients,
                  auto_substeps, controller_rde_coefficients, solve_periodic_rde)

__all__ = [
    "Infeasible",
    "StructuredController",
    "BisectionConfig",
    "BisectionResult",
    "StateFeedbackProblem",
    "two_block_problem",
    "synthesize_feedback_gain",
    "bisect_gamma",
    "bisect_state_feedback",
    "assemble_structured_controller",
    "transformed_openloop_realization",
]


@dataclass(frozen=True)
class Infeasible:
    """No stabilizing periodic Riccati solution at ``gamma``."""

    gamma: float
    reason: str

    def __bool__(self):
        return False


@dataclass(frozen=True, eq=False)
class StructuredController:
    L: PeriodicMatrixFunction
    F: PeriodicMatrixFunction
    realization: LtpSystem
    gamma_achieved: float = math.nan
    gamma_optimal: float = math.nan

    @property
    def nx(self) -> int:
        return self.realization.nx


@dataclass(frozen=True)
class BisectionConfig:
    gamma_lower: float = 1.0 + 1e-6
    gamma_upper: float = 100.0
    rel_tol: float = 1e-3
    max_iter: int = 40
    suboptimality: float = 1.1

    def __post_init__(self):
        if not 0 < self.gamma_lower < self.gamma_upper:
            raise ValueError("need 0 < gamma_lower < gamma_upper")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.suboptimality < 1.0:
            raise ValueError("suboptimality factor must be at least 1")


@dataclass
class BisectionResult:
    gamma_opt: float
    gamma_achieved: float
    F: PeriodicMatrixFunction
    X: PeriodicRdeSolution
    probes: list = field(default_factory=list)  # (gamma, feasible) in probe order

    def __iter__(self):
        # unpacks as (gamma_opt, F)
        yield self.gamma_opt
        yield self.F


def _gridded(values: np.ndarray, grid: TimeGrid, lti: bool) -> PeriodicMatrixFunction:
    if lti:
        return constant(values[0])
    return GriddedMatrixFunction(grid.period, values)


@dataclass(frozen=True, eq=False)
class StateFeedbackProblem:
    """Full-information problem ``x' = A x + B1 w + B2 u``, ``z = C1 x + D11 w + D12 u``.

    Level ``gamma`` is achievable by ``u = F x`` when the backward game RDE
    ``-X' = A'X + XA + C1'C1 - (XB + S) R^-1 (B'X + S')`` has a stabilizing
    periodic solution, with ``B = [B1 B2]``, ``S = C1' [D11 D12]`` and
    ``R = [D11 D12]'[D11 D12] - diag(gamma^2 I, 0)``.
    """

    A: PeriodicMatrixFunction
    B1: PeriodicMatrixFunction
    B2: PeriodicMatrixFunction
    C1: PeriodicMatrixFunction
    D11: np.ndarray
    D12: np.ndarray

    def __post_init__(self):
        for name in ("A", "B1", "B2", "C1"):
            object.__setattr__(self, name, as_function(getattr(self, name)))
        for name in ("D11", "D12"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), float)))
        n = self.A.rows
        if self.B1.rows != n or self.B2.rows != n or self.C1.cols != n:
            raise ValueError("inconsistent state dimension")
        if self.D11.shape != (self.C1.rows, self.B1.cols):
            raise ValueError(f"D11 must be {(self.C1.rows, self.B1.cols)}")
        if self.D12.shape != (self.C1.rows, self.B2.cols):
            raise ValueError(f"D12 must be {(self.C1.rows, self.B2.cols)}")
        if np.linalg.matrix_rank(self.D12) < self.B2.cols:
            raise ValueError("D12 must have full column rank")

    @property
    def n(self) -> int:
        return self.A.rows

    @property
    def nw(self) -> int:
        return self.B1.cols

    @property
    def is_lti(self) -> bool:
        return all(f.is_constant for f in (self.A, self.B1, self.B2, self.C1))

    @property
    def floor(self) -> float:
        """Infimum of achievable levels imposed by the feedthrough ``D11``."""
        return float(np.linalg.norm(self.D11, 2)) if self.D11.size else 0.0

    def _R_inv(self, gamma):
        D1 = np.hstack([self.D11, self.D12])
        R = D1.T @ D1
        R[: self.nw, : self.nw] -= gamma**2 * np.eye(self.nw)
        return np.linalg.inv(R), D1

    def coefficients(self, gamma: float) -> RdeCoefficients:
        if not gamma > self.floor:
            raise ValueError(f"gamma must exceed {self.floor}")
        Ri, D1 = self._R_inv(gamma)
        B = block([[self.B1, self.B2]])
        S = self.C1.T @ D1
        drift = self.A - B @ Ri @ S.T
        quad = B @ Ri @ B.T
        const = self.C1.T @ (np.eye(D1.shape[0]) - D1 @ Ri @ D1.T) @ self.C1
        return RdeCoefficients(drift, quad, const, "backward")

    def gain_values(self, X: PeriodicRdeSolution, gamma: float) -> np.ndarray:
        """``F`` on the solution grid: the control rows of ``-R^-1 (B'X + S')``."""
        Ri, D1 = self._R_inv(gamma)
        t = X.grid.points
        B = np.concatenate([self.B1.sample(t), self.B2.sample(t)], axis=2)
        St = D1.T @ self.C1.sample(t)
        K = -Ri @ (np.swapaxes(B, 1, 2) @ X.values + St)
        return K[:, self.nw:, :]


def two_block_problem(sys: LtpSystem, L) -> StateFeedbackProblem:
    """State-feedback form of the coprime two-block problem: ``z = (e, u)``, ``w = e_hat``."""
    ny, nu = sys.ny, sys.nu
    C1 = block([[-sys.C], [np.zeros((nu, sys.nx))]])
    D11 = np.vstack([np.eye(ny), np.zeros((nu, ny))])
    D12 = np.vstack([np.zeros((ny, nu)), np.eye(nu)])
    return StateFeedbackProblem(sys.A, as_function(L), sys.B, C1, D11, D12)


def _try_solve(coeffs_fn, gamma, grid, X0, tol, max_periods, substeps):
    try:
        coeffs = coeffs_fn(gamma)
        return solve_periodic_rde(coeffs, grid, tol, max_periods, substeps, X0)
    except RdeError as exc:
        return Infeasible(gamma, str(exc))


def synthesize_feedback_gain(sys: LtpSystem, Y: PeriodicRdeSolution, gamma: float,
                             grid: TimeGrid, tol: float = DEFAULT_TOL,
                             max_periods: int = DEFAULT_MAX_PERIODS,
                             substeps: int | None = None):
    """``F = -B' X`` at level ``gamma``, or an :class:`Infeasible` value."""
    if Y.values.shape[1] != sys.nx:
        raise ValueError("filter solution does not match the plant state dimension")
    sol = _try_solve(lambda g: controller_rde_coefficients(sys, Y, g), gamma, grid, None,
                     tol, max_periods, substeps)
    if isinstance(sol, Infeasible):
        return sol
    B = sys.B.sample(grid.points)
    return _gridded(-np.swapaxes(B, 1, 2) @ sol.values, grid, sys.is_lti)


def _bisect(probe, cfg: BisectionConfig, floor: float):
    probes = []

    def run(gamma, X0):
        sol = probe(gamma, X0)
        probes.append((gamma, not isinstance(sol, Infeasible)))
        return sol

    top = run(cfg.gamma_upper, None)
    if isinstance(top, Infeasible):
        raise UpperBoundInfeasible(f"gamma_upper = {cfg.gamma_upper} infeasible: {top.reason}")
    warm = top.values[0]
    lo, hi, best = cfg.gamma_lower, cfg.gamma_upper, top
    bottom = run(lo, warm)
    if not isinstance(bottom, Infeasible):
        if lo - floor <= cfg.rel_tol * lo:
            return lo, bottom, top, probes
        raise NoBracket(f"gamma_lower = {lo} is already feasible")
    for _ in range(cfg.max_iter):
        if (hi - lo) / hi <= cfg.rel_tol:
            break
        mid = math.sqrt(lo * hi)
        sol = run(mid, best.values[0])
        if isinstance(sol, Infeasible):
            lo = mid
        else:
            hi, best = mid, sol
    return hi, best, top, probes


def bisect_state_feedback(problem: StateFeedbackProblem, cfg: BisectionConfig, grid: TimeGrid,
                          tol: float = DEFAULT_TOL, max_periods: int = DEFAULT_MAX_PERIODS,
                          substeps: int | None = None) -> BisectionResult:
    """Smallest feasible level within ``rel_tol`` and the gain at ``suboptimality * gamma_opt``.

    Probes are sequential; each feasible solve warm-starts the next probe
    (the game solution decreases with the level, so the warm start lies
    below the target solution).
    """
    if substeps is None:
        substeps = auto_substeps(problem.coefficients(cfg.gamma_upper), grid)

    def probe(gamma, X0):
        if gamma <= problem.floor:
            return Infeasible(gamma, "level does not exceed the feedthrough bound")
        return _try_solve(problem.coefficients, gamma, grid, X0, tol, max_periods, substeps)

    gamma_opt, _, top, probes = _bisect(probe, cfg, problem.floor)
    gamma_ach = cfg.suboptimality * gamma_opt
    X = probe(gamma_ach, top.values[0])
    if isinstance(X, Infeasible):
        raise RdeError(f"re-solve at gamma = {gamma_ach} failed: {X.reason}")
    F = _gridded(problem.gain_values(X, gamma_ach), grid, problem.is_lti)
    return BisectionResult(gamma_opt, gamma_ach, F, X, probes)


def bisect_gamma(sys: LtpSystem, Y: PeriodicRdeSolution, cfg: BisectionConfig, grid: TimeGrid,
                 tol: float = DEFAULT_TOL, max_periods: int = DEFAULT_MAX_PERIODS,
                 substeps: int | None = None) -> BisectionResult:
    """Bisection for the unweighted problem; unpacks as ``(gamma_opt, F)``."""
    if substeps is None:
        substeps = auto_substeps(controller_rde_coefficients(sys, Y, cfg.gamma_upper), grid)

    def coeffs(gamma):
        return controller_rde_coefficients(sys, Y, gamma)

    def probe(gamma, X0):
        if gamma <= 1.0:
            return Infeasible(gamma, "level does not exceed one")
        return _try_solve(coeffs, gamma, grid, X0, tol, max_periods, substeps)

    gamma_opt, _, top, probes = _bisect(probe, cfg, 1.0)
    gamma_ach = cfg.suboptimality * gamma_opt
    X = probe(gamma_ach, top.values[0])
    if isinstance(X, Infeasible):
        raise RdeError(f"re-solve at gamma = {gamma_ach} failed: {X.reason}")
    B = sys.B.sample(grid.points)
    F = _gridded(-np.swapaxes(B, 1, 2) @ X.values, grid, sys.is_lti)
    return BisectionResult(gamma_opt, gamma_ach, F, X, probes)


def assemble_structured_controller(sys: LtpSystem, L, F, gamma_achieved: float = math.nan,
                                   gamma_optimal: float = math.nan) -> StructuredController:
    """Realization ``(A + L C + B F, L, F, 0)`` from error ``e`` to control ``u``."""
    L, F = as_function(L), as_function(F)
    if L.shape != (sys.nx, sys.ny):
        raise ValueError(f"L must be {(sys.nx, sys.ny)}, got {L.shape}")
    if F.shape != (sys.nu, sys.nx):
        raise ValueError(f"F must be {(sys.nu, sys.nx)}, got {F.shape}")
    AK = sys.A + L @ sys.C + sys.B @ F
    real = LtpSystem(AK, L, F, np.zeros((sys.nu, sys.ny)))
    return StructuredController(L, F, real, gamma_achieved, gamma_optimal)


def transformed_openloop_realization(sys: LtpSystem, L) -> LtpSystem:
    """Two-block open loop in coordinates ``(eps, mu, xi)``; inputs ``(e_hat, u)``, outputs ``(e, u, xi)``.

    ``eps = xi - (x + mu)`` with ``mu`` the state of ``M^-1``.
    """
    L = as_function(L)
    n, ny, nu = sys.nx, sys.ny, sys.nu
    A, B, C = sys.A, sys.B, sys.C
    LC = L @ C
    Z = np.zeros
    Ab = block([[A + LC, Z((n, n)), Z((n, n))],
                [Z((n, n)), A, Z((n, n))],
                [LC, Z((n, n)), A]])
    Bb = block([[Z((n, ny)), Z((n, nu))], [L, Z((n, nu))], [L, B]])
    Cb = block([[C, Z((ny, n)), -C], [Z((nu, n)), Z((nu, n)), Z((nu, n))],
                [Z((n, n)), Z((n, n)), np.eye(n)]])
    Db = np.block([[np.eye(ny), Z((ny, nu))], [Z((nu, ny)), np.eye(nu)], [Z((n, ny)), Z((n, nu))]])
    return LtpSystem(Ab, Bb, Cb, Db)
