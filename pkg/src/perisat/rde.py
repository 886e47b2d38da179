"""Periodic Riccati differential equations: fixed-step RK4 plus period iteration.

Two sign conventions are handled through :class:`RdeCoefficients`:

* forward (filter type):   ``dX/dt = D X + X D' - X Q X + R``
* backward (control type): ``-dX/dt = D' X + X D - X Q X + R``

with ``D`` the drift, ``Q`` the quadratic weight and ``R`` the constant term.
Backward problems are integrated in reversed time ``s = T - t``, which turns
both into ``dP/ds = G P + P G' - P Q P + R`` for the kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .errors import Blowup, NoConvergence
from .ltp import GriddedMatrixFunction, LtpSystem, PeriodicMatrixFunction, TimeGrid, as_function

__all__ = [
    "RdeCoefficients",
    "PeriodicRdeSolution",
    "rk4_matrix_step",
    "auto_substeps",
    "solve_periodic_rde",
    "solve_periodic_filter_rde",
    "controller_rde_coefficients",
    "solve_periodic_controller_rde",
]

DEFAULT_TOL = 1e-9
DEFAULT_MAX_PERIODS = 200
_TINY = np.finfo(float).tiny


def _sym(X):
    return 0.5 * (X + np.swapaxes(X, -1, -2))


@dataclass(frozen=True, eq=False)
class RdeCoefficients:
    drift: PeriodicMatrixFunction
    quadratic: PeriodicMatrixFunction
    constant: PeriodicMatrixFunction
    direction: str = "forward"

    def __post_init__(self):
        for name in ("drift", "quadratic", "constant"):
            object.__setattr__(self, name, as_function(getattr(self, name)))
        n = self.drift.rows
        for f in (self.drift, self.quadratic, self.constant):
            if f.shape != (n, n):
                raise ValueError(f"coefficient shape {f.shape} != {(n, n)}")
        if self.direction not in ("forward", "backward"):
            raise ValueError("direction must be 'forward' or 'backward'")

    @property
    def n(self) -> int:
        return self.drift.rows

    def kernel_samples(self, t):
        """``(G, Q, R)`` sampled at physical times ``t`` in kernel orientation."""
        D = self.drift.sample(t)
        G = D if self.direction == "forward" else np.swapaxes(D, 1, 2)
        Q = _sym(self.quadratic.sample(t))
        R = _sym(self.constant.sample(t))
        return (np.ascontiguousarray(G), np.ascontiguousarray(Q), np.ascontiguousarray(R))

    def rhs(self, t: float, X: np.ndarray) -> np.ndarray:
        """Time derivative ``dX/dt`` at physical time ``t``."""
        D, Q, R = self.drift(t), _sym(self.quadratic(t)), _sym(self.constant(t))
        if self.direction == "forward":
            return D @ X + X @ D.T - X @ Q @ X + R
        return -(D.T @ X + X @ D - X @ Q @ X + R)


@dataclass(frozen=True, eq=False)
class PeriodicRdeSolution:
    grid: TimeGrid
    values: np.ndarray
    convergence_residual: float
    periods_iterated: int
    substeps: int = 1

    @property
    def function(self) -> GriddedMatrixFunction:
        return GriddedMatrixFunction(self.grid.period, self.values)

    def __call__(self, t: float) -> np.ndarray:
        return self.function(t)


def rk4_matrix_step(rhs: Callable[[float, np.ndarray], np.ndarray], X, t: float, h: float):
    """One classical RK4 step of ``dX/dt = rhs(t, X)``; negative ``h`` steps backward."""
    X = np.asarray(X, dtype=float)
    k1 = rhs(t, X)
    k2 = rhs(t + 0.5 * h, X + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, X + 0.5 * h * k2)
    k4 = rhs(t + h, X + h * k3)
    out = _sym(X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    if not np.all(np.isfinite(out)):
        raise Blowup(t + h)
    return out


def auto_substeps(coeffs: RdeCoefficients, grid: TimeGrid, n_probe: int = 64,
                  stiffness: float = 0.5) -> int:
    """Smallest RK4 substep count keeping ``h * rho <= stiffness``.

    ``rho`` is the largest modulus over probe times of the eigenvalues of the
    linear (Hamiltonian) system associated with the Riccati equation.
    """
    t = np.linspace(0.0, grid.period, n_probe, endpoint=False)
    G, Q, R = coeffs.kernel_samples(t)
    H = np.block([[-np.swapaxes(G, 1, 2), Q], [R, G]])
    rho = float(np.max(np.abs(np.linalg.eigvals(H))))
    return max(1, math.ceil(grid.step * rho / stiffness))


def _psd_violation(X) -> bool:
    w = np.linalg.eigvalsh(X)
    scale = max(np.max(np.abs(w)), _TINY)
    return w[0] < -1e-8 * scale


def solve_periodic_rde(coeffs: RdeCoefficients, grid: TimeGrid, tol: float = DEFAULT_TOL,
                       max_periods: int = DEFAULT_MAX_PERIODS, substeps: int | None = None,
                       X0: np.ndarray | None = None) -> PeriodicRdeSolution:
    """Periodic solution by repeated integration over one period.

    Starts from ``X0`` (zero by default) at ``t = 0`` (forward) or ``t = T``
    (backward) and iterates until the relative change of the boundary value
    over one period drops below ``tol``.  The returned grid values come from
    one more period integrated from the converged boundary value.
    """
    if substeps is None:
        substeps = auto_substeps(coeffs, grid)
    n, N, T = coeffs.n, grid.n_points, grid.period
    m = N * substeps
    h = T / m
    s = np.arange(2 * m + 1) * (0.5 * h)
    t = s if coeffs.direction == "forward" else T - s
    G, Q, R = coeffs.kernel_samples(t)

    def to_time(step):
        return float(t[min(2 * step, 2 * m)])

    X = np.zeros((n, n)) if X0 is None else _sym(np.asarray(X0, dtype=float))
    out = np.empty((N + 1, n, n))

    def one_period(start):
        status = kernels.riccati_period(G, Q, R, start, h, substeps, out)
        if status >= 0:
            raise Blowup(to_time(status + 1))
        end = out[N].copy()
        if _psd_violation(end):
            raise Blowup(to_time(m), "solution lost positive semidefiniteness")
        return end

    residual = math.inf
    periods = 0
    while residual >= tol:
        if periods >= max_periods:
            raise NoConvergence(residual, periods)
        X_next = one_period(X)
        periods += 1
        residual = np.linalg.norm(X_next - X) / max(np.linalg.norm(X_next), _TINY)
        X = X_next
    X_end = one_period(X)
    residual = float(np.linalg.norm(X_end - X) / max(np.linalg.norm(X_end), _TINY))
    traj = out.copy()
    if coeffs.direction == "forward":
        values = traj[:N]
    else:
        # traj[k] sits at t = T - k * step
        values = traj[N - np.arange(N)]
    return PeriodicRdeSolution(grid, values, residual, periods + 1, substeps)


def solve_periodic_filter_rde(sys: LtpSystem, grid: TimeGrid, tol: float = DEFAULT_TOL,
                              max_periods: int = DEFAULT_MAX_PERIODS,
                              substeps: int | None = None) -> PeriodicRdeSolution:
    """Stabilizing periodic ``Y`` of ``dY/dt = A Y + Y A' - Y C'C Y + B B'``."""
    coeffs = RdeCoefficients(sys.A, sys.C.T @ sys.C, sys.B @ sys.B.T, "forward")
    return solve_periodic_rde(coeffs, grid, tol, max_periods, substeps)


def controller_rde_coefficients(sys: LtpSystem, Y, gamma: float) -> RdeCoefficients:
    """Coefficients of the two-block state-feedback RDE at level ``gamma``.

    ``-dX/dt = At' X + X At - X Rt X + g2 C'C`` with ``c = 1 / (1 - gamma^2)``,
    ``At = A - c Y C'C``, ``Rt = c Y C'C Y + B B'`` and ``g2 = gamma^2 / (gamma^2 - 1)``.
    """
    if not gamma > 1.0:
        raise ValueError("gamma must exceed 1")
    Yf = Y.function if isinstance(Y, PeriodicRdeSolution) else as_function(Y)
    c = 1.0 / (1.0 - gamma**2)
    CtC = sys.C.T @ sys.C
    drift = sys.A - c * (Yf @ CtC)
    quad = c * (Yf @ CtC @ Yf) + sys.B @ sys.B.T
    const = (gamma**2 / (gamma**2 - 1.0)) * CtC
    return RdeCoefficients(drift, quad, const, "backward")


def solve_periodic_controller_rde(sys: LtpSystem, Y, gamma: float, grid: TimeGrid,
                                  tol: float = DEFAULT_TOL,
                                  max_periods: int = DEFAULT_MAX_PERIODS,
                                  substeps: int | None = None,
                                  X0: np.ndarray | None = None) -> PeriodicRdeSolution:
    """Stabilizing periodic ``X`` of the controller RDE; feedback gain is ``-B' X``."""
    coeffs = controller_rde_coefficients(sys, Y, gamma)
    return solve_periodic_rde(coeffs, grid, tol, max_periods, substeps, X0)
