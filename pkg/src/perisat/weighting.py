"""Mixed-sensitivity weights, scaled design plant, and weighted controller realization.

Loop convention: ``e = r - y`` with ``r = Ve w1`` and plant input ``u + Vd w2``;
performance outputs ``z1 = We Ve^-1 e`` and ``z2 = Wu Vu^-1 u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .ltp import LtpSystem, PeriodicMatrixFunction, as_function, block, submatrix
from .synthesis import StateFeedbackProblem, StructuredController

__all__ = [
    "SensitivityWeight",
    "ControlWeight",
    "ScalingSet",
    "make_sensitivity_weight",
    "make_control_weight",
    "diagonal_weight",
    "identity_weight",
    "WeightedDesignPlant",
    "build_weighted_design_plant",
    "assemble_weighted_controller",
    "weighted_closed_loop",
]


@dataclass(frozen=True)
class SensitivityWeight:
    """``(s + a) / (2 s + eps a)`` with ``a = omega_bw sqrt(3 / (1 - eps^2))``."""

    omega_bw: float
    epsilon: float = 1e-4

    def __post_init__(self):
        if not self.omega_bw > 0:
            raise ValueError("omega_bw must be positive")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")

    @property
    def corner(self) -> float:
        return self.omega_bw * math.sqrt(3.0 / (1.0 - self.epsilon**2))

    def __call__(self, s):
        a = self.corner
        return (s + a) / (2.0 * s + self.epsilon * a)


@dataclass(frozen=True)
class ControlWeight:
    """``(s + omega_u) / (0.01 s + omega_u)``."""

    omega_u: float

    def __post_init__(self):
        if not self.omega_u > 0:
            raise ValueError("omega_u must be positive")

    def __call__(self, s):
        return (s + self.omega_u) / (0.01 * s + self.omega_u)


def _first_order(pole: float, gain: float, d: float) -> LtpSystem:
    """Realization of ``d + gain / (s - pole)`` with balanced input/output scaling."""
    b = math.sqrt(abs(gain))
    c = math.copysign(b, gain)
    return LtpSystem.lti([[pole]], [[b]], [[c]], [[d]])


def make_sensitivity_weight(omega_bw: float, epsilon: float = 1e-4) -> LtpSystem:
    w = SensitivityWeight(omega_bw, epsilon)
    a, eps = w.corner, epsilon
    # 0.5 (s + a) / (s + eps a / 2) = 0.5 + 0.5 a (1 - eps / 2) / (s + eps a / 2)
    return _first_order(-0.5 * eps * a, 0.5 * a * (1.0 - 0.5 * eps), 0.5)


def make_control_weight(omega_u: float) -> LtpSystem:
    w = ControlWeight(omega_u)
    p = 100.0 * w.omega_u
    # 100 (s + wu) / (s + 100 wu) = 100 - 9900 wu / (s + 100 wu)
    return _first_order(-p, -9900.0 * w.omega_u, 100.0)


def identity_weight(n: int) -> LtpSystem:
    return LtpSystem.lti(np.zeros((0, 0)), np.zeros((0, n)), np.zeros((n, 0)), np.eye(n))


def diagonal_weight(channels) -> LtpSystem:
    """Block-diagonal stack of SISO LTI weights."""
    channels = list(channels)
    for w in channels:
        if not w.is_lti or w.nu != 1 or w.ny != 1:
            raise ValueError("channel weights must be SISO and time-invariant")
    A = block_diag(*[w.A(0.0) for w in channels])
    B = block_diag(*[w.B(0.0) for w in channels])
    C = block_diag(*[w.C(0.0) for w in channels])
    D = block_diag(*[w.Dmat for w in channels])
    return LtpSystem.lti(A, B, C, D)


@dataclass(frozen=True)
class ScalingSet:
    """Diagonal static scalings; ``Ve`` in radians, ``Vu`` and ``Vd`` in N m."""

    Ve: np.ndarray
    Vu: np.ndarray
    Vd: np.ndarray

    def __post_init__(self):
        for name in ("Ve", "Vu", "Vd"):
            v = np.asarray(getattr(self, name), dtype=float).ravel()
            if np.any(v <= 0) or not np.all(np.isfinite(v)):
                raise ValueError(f"{name} entries must be positive and finite")
            object.__setattr__(self, name, v)

    @classmethod
    def from_degrees(cls, Ve_deg, Vu, Vd) -> "ScalingSet":
        return cls(np.radians(np.asarray(Ve_deg, dtype=float)), Vu, Vd)

    @classmethod
    def identity(cls, ny: int, nu: int) -> "ScalingSet":
        return cls(np.ones(ny), np.ones(nu), np.ones(nu))


@dataclass(frozen=True, eq=False)
class WeightedDesignPlant:
    """Scaled plant data for the weighted synthesis.

    ``filter_system`` is the plant seen through the scalings,
    ``(A, B Vd, Ve^-1 C)``, on which the filter RDE runs.  ``augmented`` is
    the generalized plant with inputs ``(w1, w2, u)``, outputs
    ``(z1, z2, e)`` and states ``(x, x_We, x_Wu)``.
    """

    plant: LtpSystem
    We: LtpSystem
    Wu: LtpSystem
    scalings: ScalingSet
    filter_system: LtpSystem
    augmented: LtpSystem
    partition: dict

    @property
    def Cs(self) -> PeriodicMatrixFunction:
        return self.filter_system.C

    def state_feedback_problem(self, L) -> StateFeedbackProblem:
        """Full-information problem for ``F`` over ``(xi, x_We, x_Wu)`` given the filter gain."""
        P, We, Wu = self.plant, self.We, self.Wu
        L = as_function(L)
        n, nwe, nwu = P.nx, We.nx, Wu.nx
        ny, nu = P.ny, P.nu
        Vu_inv = np.diag(1.0 / self.scalings.Vu)
        Cs = self.Cs
        Z = np.zeros
        A = block([[P.A, Z((n, nwe)), Z((n, nwu))],
                   [-(We.B @ Cs), We.A, Z((nwe, nwu))],
                   [Z((nwu, n)), Z((nwu, nwe)), Wu.A]])
        B1 = block([[L], [We.B], [Z((nwu, ny))]])
        B2 = block([[P.B], [Z((nwe, nu))], [Wu.B(0.0) @ Vu_inv]])
        C1 = block([[-(We.Dmat @ Cs), We.C, Z((ny, nwu))],
                    [Z((nu, n)), Z((nu, nwe)), Wu.C]])
        D11 = np.vstack([We.Dmat, Z((nu, ny))])
        D12 = np.vstack([Z((ny, nu)), Wu.Dmat @ Vu_inv])
        return StateFeedbackProblem(A, B1, B2, C1, D11, D12)


def _check_weight(W: LtpSystem, n: int, name: str):
    if not W.is_lti:
        raise ValueError(f"{name} must be time-invariant")
    if W.nu != n or W.ny != n:
        raise ValueError(f"{name} must be {n}x{n}, got {W.ny}x{W.nu}")


def build_weighted_design_plant(plant: LtpSystem, We: LtpSystem, Wu: LtpSystem,
                                scalings: ScalingSet) -> WeightedDesignPlant:
    ny, nu, n = plant.ny, plant.nu, plant.nx
    _check_weight(We, ny, "We")
    _check_weight(Wu, nu, "Wu")
    if scalings.Ve.size != ny or scalings.Vu.size != nu or scalings.Vd.size != nu:
        raise ValueError("scaling dimensions do not match the plant")
    Ve, Vd = np.diag(scalings.Ve), np.diag(scalings.Vd)
    Ve_inv, Vu_inv = np.diag(1.0 / scalings.Ve), np.diag(1.0 / scalings.Vu)
    Cs = Ve_inv @ plant.C
    filt = LtpSystem(plant.A, plant.B @ Vd, Cs)

    nwe, nwu = We.nx, Wu.nx
    Z = np.zeros
    A = block([[plant.A, Z((n, nwe)), Z((n, nwu))],
               [-(We.B @ Cs), We.A, Z((nwe, nwu))],
               [Z((nwu, n)), Z((nwu, nwe)), Wu.A]])
    # inputs (w1, w2, u)
    B = block([[Z((n, ny)), plant.B @ Vd, plant.B],
               [We.B, Z((nwe, nu)), Z((nwe, nu))],
               [Z((nwu, ny)), Z((nwu, nu)), Wu.B(0.0) @ Vu_inv]])
    # outputs (z1, z2, e)
    C = block([[-(We.Dmat @ Cs), We.C, Z((ny, nwu))],
               [Z((nu, n)), Z((nu, nwe)), Wu.C],
               [-plant.C, Z((ny, nwe)), Z((ny, nwu))]])
    D = np.block([[We.Dmat, Z((ny, nu)), Z((ny, nu))],
                  [Z((nu, ny)), Z((nu, nu)), Wu.Dmat @ Vu_inv],
                  [Ve, Z((ny, nu)), Z((ny, nu))]])
    augmented = LtpSystem(A, B, C, D)
    partition = {
        "states": {"x": slice(0, n), "x_We": slice(n, n + nwe),
                   "x_Wu": slice(n + nwe, n + nwe + nwu)},
        "inputs": {"w1": slice(0, ny), "w2": slice(ny, ny + nu),
                   "u": slice(ny + nu, ny + 2 * nu)},
        "outputs": {"z1": slice(0, ny), "z2": slice(ny, ny + nu),
                    "e": slice(ny + nu, 2 * ny + nu)},
    }
    return WeightedDesignPlant(plant, We, Wu, scalings, filt, augmented, partition)


def assemble_weighted_controller(plant: LtpSystem, L, F, We: LtpSystem, Wu: LtpSystem,
                                 scalings: ScalingSet, gamma_achieved: float = math.nan,
                                 gamma_optimal: float = math.nan) -> StructuredController:
    """Controller from physical error ``e`` to physical torque ``u``.

    ``A_K = blkdiag(A + L Ve^-1 C, A_We, A_Wu) + [B F; 0; B_Wu Vu^-1 F]``,
    ``B_K = [L Ve^-1; B_We Ve^-1; 0]``, ``C_K = F``, ``D_K = 0``.
    """
    L, F = as_function(L), as_function(F)
    n, ny, nu = plant.nx, plant.ny, plant.nu
    nwe, nwu = We.nx, Wu.nx
    if L.shape != (n, ny):
        raise ValueError(f"L must be {(n, ny)}, got {L.shape}")
    if F.shape != (nu, n + nwe + nwu):
        raise ValueError(f"F must be {(nu, n + nwe + nwu)}, got {F.shape}")
    Ve_inv = np.diag(1.0 / scalings.Ve)
    Vu_inv = np.diag(1.0 / scalings.Vu)
    Z = np.zeros
    base = block([[plant.A + L @ Ve_inv @ plant.C, Z((n, nwe)), Z((n, nwu))],
                  [Z((nwe, n)), We.A, Z((nwe, nwu))],
                  [Z((nwu, n)), Z((nwu, nwe)), Wu.A]])
    AK = base + block([[plant.B @ F], [Z((nwe, n + nwe + nwu))], [Wu.B(0.0) @ Vu_inv @ F]])
    BK = block([[L @ Ve_inv], [We.B(0.0) @ Ve_inv], [Z((nwu, ny))]])
    real = LtpSystem(AK, BK, F, np.zeros((nu, ny)))
    return StructuredController(L, F, real, gamma_achieved, gamma_optimal)


def weighted_closed_loop(design: WeightedDesignPlant, controller: StructuredController) -> LtpSystem:
    """Closed loop ``(w1, w2) -> (z1, z2)`` without duplicated weight states.

    The controller's weight states copy the generalized plant's weight states
    exactly (same inputs, same initial value), so the loop is realized on
    ``(x, xi, x_We, x_Wu)`` with the copies eliminated.  The full lower LFT
    would carry an uncontrollable mode at the difference of the copies.
    """
    P, We, Wu, sc = design.plant, design.We, design.Wu, design.scalings
    n, nwe, nwu, ny, nu = P.nx, We.nx, Wu.nx, P.ny, P.nu
    L, F = controller.L, controller.F
    Fxi = submatrix(F, slice(None), slice(0, n))
    Fwe = submatrix(F, slice(None), slice(n, n + nwe))
    Fwu = submatrix(F, slice(None), slice(n + nwe, n + nwe + nwu))
    Cs = design.Cs
    Vd = np.diag(sc.Vd)
    Vu_inv = np.diag(1.0 / sc.Vu)
    BWu = Wu.B(0.0) @ Vu_inv
    DWu = Wu.Dmat @ Vu_inv
    Z = np.zeros
    A = block([
        [P.A, P.B @ Fxi, P.B @ Fwe, P.B @ Fwu],
        [-(L @ Cs), P.A + L @ Cs + P.B @ Fxi, P.B @ Fwe, P.B @ Fwu],
        [-(We.B @ Cs), Z((nwe, n)), We.A, Z((nwe, nwu))],
        [Z((nwu, n)), BWu @ Fxi, BWu @ Fwe, Wu.A + BWu @ Fwu],
    ])
    B = block([[Z((n, ny)), P.B @ Vd], [L, Z((n, nu))], [We.B, Z((nwe, nu))],
               [Z((nwu, ny)), Z((nwu, nu))]])
    C = block([[-(We.Dmat @ Cs), Z((ny, n)), We.C, Z((ny, nwu))],
               [Z((nu, n)), DWu @ Fxi, DWu @ Fwe, Wu.C + DWu @ Fwu]])
    D = np.block([[We.Dmat, Z((ny, nu))], [Z((nu, ny)), Z((nu, nu))]])
    return LtpSystem(A, B, C, D)
