"""Abacus attitude model, cyclic disturbances, closed-loop simulation and inertia sweeps."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import SimulationBlowup
from .ltp import LtpSystem, TrigMatrixFunction, feedback

__all__ = [
    "AbacusParams",
    "DisturbanceModel",
    "build_abacus",
    "SimulationResult",
    "simulate_closed_loop",
    "CornerResult",
    "SweepReport",
    "uncertainty_sweep",
    "SWEEP_FACTORS",
]

SWEEP_FACTORS = (0.8, 1.0, 1.2)


@dataclass(frozen=True)
class AbacusParams:
    """Orbit rate (rad/s), inertias (kg m^2) and multiplicative inertia factors.

    The default inertias are of order 1e13; ``literal_exponent=True`` scales
    them by 1e10 to the order-1e23 values.
    """

    n: float = 7.292e-5
    J1: float = 2.8e13
    J2: float = 1.8e13
    J3: float = 4.6e13
    inertia_perturbation: tuple = (1.0, 1.0, 1.0)
    literal_exponent: bool = False

    def __post_init__(self):
        if not self.n > 0:
            raise ValueError("orbit rate must be positive")
        if min(self.J1, self.J2, self.J3) <= 0:
            raise ValueError("inertias must be positive")
        p = tuple(float(x) for x in self.inertia_perturbation)
        if len(p) != 3 or min(p) <= 0:
            raise ValueError("inertia perturbation needs three positive factors")
        object.__setattr__(self, "inertia_perturbation", p)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.n

    @property
    def inertias(self) -> np.ndarray:
        """Effective (scaled and perturbed) inertias."""
        scale = 1e10 if self.literal_exponent else 1.0
        return scale * np.array([self.J1, self.J2, self.J3]) * np.array(self.inertia_perturbation)

    def perturbed(self, factors) -> "AbacusParams":
        return replace(self, inertia_perturbation=tuple(factors))

    def nominal(self) -> "AbacusParams":
        return replace(self, inertia_perturbation=(1.0, 1.0, 1.0))


def build_abacus(params: AbacusParams) -> LtpSystem:
    """Six-state model; state ``(th1, dth1, th2, dth2, th3, dth3)``, outputs the three angles.

    The squared trig terms are expanded into harmonics of ``2 n t``:
    ``cos^2 = (1 + cos 2nt) / 2``, ``sin^2 = (1 - cos 2nt) / 2``.
    """
    n = params.n
    J1, J2, J3 = params.inertias
    k1 = 3 * n**2 * (J2 - J3) / J1
    k2 = 3 * n**2 * (J1 - J3) / J2
    k3 = 3 * n**2 * (J2 - J1) / J3
    A0 = np.zeros((6, 6))
    A0[0, 1] = A0[2, 3] = A0[4, 5] = 1.0
    A0[1, 0] = -k1 / 2
    A0[5, 4] = -k3 / 2
    Ac = np.zeros((6, 6))
    Ac[1, 0] = -k1 / 2
    Ac[3, 2] = -k2
    Ac[5, 4] = k3 / 2
    As = np.zeros((6, 6))
    As[1, 4] = -k1 / 2
    As[5, 0] = -k3 / 2
    T = params.period
    # the fundamental frequency of the trig polynomial is n; the terms sit at harmonic 2
    A = TrigMatrixFunction(T, A0, cos={2: Ac}, sin={2: As})
    B = np.zeros((6, 3))
    B[1, 0], B[3, 1], B[5, 2] = 1 / J1, 1 / J2, 1 / J3
    C = np.zeros((3, 6))
    C[0, 0] = C[1, 2] = C[2, 4] = 1.0
    return LtpSystem(A, B, C)


@dataclass(frozen=True)
class DisturbanceModel:
    """Cyclic worst-case torques (N m): solar pressure, microwave beam, gravity gradient."""

    params: AbacusParams = field(default_factory=AbacusParams)

    @property
    def period(self) -> float:
        return self.params.period

    def evaluate(self, t) -> np.ndarray:
        """Torques at times ``t``; shape ``(3,)`` for scalar ``t``, else ``(len(t), 3)``."""
        t_arr = np.asarray(t, dtype=float)
        n = self.params.n
        J1, _, J3 = self.params.inertias
        d1 = 2400.0 - 2380.0 * np.cos(n * t_arr)
        d2 = 240.0 + (3 * n**2 / 10) * (J3 - J1) * np.sin(2 * n * t_arr)
        d3 = -2380.0 * np.sin(n * t_arr)
        return np.stack(np.broadcast_arrays(d1, d2, d3), axis=-1)

    __call__ = evaluate


@dataclass
class SimulationResult:
    time: np.ndarray  # s
    theta: np.ndarray  # rad, (n_t, 3)
    rates: np.ndarray  # rad/s, (n_t, 3)
    control: np.ndarray  # N m, (n_t, 3)
    controller_states: np.ndarray
    final_orbit_max_deg: np.ndarray  # (3,)

    @property
    def theta_deg(self) -> np.ndarray:
        return np.degrees(self.theta)


def _steps_per_orbit(period: float, step: float | None, steps_per_orbit: int | None) -> int:
    if steps_per_orbit is None:
        if step is None:
            return 10000
        if not step > 0:
            raise ValueError("step must be positive")
        steps_per_orbit = max(1, round(period / step))
    if steps_per_orbit < 1:
        raise ValueError("steps_per_orbit must be positive")
    return int(steps_per_orbit)


def simulate_closed_loop(plant: LtpSystem, controller, disturbance: DisturbanceModel | None = None,
                         theta0_deg=(10.0, 10.0, 10.0), horizon_orbits: float = 5.0,
                         step: float | None = None, steps_per_orbit: int | None = None,
                         period: float | None = None) -> SimulationResult:
    """RK4 simulation of the attitude loop with ``u = K(-y)`` and ``d(t)`` at the plant input.

    The step is rounded so a whole number of steps covers one orbit (default
    ``T / 10000``).  Rates and controller states start at zero.
    """
    K = getattr(controller, "realization", controller)
    period = period or plant.period or K.period
    if period is None:
        raise ValueError("cannot infer the orbit period")
    m = _steps_per_orbit(period, step, steps_per_orbit)
    h = period / m
    n_steps = int(round(horizon_orbits * m))
    if n_steps < 1:
        raise ValueError("horizon shorter than one step")
    cl = feedback(plant, K)
    nx, nk = plant.nx, K.nx
    th = np.arange(2 * m) * (0.5 * h)
    Acl = np.ascontiguousarray(cl.A.sample(th))
    if disturbance is None:
        f = np.zeros((2 * m, nx + nk))
    else:
        Bd = cl.B.sample(th)[:, :, plant.ny:]
        d = disturbance.evaluate(th)
        f = np.ascontiguousarray(np.einsum("kij,kj->ki", Bd, d))
    x0 = np.zeros(nx + nk)
    x0[:nx] = plant.C(0.0).T @ np.radians(np.asarray(theta0_deg, dtype=float))
    out = np.empty((n_steps + 1, nx + nk))
    status = kernels.linear_rk4(Acl, f, x0, h, n_steps, out)
    if status >= 0:
        raise SimulationBlowup((status + 1) * h)
    time = np.arange(n_steps + 1) * h
    x, xk = out[:, :nx], out[:, nx:]
    theta = out[:, :nx] @ plant.C(0.0).T
    rates = x[:, 1::2] if nx == 6 else np.empty((n_steps + 1, 0))
    CK = K.C.sample(time)
    control = np.einsum("kij,kj->ki", CK, xk)
    if K.D is not None and np.any(K.D):
        control -= theta @ K.D.T
    last = time >= time[-1] - period * (1 - 1e-12)
    final = np.degrees(np.max(np.abs(theta[last]), axis=0))
    return SimulationResult(time, theta, rates, control, xk, final)


@dataclass
class CornerResult:
    factors: tuple
    stable: bool
    final_orbit_max_deg: np.ndarray | None
    failure_time: float | None = None


@dataclass
class SweepReport:
    corners: list
    time: np.ndarray
    theta_min_deg: np.ndarray  # (n_t, 3) envelope over stable corners
    theta_max_deg: np.ndarray
    nominal: SimulationResult

    @property
    def all_stable(self) -> bool:
        return all(c.stable for c in self.corners)

    @property
    def failed(self) -> list:
        return [c.factors for c in self.corners if not c.stable]

    @property
    def worst_final_orbit_deg(self) -> np.ndarray:
        vals = [c.final_orbit_max_deg for c in self.corners if c.stable]
        if not self.all_stable:
            return np.full(3, np.inf)
        return np.max(vals, axis=0)


def uncertainty_sweep(base: AbacusParams, controller, disturbance_on: bool = True,
                      theta0_deg=(10.0, 10.0, 10.0), horizon_orbits: float = 5.0,
                      step: float | None = None, steps_per_orbit: int | None = None,
                      factors=SWEEP_FACTORS, perturb_disturbance: bool = False) -> SweepReport:
    """Simulate every inertia corner in ``factors^3`` against a fixed controller.

    Only the plant dynamics see the perturbed inertias; the disturbance
    torques stay at their nominal worst case unless ``perturb_disturbance``
    also rescales the gravity-gradient term.  Corners are visited in
    lexicographic order.
    """
    corners, results = [], []
    nominal = None
    for fac in itertools.product(factors, repeat=3):
        p = base.perturbed(fac)
        dist_params = p if perturb_disturbance else base.nominal()
        dist = DisturbanceModel(dist_params) if disturbance_on else None
        try:
            res = simulate_closed_loop(build_abacus(p), controller, dist, theta0_deg,
                                       horizon_orbits, step, steps_per_orbit, p.period)
        except SimulationBlowup as exc:
            corners.append(CornerResult(fac, False, None, exc.time))
            continue
        corners.append(CornerResult(fac, True, res.final_orbit_max_deg))
        results.append(res)
        if all(f == 1.0 for f in fac):
            nominal = res
    if nominal is None:
        p = base.nominal()
        nominal = simulate_closed_loop(build_abacus(p), controller,
                                       DisturbanceModel(p) if disturbance_on else None,
                                       theta0_deg, horizon_orbits, step, steps_per_orbit, p.period)
    if results:
        stack = np.stack([r.theta_deg for r in results])
        lo, hi = stack.min(axis=0), stack.max(axis=0)
    else:
        lo = hi = np.full_like(nominal.theta, np.nan)
    return SweepReport(corners, nominal.time, lo, hi, nominal)
