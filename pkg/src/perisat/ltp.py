"""Periodic matrix functions, LTP state-space systems and interconnections."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "PeriodicMatrixFunction",
    "TrigMatrixFunction",
    "GriddedMatrixFunction",
    "ComposedMatrixFunction",
    "as_function",
    "constant",
    "block",
    "TimeGrid",
    "LtpSystem",
    "evaluate_system",
    "submatrix",
    "series",
    "feedback",
    "lft",
]

_PERIOD_RTOL = 1e-12


def _common_period(fns: Sequence["PeriodicMatrixFunction"]) -> float | None:
    """Shared period of the non-constant members; constants adopt it."""
    periodic = [f.period for f in fns if not f.is_constant]
    if periodic:
        T = periodic[0]
        for other in periodic[1:]:
            if abs(other - T) > _PERIOD_RTOL * max(T, other):
                raise ValueError(f"period mismatch: {T} vs {other}")
        return T
    for f in fns:
        if f.period is not None:
            return f.period
    return None


class PeriodicMatrixFunction:
    """Matrix-valued function of time with fundamental period ``period``.

    Subclasses implement :meth:`_sample` on times already wrapped into
    ``[0, period)``.  Constant functions may carry ``period=None``.
    """

    shape: tuple[int, int]
    period: float | None
    is_constant: bool = False
    # let numpy defer to __rmatmul__ and friends
    __array_ufunc__ = None

    def _sample(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def wrap(self, t):
        if self.period is None:
            return np.asarray(t, dtype=float)
        return np.mod(np.asarray(t, dtype=float), self.period)

    def sample(self, t) -> np.ndarray:
        """Evaluate at each time in ``t``; returns shape ``(len(t), rows, cols)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if not np.all(np.isfinite(t)):
            raise ValueError("non-finite evaluation time")
        return self._sample(self.wrap(t))

    def __call__(self, t: float) -> np.ndarray:
        return self.sample([t])[0]

    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]

    # -- algebra -----------------------------------------------------------
    @property
    def T(self) -> "PeriodicMatrixFunction":
        return ComposedMatrixFunction(
            (self.cols, self.rows), [self], lambda a: np.swapaxes(a, 1, 2)
        )

    def __matmul__(self, other):
        other = as_function(other)
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        return ComposedMatrixFunction(
            (self.rows, other.cols), [self, other], np.matmul
        )

    def __rmatmul__(self, other):
        return as_function(other) @ self

    def __add__(self, other):
        other = as_function(other)
        if self.shape != other.shape:
            raise ValueError(f"cannot add {self.shape} and {other.shape}")
        return ComposedMatrixFunction(self.shape, [self, other], np.add)

    __radd__ = __add__

    def __sub__(self, other):
        other = as_function(other)
        if self.shape != other.shape:
            raise ValueError(f"cannot subtract {other.shape} from {self.shape}")
        return ComposedMatrixFunction(self.shape, [self, other], np.subtract)

    def __rsub__(self, other):
        return as_function(other) - self

    def __neg__(self):
        return ComposedMatrixFunction(self.shape, [self], np.negative)

    def __mul__(self, scalar):
        scalar = float(scalar)
        return ComposedMatrixFunction(self.shape, [self], lambda a: scalar * a)

    __rmul__ = __mul__


class TrigMatrixFunction(PeriodicMatrixFunction):
    """Finite trigonometric polynomial ``C0 + sum_k Ck cos(k w t) + Sk sin(k w t)``.

    ``w = 2 pi / period``.  With no harmonics this is a constant matrix.
    """

    def __init__(self, period, const, cos=None, sin=None):
        const = np.atleast_2d(np.asarray(const, dtype=float))
        self.shape = const.shape
        self.const = const
        self.cos = {int(k): np.asarray(v, dtype=float) for k, v in (cos or {}).items()}
        self.sin = {int(k): np.asarray(v, dtype=float) for k, v in (sin or {}).items()}
        for k, v in list(self.cos.items()) + list(self.sin.items()):
            if v.shape != self.shape:
                raise ValueError(f"harmonic {k} has shape {v.shape}, expected {self.shape}")
            if k <= 0:
                raise ValueError("harmonic indices must be positive")
        self.is_constant = not (self.cos or self.sin)
        if period is not None and not period > 0:
            raise ValueError("period must be positive")
        if period is None and not self.is_constant:
            raise ValueError("a time-varying function needs a period")
        self.period = None if period is None else float(period)

    def _sample(self, t):
        out = np.broadcast_to(self.const, (t.size,) + self.shape).copy()
        if self.is_constant:
            return out
        w = 2.0 * np.pi / self.period
        for k, v in self.cos.items():
            out += np.cos(k * w * t)[:, None, None] * v
        for k, v in self.sin.items():
            out += np.sin(k * w * t)[:, None, None] * v
        return out


class GriddedMatrixFunction(PeriodicMatrixFunction):
    """Uniform samples over one period (endpoint excluded), periodic cubic interpolation."""

    def __init__(self, period, samples):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 3:
            raise ValueError("samples must have shape (N, rows, cols)")
        if samples.shape[0] < 2:
            raise ValueError("need at least two samples per period")
        if not period > 0:
            raise ValueError("period must be positive")
        self.period = float(period)
        self.samples = samples
        self.shape = samples.shape[1:]
        n = samples.shape[0]
        self.times = np.arange(n) * (self.period / n)
        knots = np.append(self.times, self.period)
        values = np.concatenate([samples, samples[:1]], axis=0)
        if n == 2:
            # periodic cubic spline needs three distinct knots
            knots = np.array([0.0, 0.5 * self.period, self.period])
            values = np.concatenate([samples[:1], samples[1:2], samples[:1]])
        self._spline = CubicSpline(knots, values, axis=0, bc_type="periodic")

    def _sample(self, t):
        return self._spline(t)


class ComposedMatrixFunction(PeriodicMatrixFunction):
    """Pointwise combination ``fn(*parts_sampled)`` of other matrix functions."""

    def __init__(self, shape, parts, fn: Callable[..., np.ndarray]):
        self.shape = tuple(shape)
        self.parts = list(parts)
        self.fn = fn
        self.period = _common_period(self.parts)
        self.is_constant = all(p.is_constant for p in self.parts)

    def _sample(self, t):
        # parts wrap their own argument; t is already in [0, period)
        return self.fn(*[p.sample(t) for p in self.parts])


def constant(M, period: float | None = None) -> TrigMatrixFunction:
    return TrigMatrixFunction(period, M)


def as_function(M) -> PeriodicMatrixFunction:
    if isinstance(M, PeriodicMatrixFunction):
        return M
    return constant(M)


def block(rows: Sequence[Sequence]) -> PeriodicMatrixFunction:
    """Block matrix from nested lists of matrix functions, arrays, or ``None`` (zeros).

    Every block row needs at least one entry with known shape per row, and
    every block column at least one per column.
    """
    rows = [[None if b is None else as_function(b) for b in r] for r in rows]
    ncol = len(rows[0])
    if any(len(r) != ncol for r in rows):
        raise ValueError("ragged block structure")
    heights = []
    for r in rows:
        hs = {b.rows for b in r if b is not None}
        if len(hs) != 1:
            raise ValueError(f"inconsistent block-row heights {hs}")
        heights.append(hs.pop())
    widths = []
    for j in range(ncol):
        ws = {r[j].cols for r in rows if r[j] is not None}
        if len(ws) != 1:
            raise ValueError(f"inconsistent block-column widths {ws}")
        widths.append(ws.pop())
    parts, index = [], []
    for i, r in enumerate(rows):
        for j, b in enumerate(r):
            if b is not None:
                index.append((sum(heights[:i]), sum(widths[:j])))
                parts.append(b)
    shape = (sum(heights), sum(widths))

    def assemble(*vals):
        out = np.zeros((vals[0].shape[0],) + shape)
        for (i0, j0), v in zip(index, vals):
            out[:, i0:i0 + v.shape[1], j0:j0 + v.shape[2]] = v
        return out

    if not parts:
        return constant(np.zeros(shape))
    return ComposedMatrixFunction(shape, parts, assemble)


def submatrix(f, rows: slice, cols: slice) -> PeriodicMatrixFunction:
    """Slice ``f[rows, cols]`` as a matrix function."""
    f = as_function(f)
    r = range(f.rows)[rows]
    c = range(f.cols)[cols]
    return ComposedMatrixFunction((len(r), len(c)), [f], lambda v: v[:, rows, cols])


@dataclass(frozen=True)
class TimeGrid:
    """Equispaced grid ``t_k = k * step`` over one period, endpoint excluded."""

    period: float
    n_points: int = 1000

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")
        if self.n_points < 2:
            raise ValueError("grid needs at least two points")

    @property
    def step(self) -> float:
        return self.period / self.n_points

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n_points) * self.step


@dataclass(frozen=True, eq=False)
class LtpSystem:
    """Periodic state-space realization ``(A(t), B(t), C(t), D)``.

    Plants are strictly proper (``D is None``); a constant feedthrough is
    permitted for controller realizations, coprime factors and closed loops.
    """

    A: PeriodicMatrixFunction
    B: PeriodicMatrixFunction
    C: PeriodicMatrixFunction
    D: np.ndarray | None = None

    def __post_init__(self):
        for name in ("A", "B", "C"):
            object.__setattr__(self, name, as_function(getattr(self, name)))
        A, B, C = self.A, self.B, self.C
        if A.rows != A.cols:
            raise ValueError(f"A must be square, got {A.shape}")
        if B.rows != A.rows or C.cols != A.rows:
            raise ValueError(
                f"inconsistent dimensions A{A.shape} B{B.shape} C{C.shape}"
            )
        if self.D is not None:
            D = np.atleast_2d(np.asarray(self.D, dtype=float))
            if D.shape != (C.rows, B.cols):
                raise ValueError(f"D must be {(C.rows, B.cols)}, got {D.shape}")
            object.__setattr__(self, "D", D)
        _common_period([A, B, C])

    @classmethod
    def lti(cls, A, B, C, D=None) -> "LtpSystem":
        return cls(constant(np.atleast_2d(A)), constant(np.atleast_2d(B)),
                   constant(np.atleast_2d(C)), D)

    @property
    def nx(self) -> int:
        return self.A.rows

    @property
    def nu(self) -> int:
        return self.B.cols

    @property
    def ny(self) -> int:
        return self.C.rows

    @property
    def period(self) -> float | None:
        return _common_period([self.A, self.B, self.C])

    @property
    def is_lti(self) -> bool:
        return self.A.is_constant and self.B.is_constant and self.C.is_constant

    @property
    def Dmat(self) -> np.ndarray:
        return np.zeros((self.ny, self.nu)) if self.D is None else self.D

    def evaluate(self, t: float):
        return self.A(t), self.B(t), self.C(t)


def evaluate_system(sys: LtpSystem, t: float):
    """Coefficient matrices ``(A, B, C)`` at ``t`` wrapped into the period."""
    return sys.evaluate(t)


def _check_periods(*systems: LtpSystem):
    periods = [s.period for s in systems if not s.is_lti]
    for p in periods[1:]:
        if abs(p - periods[0]) > _PERIOD_RTOL * max(p, periods[0]):
            raise ValueError(f"period mismatch: {periods[0]} vs {p}")


def series(sys1: LtpSystem, sys2: LtpSystem) -> LtpSystem:
    """Cascade ``u -> sys1 -> sys2 -> y``; state ordering ``(x1, x2)``."""
    if sys1.ny != sys2.nu:
        raise ValueError(f"output dim {sys1.ny} of sys1 != input dim {sys2.nu} of sys2")
    _check_periods(sys1, sys2)
    D1, D2 = sys1.Dmat, sys2.Dmat
    A = block([[sys1.A, None], [sys2.B @ sys1.C, sys2.A]])
    B = block([[sys1.B], [sys2.B @ D1]])
    C = block([[D2 @ sys1.C, sys2.C]])
    D = None if (sys1.D is None and sys2.D is None) else D2 @ D1
    if D is not None and not np.any(D):
        D = None
    return LtpSystem(A, B, C, D)


def feedback(plant: LtpSystem, controller: LtpSystem) -> LtpSystem:
    """Negative-feedback loop with inputs ``(r, d)`` and outputs ``(e, u)``.

    ``e = r - y``, ``y = P (u + d)``, ``u = K e``; the resulting map is
    ``[[S, -S P], [K S, -K S P]]``.  State ordering ``(x, xi)``.
    """
    if plant.D is not None and np.any(plant.D):
        raise ValueError("plant must be strictly proper")
    if controller.nu != plant.ny or controller.ny != plant.nu:
        raise ValueError(
            f"controller {controller.ny}x{controller.nu} incompatible with "
            f"plant {plant.ny}x{plant.nu}"
        )
    _check_periods(plant, controller)
    A, B, C = plant.A, plant.B, plant.C
    AK, BK, CK, DK = controller.A, controller.B, controller.C, controller.Dmat
    ny, nu = plant.ny, plant.nu
    Acl = block([[A - B @ (DK @ C), B @ CK], [-(BK @ C), AK]])
    Bcl = block([[B @ DK, B], [BK, np.zeros((controller.nx, nu))]])
    Ccl = block([[-C, np.zeros((ny, controller.nx))], [-(DK @ C), CK]])
    Dcl = np.block([[np.eye(ny), np.zeros((ny, nu))], [DK, np.zeros((nu, nu))]])
    return LtpSystem(Acl, Bcl, Ccl, Dcl)


def lft(G: LtpSystem, K: LtpSystem, n_meas: int, n_ctrl: int) -> LtpSystem:
    """Lower LFT closing the last ``n_meas`` outputs and ``n_ctrl`` inputs of ``G`` through ``K``.

    The measurement-to-control feedthrough of ``G`` must vanish.  State
    ordering ``(x_G, x_K)``.
    """
    if K.nu != n_meas or K.ny != n_ctrl:
        raise ValueError(f"controller must be {n_ctrl}x{n_meas}, got {K.ny}x{K.nu}")
    _check_periods(G, K)
    nz, nw = G.ny - n_meas, G.nu - n_ctrl
    D = G.Dmat
    if np.any(D[nz:, nw:]):
        raise ValueError("measurement-to-control feedthrough must be zero")
    w, u = slice(0, nw), slice(nw, G.nu)
    z, y = slice(0, nz), slice(nz, G.ny)
    B1, B2 = submatrix(G.B, slice(None), w), submatrix(G.B, slice(None), u)
    C1, C2 = submatrix(G.C, z, slice(None)), submatrix(G.C, y, slice(None))
    D11, D12, D21 = D[z, w], D[z, u], D[y, w]
    DK = K.Dmat
    A = block([[G.A + B2 @ (DK @ C2), B2 @ K.C], [K.B @ C2, K.A]])
    B = block([[B1 + B2 @ (DK @ D21)], [K.B @ D21]])
    C = block([[C1 + D12 @ (DK @ C2), D12 @ K.C]])
    return LtpSystem(A, B, C, D11 + D12 @ DK @ D21)
