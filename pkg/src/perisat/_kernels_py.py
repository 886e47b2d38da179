"""Pure-numpy versions of the compiled RK4 loops (same signatures and semantics)."""

import numpy as np

BLOWUP = 1e150


def _riccati_rhs(G, Q, R, P):
    return G @ P + P @ G.T - P @ Q @ P + R


@np.errstate(over="ignore", invalid="ignore")
def riccati_period(G, Q, R, P0, h, stride, out):
    m = (G.shape[0] - 1) // 2
    P = np.array(P0, dtype=float, copy=True)
    out[0] = P
    half, sixth = 0.5 * h, h / 6.0
    for k in range(m):
        j = 2 * k
        k1 = _riccati_rhs(G[j], Q[j], R[j], P)
        k2 = _riccati_rhs(G[j + 1], Q[j + 1], R[j + 1], P + half * k1)
        k3 = _riccati_rhs(G[j + 1], Q[j + 1], R[j + 1], P + half * k2)
        k4 = _riccati_rhs(G[j + 2], Q[j + 2], R[j + 2], P + h * k3)
        P = P + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        P = 0.5 * (P + P.T)
        if not np.all(np.isfinite(P)) or np.max(np.abs(P)) > BLOWUP:
            return k
        if (k + 1) % stride == 0:
            out[(k + 1) // stride] = P
    return -1


@np.errstate(over="ignore", invalid="ignore")
def linear_rk4(A, f, x0, h, n_steps, out):
    period = A.shape[0]
    x = np.array(x0, dtype=float, copy=True)
    out[0] = x
    half, sixth = 0.5 * h, h / 6.0
    for k in range(n_steps):
        j0, j1, j2 = (2 * k) % period, (2 * k + 1) % period, (2 * k + 2) % period
        k1 = A[j0] @ x + f[j0]
        k2 = A[j1] @ (x + half * k1) + f[j1]
        k3 = A[j1] @ (x + half * k2) + f[j1]
        k4 = A[j2] @ (x + h * k3) + f[j2]
        x = x + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = x
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > BLOWUP:
            return k
    return -1
