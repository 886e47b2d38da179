import numpy as np


def random_stable(rng, n, nu, ny, margin=0.2):
    """Random ``(A, B, C)`` with spectral abscissa at most ``-margin``."""
    A = rng.standard_normal((n, n))
    A -= (np.max(np.linalg.eigvals(A).real) + margin + rng.uniform(0, 1)) * np.eye(n)
    return A, rng.standard_normal((n, nu)), rng.standard_normal((ny, n))
