"""Independent oracles shared by the test modules.

These deliberately avoid the code paths they check: saturation factors come
from bisection on the membership predicate, set volumes from Monte Carlo,
and matrix equations from truncated series.
"""

import numpy as np

from flatsat.geometry import vc_membership_many


def bisect_lambda(vs: np.ndarray, params, iters: int = 60) -> np.ndarray:
    """Largest t in [0, 1] with t*v admissible, by pure bisection per row."""
    vs = np.atleast_2d(vs)
    lo = np.zeros(len(vs))
    hi = np.ones(len(vs))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = vc_membership_many(mid[:, None] * vs, params)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


def mc_volume_indicator(points: np.ndarray, contains) -> float:
    """Fraction of sample points accepted by a membership callable."""
    return float(np.mean([1.0 if contains(p) else 0.0 for p in points]))


def lyapunov_series(a_cl: np.ndarray, m: np.ndarray, terms: int = 200) -> np.ndarray:
    """sum_j (A')^j M A^j, the series solution of A' P A = P - M."""
    p = np.zeros_like(m)
    term = m.copy()
    at = a_cl.T
    a = a_cl
    power_t = np.eye(a.shape[0])
    power = np.eye(a.shape[0])
    for _ in range(terms):
        p = p + power_t @ m @ power
        power_t = power_t @ at
        power = power @ a
    return p
