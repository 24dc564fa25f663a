"""Terminal ingredients for a linear MPC on the discretized double integrator.

Given per-axis gains K = [diag(k1), diag(k2)] making A_cl = A_d + B_d K
Schur stable, the terminal cost matrix P solves the discrete Lyapunov
equation A_cl' P A_cl = P - M for a user choice M >= Q + lmax(R) K'K,
and the terminal region {x'Px <= alpha^2} is the largest such ellipsoid
on which the local feedback K x stays inside the admissible input
polytope.  These ingredients make the standard MPC decrease and
invariance conditions hold, which this module also verifies by sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConstraint, UnstableAcl
from .geometry import HPolytope
from .model import discretize


@dataclass(frozen=True)
class StageWeights:
    """Stage cost |v - v_e|_R^2 + |x - x_e|_Q^2 around an equilibrium."""

    q_weight: np.ndarray
    r_weight: np.ndarray
    x_e: np.ndarray | None = None
    v_e: np.ndarray | None = None

    def __post_init__(self):
        q = np.asarray(self.q_weight, dtype=float)
        r = np.asarray(self.r_weight, dtype=float)
        if np.linalg.eigvalsh(q).min() <= 0:
            raise ValueError("Q weight must be positive definite")
        if np.linalg.eigvalsh(r).min() < 0:
            raise ValueError("R weight must be positive semidefinite")
        object.__setattr__(self, "q_weight", q)
        object.__setattr__(self, "r_weight", r)
        object.__setattr__(self, "x_e", np.zeros(6) if self.x_e is None else np.asarray(self.x_e, dtype=float))
        object.__setattr__(self, "v_e", np.zeros(3) if self.v_e is None else np.asarray(self.v_e, dtype=float))


@dataclass(frozen=True)
class TerminalIngredients:
    """Local gain, Lyapunov pair (M, P) and terminal level alpha_t."""

    gains: np.ndarray  # 3x6, [diag(k1) diag(k2)]
    m_matrix: np.ndarray
    p_terminal: np.ndarray
    alpha_t: float


@dataclass(frozen=True)
class TerminalReport:
    """Signed worst-case condition values over the sampled terminal set.

    Violations are the positive parts: invariance is x+' P x+ - alpha^2,
    decrease is V_f(x+) + V_s(x, Kx) - V_f(x), input is max_i a_i (Kx) - b_i.
    """

    max_invariance: float
    max_decrease: float
    max_input: float
    n_samples: int
    seed: int

    @property
    def passed(self) -> bool:
        return max(self.max_invariance, self.max_decrease, self.max_input) <= 1e-8


def gain_matrix(k1, k2) -> np.ndarray:
    """Assemble K = [diag(k1), diag(k2)] from scalars or 3-vectors."""
    k1 = np.broadcast_to(np.asarray(k1, dtype=float), (3,))
    k2 = np.broadcast_to(np.asarray(k2, dtype=float), (3,))
    return np.hstack([np.diag(k1), np.diag(k2)])


def check_gain_stability(k1: float, k2: float, ts: float) -> bool:
    """Schur stability of the per-axis discrete closed loop.

    Checks the scalar chain -2/ts < k2 < (ts/2) k1 < 0 and, belt and
    suspenders, the spectral radius of the 2x2 closed loop; the chain is
    algebraically the Jury criterion for this loop, so the two agree.
    """
    if ts <= 0:
        raise ValueError(f"ts must be positive, got {ts}")
    chain = (-2.0 / ts < k2) and (k2 < (ts / 2.0) * k1) and ((ts / 2.0) * k1 < 0)
    a_cl = np.array([[1 + k1 * ts**2 / 2, ts + k2 * ts**2 / 2], [k1 * ts, 1 + k2 * ts]])
    rho = float(np.max(np.abs(np.linalg.eigvals(a_cl))))
    return bool(chain and rho < 1.0)


def q_star(weights: StageWeights, gains: np.ndarray) -> np.ndarray:
    """Q + lambda_max(R) K'K, the smallest admissible Lyapunov forcing term."""
    k = np.asarray(gains, dtype=float)
    lam = float(np.linalg.eigvalsh(weights.r_weight).max())
    out = weights.q_weight + lam * (k.T @ k)
    return 0.5 * (out + out.T)


def solve_discrete_lyapunov(a_cl: np.ndarray, m_matrix: np.ndarray) -> np.ndarray:
    """Unique SPD solution P of A_cl' P A_cl = P - M for Schur-stable A_cl.

    Solved as the 36-unknown linear system (I - A_cl' (x) A_cl') vec(P) =
    vec(M), then symmetrized.
    """
    a = np.asarray(a_cl, dtype=float)
    m = np.asarray(m_matrix, dtype=float)
    if float(np.max(np.abs(np.linalg.eigvals(a)))) >= 1.0:
        raise UnstableAcl("closed loop must have spectral radius < 1")
    n = a.shape[0]
    lhs = np.eye(n * n) - np.kron(a.T, a.T)
    p = np.linalg.solve(lhs, m.reshape(-1)).reshape(n, n)
    return 0.5 * (p + p.T)


def terminal_alpha(p: np.ndarray, gains: np.ndarray, vset: HPolytope) -> float:
    """Largest alpha with K x in vset for every x'Px <= alpha^2.

    With E = P^(-1/2), the extreme of a_i K x over the ellipsoid boundary is
    alpha |E (A_vc K)_i'|, so alpha = min_i b_i / |E (A_vc K)_i'|.  Rows whose
    mapped normal vanishes never bind and are skipped.
    """
    if np.min(vset.b) <= 0:
        raise ValueError("vset must contain the origin strictly")
    p = np.asarray(p, dtype=float)
    evals, evecs = np.linalg.eigh(p)
    if evals.min() <= 0:
        raise ValueError("P must be positive definite")
    e_inv_sqrt = evecs @ np.diag(evals**-0.5) @ evecs.T
    a_k = vset.a_rows @ np.asarray(gains, dtype=float)  # m x 6
    norms = np.linalg.norm(a_k @ e_inv_sqrt, axis=1)
    binding = norms > 1e-14
    if not np.any(binding):
        raise DegenerateConstraint("no constraint row binds; terminal level is unbounded")
    return float(np.min(vset.b[binding] / norms[binding]))


def design_terminal(
    weights: StageWeights,
    k1,
    k2,
    ts: float,
    vset: HPolytope,
    m_matrix: np.ndarray | None = None,
) -> TerminalIngredients:
    """Full terminal-ingredient pipeline: gains -> Q* -> P -> alpha_t.

    M defaults to Q*, the minimal admissible forcing term.
    """
    k1v = np.broadcast_to(np.asarray(k1, dtype=float), (3,))
    k2v = np.broadcast_to(np.asarray(k2, dtype=float), (3,))
    for a, b in zip(k1v, k2v):
        if not check_gain_stability(float(a), float(b), ts):
            raise UnstableAcl(f"per-axis gains ({a}, {b}) fail the stability chain at ts={ts}")
    k = gain_matrix(k1v, k2v)
    a_d, b_d = discretize(ts)
    a_cl = a_d + b_d @ k
    qs = q_star(weights, k)
    m = qs if m_matrix is None else 0.5 * (np.asarray(m_matrix, dtype=float) + np.asarray(m_matrix, dtype=float).T)
    p = solve_discrete_lyapunov(a_cl, m)
    alpha_t = terminal_alpha(p, k, vset)
    return TerminalIngredients(k, m, p, alpha_t)


def verify_terminal_conditions(
    ing: TerminalIngredients,
    weights: StageWeights,
    vset: HPolytope,
    ts: float,
    n_samples: int = 10_000,
    seed: int = 0,
) -> TerminalReport:
    """Sample the terminal set and evaluate the three MPC conditions.

    Points are uniform in {x'Px <= alpha^2} (Gaussian direction, radial
    rescale).  Returns the signed worst-case values; all <= 0 (up to fp)
    certifies invariance, cost decrease and input admissibility.
    """
    rng = np.random.default_rng(seed)
    p = ing.p_terminal
    a_d, b_d = discretize(ts)
    a_cl = a_d + b_d @ ing.gains
    evals, evecs = np.linalg.eigh(p)
    e_inv_sqrt = evecs @ np.diag(evals**-0.5) @ evecs.T

    z = rng.normal(size=(n_samples, 6))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    z *= rng.uniform(size=(n_samples, 1)) ** (1.0 / 6.0)
    xs = ing.alpha_t * (z @ e_inv_sqrt)

    xp = xs @ a_cl.T
    inv_vals = np.einsum("ij,jk,ik->i", xp, p, xp) - ing.alpha_t**2

    k = ing.gains
    vs = xs @ k.T
    vf_next = np.einsum("ij,jk,ik->i", xp, p, xp)
    vf_now = np.einsum("ij,jk,ik->i", xs, p, xs)
    stage = np.einsum("ij,jk,ik->i", vs, weights.r_weight, vs) + np.einsum(
        "ij,jk,ik->i", xs, weights.q_weight, xs
    )
    dec_vals = vf_next + stage - vf_now

    inp_vals = (vs @ vset.a_rows.T) - vset.b

    return TerminalReport(
        float(inv_vals.max()),
        float(dec_vals.max()),
        float(inp_vals.max()),
        n_samples,
        seed,
    )
