"""Offline certificate synthesis for the saturated controllers.

Continuous-time double integrator, A = [[0, I], [0, 0]], B = [[0], [I]].
Everything here is per-axis decoupled 2x2 algebra wrapped back into 6x6
certificates, so feasibility is decided by exact symmetric eigenvalue
computations and scalar searches; no SDP solver is involved.

Nominal certificate: Q = P^-1 > 0 with

    Q A' + A Q - 2 B B' <= -alpha Q,

paired with the largest origin ball |v|^2 <= rho inside the input sector
and the largest ellipsoid level eps such that x'Px <= eps implies
|B'Px|^2 <= rho.

Robust certificate: Q_w = P_w^-1 > 0 with, for some beta > 0,

    Q_w A' + A Q_w - 2 B B' + beta Q_w + beta^-1 E E' <= 0

plus the per-row Schur conditions keeping the nominal feedback inside a
box contained in the sector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, ThresholdAboveInitial
from .geometry import Box, Ellipsoid, max_ball_in_vc, vc_membership_many
from .model import A_MATRIX, B_MATRIX, PhysicalParams

_DEFAULT_Q_RANGE = (1e-6, 1e6)


@dataclass(frozen=True)
class NominalDesign:
    """Synthesized or verified nominal certificate (P, eps) with its inputs."""

    q_matrix: np.ndarray
    p_matrix: np.ndarray
    alpha: float
    rho: float
    eps: float

    @property
    def p(self) -> np.ndarray:
        return self.p_matrix

    @property
    def level(self) -> float:
        return self.eps

    def ellipsoid(self) -> Ellipsoid:
        return Ellipsoid(self.p_matrix, self.eps)


@dataclass(frozen=True)
class RobustDesign:
    """Robust-invariance certificate; the invariant ellipsoid level is 1."""

    qw_matrix: np.ndarray
    pw_matrix: np.ndarray
    beta: float
    box: Box

    @property
    def p(self) -> np.ndarray:
        return self.pw_matrix

    @property
    def level(self) -> float:
        return 1.0

    def ellipsoid(self) -> Ellipsoid:
        return Ellipsoid(self.pw_matrix, 1.0)


@dataclass(frozen=True)
class AdaptiveBounds:
    """Upper bounds on the threshold-crossing time and the adaptive gain."""

    t_inf_bound: float
    gamma_inf_bound: float


def nominal_lmi_residual(q_matrix: np.ndarray, alpha: float) -> np.ndarray:
    """Q A' + A Q - 2 B B' + alpha Q; feasible iff all eigenvalues <= 0."""
    q = np.asarray(q_matrix, dtype=float)
    return q @ A_MATRIX.T + A_MATRIX @ q - 2 * B_MATRIX @ B_MATRIX.T + alpha * q


def robust_lmi_residual(qw_matrix: np.ndarray, beta: float, e_matrix: np.ndarray) -> np.ndarray:
    """Q_w A' + A Q_w - 2 B B' + beta Q_w + beta^-1 E E'."""
    qw = np.asarray(qw_matrix, dtype=float)
    e = np.atleast_2d(np.asarray(e_matrix, dtype=float))
    return (
        qw @ A_MATRIX.T
        + A_MATRIX @ qw
        - 2 * B_MATRIX @ B_MATRIX.T
        + beta * qw
        + (e @ e.T) / beta
    )


def max_level_set(p_matrix: np.ndarray, rho: float) -> float:
    """Largest eps with x'Px <= eps implying |B'Px|^2 <= rho.

    The S-procedure multiplier tau is eliminated analytically:
    P - tau P B B' P >= 0 iff tau lambda_max(B'PB) <= 1, and eps <= tau rho
    is maximized at that bound, giving eps = rho / lambda_max(B'PB).
    """
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    p = np.asarray(p_matrix, dtype=float)
    lam = float(np.linalg.eigvalsh(B_MATRIX.T @ p @ B_MATRIX).max())
    return rho / lam


def _axis_block(q1: float, q2: float, q3: float) -> np.ndarray:
    return np.array([[q1, q2], [q2, q3]])


def _expand_axes(blocks: list[np.ndarray]) -> np.ndarray:
    """Assemble per-axis 2x2 blocks (position/velocity) into the 6x6 layout."""
    m = np.zeros((6, 6))
    for i, blk in enumerate(blocks):
        m[i, i] = blk[0, 0]
        m[i, 3 + i] = blk[0, 1]
        m[3 + i, i] = blk[1, 0]
        m[3 + i, 3 + i] = blk[1, 1]
    return m


def _eig2_max(a: float, b: float, c: float) -> float:
    """Largest eigenvalue of the symmetric 2x2 [[a, b], [b, c]]."""
    mid = 0.5 * (a + c)
    rad = math.hypot(0.5 * (a - c), b)
    return mid + rad


def _ridge_point(q3: float, alpha: float) -> tuple[float, float, float]:
    # Zeroing the off-diagonal and the first diagonal entry of the reduced
    # 2x2 condition [[2q2+a q1, q3+a q2], [., a q3-2]] gives the one-parameter
    # family below; it attains the smallest velocity weight p3 = 2/q3, so the
    # level eps = rho/p3 is maximized at the largest feasible q3 = 2/alpha.
    return 2.0 * q3 / alpha**2, -q3 / alpha, q3


def _nominal_axis_search(alpha: float, q_range: tuple[float, float]) -> tuple[float, float, float]:
    lo, hi = q_range

    def in_range(q1: float, q2: float, q3: float) -> bool:
        return lo <= q1 <= hi and lo <= abs(q2) <= hi and lo <= q3 <= hi

    def feasible(q3: float) -> bool:
        q1, q2, _ = _ridge_point(q3, alpha)
        if not in_range(q1, q2, q3):
            return False
        m11 = 2 * q2 + alpha * q1
        m12 = q3 + alpha * q2
        m22 = alpha * q3 - 2
        if _eig2_max(m11, m12, m22) > 0:
            return False
        return q1 > 0 and q1 * q3 - q2**2 > 0

    q3_cap = min(2.0 / alpha, hi)
    grid = np.geomspace(lo, q3_cap, 64)
    feas = [q3 for q3 in grid if feasible(q3)]
    if not feas:
        q1, q2, q3 = _ridge_point(q3_cap, alpha)
        res = max(0.0, lo - q1, lo - abs(q2))
        raise Infeasible(
            f"no PD Q in range for alpha={alpha}: alpha*q3 <= 2 forces q3 <= {2/alpha:.3g} "
            f"and the ridge point leaves the search ranges",
            best_residual=res,
        )
    # bisect from the best grid point toward the feasibility boundary q3 = 2/alpha
    q3_lo = max(feas)
    q3_hi = q3_cap
    if feasible(q3_hi):
        q3_lo = q3_hi
    for _ in range(80):
        mid = 0.5 * (q3_lo + q3_hi)
        if feasible(mid):
            q3_lo = mid
        else:
            q3_hi = mid
    return _ridge_point(q3_lo, alpha)


def solve_nominal(
    params: PhysicalParams,
    alpha: float,
    q_matrix: np.ndarray | None = None,
    lmi_tol: float = 1e-3,
    q_range: tuple[float, float] = _DEFAULT_Q_RANGE,
) -> NominalDesign:
    """Synthesize (or, given q_matrix, verify) the nominal certificate.

    Synthesis exploits the per-axis decoupling: Q is one 2x2 block repeated
    on the three axes, found by grid+bisection on the reduced feasibility
    condition.  Verify mode checks the supplied Q against the stabilizing
    LMI with tolerance lmi_tol (loose default absorbs table rounding).
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    rho = max_ball_in_vc(params)
    if q_matrix is None:
        q1, q2, q3 = _nominal_axis_search(alpha, q_range)
        q = _expand_axes([_axis_block(q1, q2, q3)] * 3)
        tol = 1e-9
    else:
        q = np.asarray(q_matrix, dtype=float)
        tol = lmi_tol
    res_eig = float(np.linalg.eigvalsh(nominal_lmi_residual(q, alpha)).max())
    if res_eig > tol:
        raise Infeasible(
            f"stabilizing LMI violated: max residual eigenvalue {res_eig:.3e} > {tol:.1e}",
            best_residual=res_eig,
        )
    if np.linalg.eigvalsh(q).min() <= 0:
        raise Infeasible("Q is not positive definite")
    p = np.linalg.inv(q)
    p = 0.5 * (p + p.T)
    eps = max_level_set(p, rho)
    return NominalDesign(q, p, float(alpha), float(rho), float(eps))


def check_box_rows(qw_matrix: np.ndarray, box: Box) -> np.ndarray:
    """Margins vbar_i^2 - r_i(B'P_w) Q_w r_i(B'P_w)'; all >= 0 keeps the
    nominal feedback inside the box over the unit-level ellipsoid."""
    qw = np.asarray(qw_matrix, dtype=float)
    pw = np.linalg.inv(qw)
    rows = (B_MATRIX.T @ pw)  # 3x6
    quad = np.einsum("ij,jk,ik->i", rows, qw, rows)
    return box.half_widths**2 - quad


def _robust_axis_margin(
    q: tuple[float, float, float], beta: float, ee_block: np.ndarray, vbar: float
) -> float:
    """Min of the three normalized feasibility margins for one axis."""
    q1, q2, q3 = q
    w11 = 2 * q2 + beta * q1 + ee_block[0, 0] / beta
    w12 = q3 + beta * q2 + ee_block[0, 1] / beta
    w22 = beta * q3 - 2 + ee_block[1, 1] / beta
    m_lmi = -_eig2_max(w11, w12, w22)
    det = q1 * q3 - q2**2
    m_pd = -_eig2_max(-q1, -q2, -q3)  # = lambda_min(Q2)
    if det <= 0 or q1 <= 0:
        return min(m_lmi, m_pd, -1.0)
    m_box = (vbar**2 - q1 / det) / vbar**2
    return min(m_lmi, m_pd, m_box)


def _robust_axis_search(
    beta: float, ee_block: np.ndarray, vbar: float
) -> tuple[tuple[float, float, float], float]:
    """Pattern search maximizing the min margin for one axis at fixed beta."""
    seeds = [
        (2.3, -2.1, 2.1),
        (1.0, -0.5, 1.0),
        _ridge_point(min(2.0 / beta, 4.0), max(beta, 0.5)),
    ]
    best = max(seeds, key=lambda s: _robust_axis_margin(s, beta, ee_block, vbar))
    best_m = _robust_axis_margin(best, beta, ee_block, vbar)
    span = [max(1.0, abs(x)) for x in best]
    for _ in range(18):
        for i in range(3):
            cands = best[i] + np.linspace(-span[i], span[i], 25)
            for c in cands:
                trial = tuple(c if j == i else best[j] for j in range(3))
                m = _robust_axis_margin(trial, beta, ee_block, vbar)
                if m > best_m:
                    best, best_m = trial, m
            span[i] *= 0.55
    return best, best_m


def _axis_ee_blocks(e_matrix: np.ndarray) -> list[np.ndarray]:
    """Per-axis 2x2 blocks of E E'; requires the cross-axis blocks to vanish."""
    e = np.atleast_2d(np.asarray(e_matrix, dtype=float))
    ee = e @ e.T
    mask = np.zeros((6, 6), dtype=bool)
    for i in range(3):
        mask[np.ix_([i, 3 + i], [i, 3 + i])] = True
    if np.abs(ee[~mask]).max() > 1e-12:
        raise ValueError(
            "robust synthesis needs an axis-decoupled disturbance (E E' without "
            "cross-axis coupling); verify mode accepts any E"
        )
    return [ee[np.ix_([i, 3 + i], [i, 3 + i])] for i in range(3)]


def solve_robust(
    params: PhysicalParams,
    box: Box,
    e_matrix: np.ndarray,
    beta: float | None = None,
    qw_matrix: np.ndarray | None = None,
    lmi_tol: float = 0.15,
    box_tol: float = 0.05,
    margin_demand: float = 1e-9,
    corner_rtol: float = 1e-3,
) -> RobustDesign:
    """Synthesize (or, given qw_matrix and beta, verify) the robust certificate.

    Synthesis searches beta on a log grid with golden refinement and the
    per-axis block scalars by pattern search, maximizing the minimum
    feasibility margin.  Verify mode checks the supplied pair at the loose
    tolerances lmi_tol / box_tol.  corner_rtol relaxes the box-in-sector
    precondition just enough to absorb 3-digit rounding of published boxes.
    """
    corners = box.corners()
    tol = corner_rtol * (1.0 + float(np.max(np.sum(corners**2, axis=1))))
    if not np.all(vc_membership_many(corners, params, tol=tol)):
        raise ValueError("box must be contained in the input sector (corner check failed)")
    e = np.atleast_2d(np.asarray(e_matrix, dtype=float))

    if qw_matrix is not None:
        if beta is None:
            raise ValueError("verify mode needs both qw_matrix and beta")
        qw = np.asarray(qw_matrix, dtype=float)
        res = float(np.linalg.eigvalsh(robust_lmi_residual(qw, beta, e)).max())
        if res > lmi_tol:
            raise Infeasible(
                f"disturbance LMI violated: max eigenvalue {res:.3e} > {lmi_tol:.1e}",
                best_residual=res,
            )
        rows = check_box_rows(qw, box)
        if np.min(rows) < -box_tol:
            raise Infeasible(
                f"box row condition violated: min margin {rows.min():.3e} < {-box_tol:.1e}",
                best_residual=float(-rows.min()),
            )
        pw = np.linalg.inv(qw)
        return RobustDesign(qw, 0.5 * (pw + pw.T), float(beta), box)

    ee_blocks = _axis_ee_blocks(e)

    def total(beta_val: float) -> tuple[float, list[tuple[float, float, float]]]:
        axes, worst = [], np.inf
        for i in range(3):
            blk, m = _robust_axis_search(beta_val, ee_blocks[i], float(box.half_widths[i]))
            axes.append(blk)
            worst = min(worst, m)
        return worst, axes

    if beta is not None:
        betas = [float(beta)]
    else:
        betas = list(np.geomspace(1e-2, 1e2, 25))
    scored = [(total(b)[0], b) for b in betas]
    best_m, best_beta = max(scored)
    if beta is None:
        # golden refinement of beta on the bracket around the best grid point
        idx = betas.index(best_beta)
        lo = betas[max(idx - 1, 0)]
        hi = betas[min(idx + 1, len(betas) - 1)]
        phi = (math.sqrt(5.0) - 1) / 2
        a_b, b_b = math.log(lo), math.log(hi)
        c = b_b - phi * (b_b - a_b)
        d = a_b + phi * (b_b - a_b)
        fc, fd = total(math.exp(c))[0], total(math.exp(d))[0]
        for _ in range(24):
            if fc >= fd:
                b_b, d, fd = d, c, fc
                c = b_b - phi * (b_b - a_b)
                fc = total(math.exp(c))[0]
            else:
                a_b, c, fc = c, d, fd
                d = a_b + phi * (b_b - a_b)
                fd = total(math.exp(d))[0]
        cand = math.exp(0.5 * (a_b + b_b))
        if total(cand)[0] > best_m:
            best_m, best_beta = total(cand)[0], cand
    if best_m < margin_demand:
        raise Infeasible(
            f"robust synthesis found no certificate with margin >= {margin_demand:.1e} "
            f"(best normalized margin {best_m:.3e} at beta={best_beta:.4g})",
            best_residual=float(-best_m),
        )
    _, axes = total(best_beta)
    qw = _expand_axes([_axis_block(*blk) for blk in axes])
    pw = np.linalg.inv(qw)
    return RobustDesign(qw, 0.5 * (pw + pw.T), float(best_beta), box)


def adaptive_bounds(
    gamma0: float, mu: float, v0: float, v_inf: float, alpha: float
) -> AdaptiveBounds:
    """Finite bounds on the gain-adaptation transient.

    t_inf <= ln(V0/V_inf)/alpha from the exponential Lyapunov decay, and

        gamma(t_inf) <= gamma0 + mu (V_inf t_inf + V0 (1 - e^{-alpha t_inf}) / alpha)

    by integrating the worst-case adaptation rate mu (V0 e^{-alpha t} - V_inf).
    """
    if gamma0 < 1:
        raise ValueError(f"gamma0 must be >= 1, got {gamma0}")
    if mu < 0 or v_inf <= 0 or alpha <= 0:
        raise ValueError("need mu >= 0, v_inf > 0, alpha > 0")
    if v0 < v_inf:
        raise ThresholdAboveInitial(f"V(0)={v0} below the threshold {v_inf}")
    if v0 == v_inf:
        return AdaptiveBounds(0.0, float(gamma0))
    t_inf = math.log(v0 / v_inf) / alpha
    gamma_inf = gamma0 + mu * (v_inf * t_inf + v0 * (1.0 - math.exp(-alpha * t_inf)) / alpha)
    return AdaptiveBounds(float(t_inf), float(gamma_inf))
