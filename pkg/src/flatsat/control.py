"""Saturated gradient feedback with adaptive gain, plus the tracking variant.

The stabilizing law is v = sat(-gamma B'P xi) followed by the exact
input transform u = Phi(v, psi); any gamma >= 1 preserves the invariance
certificate, and gamma may grow online via threshold adaptation on the
Lyapunov value.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ControllerAbort
from .geometry import HPolytope
from .lmi import NominalDesign, RobustDesign
from .model import B_MATRIX, PhysicalParams, RealInput, linearizing_input, u_membership
from .saturation import sat_polytope, sat_vc

#: Inputs are clamped into the actuation set when within this absolute
#: floating-point slack; larger excursions indicate a real bug and abort.
_U_FP_TOL = 1e-9

#: The transform Phi is singular at v3 = -g (the sector apex, where
#: v1 = v2 = 0); saturated outputs landing there are lifted by this amount.
_APEX_NUDGE = 1e-9


@dataclass(frozen=True)
class AdaptiveState:
    """Non-decreasing gain gamma with threshold adaptation parameters."""

    gamma: float
    gamma0: float = 1.0
    mu: float = 0.0
    v_inf: float = 0.05

    def __post_init__(self):
        if not self.gamma >= self.gamma0 >= 1.0:
            raise ValueError(f"need gamma >= gamma0 >= 1, got {self.gamma}, {self.gamma0}")
        if self.mu < 0 or self.v_inf <= 0:
            raise ValueError("need mu >= 0 and v_inf > 0")


@dataclass(frozen=True)
class ControlAction:
    v: np.ndarray
    u: RealInput
    lambda_star: float


def lyapunov_value(xi: np.ndarray, p_matrix: np.ndarray) -> float:
    """Quadratic Lyapunov value xi' P xi."""
    xi = np.asarray(xi, dtype=float)
    return float(xi @ np.asarray(p_matrix, dtype=float) @ xi)


def threshold(s: float, v_inf: float) -> float:
    """Dead-zone: 0 below v_inf, s - v_inf above; continuous at the knee."""
    if s < 0:
        raise ValueError(f"threshold input must be >= 0, got {s}")
    return max(0.0, s - v_inf)


def gamma_step(state: AdaptiveState, v_value: float, dt: float) -> AdaptiveState:
    """Forward-Euler update of the gain dynamics; never decreases."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return replace(state, gamma=state.gamma + dt * state.mu * threshold(v_value, state.v_inf))


def _finish(v: np.ndarray, psi: float, params: PhysicalParams) -> tuple[np.ndarray, RealInput]:
    """Apply the apex nudge and the input transform, clamping fp noise into
    the actuation set."""
    if v[2] < -params.g + _APEX_NUDGE:
        v = v.copy()
        v[2] = -params.g + _APEX_NUDGE
    u = linearizing_input(v, psi, params)
    if not u_membership(u, params):
        if not u_membership(u, params, tol=_U_FP_TOL):
            raise ControllerAbort(f"computed input outside the actuation set: {u}")
        u = RealInput(
            float(np.clip(u.thrust, 0.0, params.t_max)),
            float(np.clip(u.roll, -params.eps_max, params.eps_max)),
            float(np.clip(u.pitch, -params.eps_max, params.eps_max)),
        )
    return v, u


def control(
    xi: np.ndarray,
    design: NominalDesign | RobustDesign,
    gamma: float,
    psi: float,
    params: PhysicalParams,
) -> ControlAction:
    """Stabilizing saturated feedback v = sat(-gamma B'P xi), u = Phi(v)."""
    if gamma < 1.0:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    xi = np.asarray(xi, dtype=float)
    raw = -gamma * (B_MATRIX.T @ design.p @ xi)
    res = sat_vc(raw, params)
    v, u = _finish(res.v_sat, psi, params)
    return ControlAction(v, u, res.lambda_star)


def tracking_control(
    xi: np.ndarray,
    xi_ref: np.ndarray,
    v_ref: np.ndarray,
    p_matrix: np.ndarray,
    gamma: float,
    v_tilde: HPolytope,
    psi: float,
    params: PhysicalParams,
) -> ControlAction:
    """Tracking feedback: saturate the error term over the eroded polytope
    v_tilde, then add the reference input.

    With v_tilde = (sector polytope) (-) V_ref and v_ref inside V_ref, the
    sum lands in the sector polytope by the erosion guarantee.
    """
    if gamma < 1.0:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    err = np.asarray(xi, dtype=float) - np.asarray(xi_ref, dtype=float)
    raw = -gamma * (B_MATRIX.T @ np.asarray(p_matrix, dtype=float) @ err)
    vt = sat_polytope(raw, v_tilde)
    nr = float(np.linalg.norm(raw))
    lam = 1.0 if nr == 0.0 else float(np.linalg.norm(vt)) / nr
    v, u = _finish(np.asarray(v_ref, dtype=float) + vt, psi, params)
    return ControlAction(v, u, min(lam, 1.0))
