"""Deterministic closed-loop simulation of the nonlinear model.

Fixed-step RK4 on the translational dynamics with zero-order-hold control:
the controller and the gain adaptation run at control_dt (0.1 s by default)
while the plant integrates at plant_dt.  Disturbances are sampled
continuously inside the RK4 stages.  Given identical scenarios the trace is
bitwise identical; nothing here draws random numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .control import AdaptiveState, ControlAction, control, gamma_step, lyapunov_value, tracking_control
from .errors import EmptyDifference, ReferenceTooAggressive
from .geometry import HPolytope, VPolytope, polytope_approx_vc, pontryagin_diff, vc_membership_many
from .lmi import NominalDesign, RobustDesign
from .model import (
    DisturbanceChannel,
    PhysicalParams,
    RealInput,
    dynamics_rhs,
    thrust_map,
    yaw_matrix,
)

MODES = ("stabilize", "stabilize-adaptive", "robust", "track")

#: Column order of the trace CSV export.
CSV_HEADER = "t,x,y,z,vx,vy,vz,v1,v2,v3,T,phi,theta,V,gamma,lambda,w1,w2,xr,yr,zr,sat_active"


@dataclass(frozen=True)
class ReferencePlan:
    """Waypoint list with per-segment durations for quintic rest-to-rest moves."""

    waypoints: np.ndarray
    segment_durations: np.ndarray
    vref_margin: float = 0.2

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.waypoints, dtype=float))
        d = np.asarray(self.segment_durations, dtype=float).ravel()
        if w.shape[0] < 2 or w.shape[1] != 3:
            raise ValueError(f"need at least two 3d waypoints, got {w.shape}")
        if d.shape[0] != w.shape[0] - 1 or np.any(d <= 0):
            raise ValueError("need one positive duration per segment")
        if self.vref_margin <= 0:
            raise ValueError("vref_margin must be positive")
        object.__setattr__(self, "waypoints", w)
        object.__setattr__(self, "segment_durations", d)


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Sampled reference: state and acceleration callables plus the input box."""

    plan: ReferencePlan
    v_polytope: VPolytope
    total_duration: float
    state: Callable[[float], np.ndarray] = field(repr=False, default=None)
    accel: Callable[[float], np.ndarray] = field(repr=False, default=None)


def _quintic_eval(p0: np.ndarray, p1: np.ndarray, T: float, tau: float):
    s = min(max(tau / T, 0.0), 1.0)
    d = p1 - p0
    pos = p0 + d * (10 * s**3 - 15 * s**4 + 6 * s**5)
    vel = d / T * (30 * s**2 - 60 * s**3 + 30 * s**4)
    acc = d / T**2 * (60 * s - 180 * s**2 + 120 * s**3)
    return pos, vel, acc


def make_reference(plan: ReferencePlan, params: PhysicalParams) -> ReferenceTrajectory:
    """Quintic rest-to-rest reference through the waypoints.

    Each segment has continuous position, velocity and acceleration with
    rest endpoints; the acceleration extremum of a segment is
    10 |d| / (sqrt(3) T^2) per axis, so the enclosing input box follows in
    closed form and is inflated by vref_margin (m/s^2).  Raises
    ReferenceTooAggressive when a box corner leaves the input sector.
    """
    w = plan.waypoints
    durs = plan.segment_durations
    starts = np.concatenate([[0.0], np.cumsum(durs)])
    total = float(starts[-1])

    peak = np.max(
        np.abs(w[1:] - w[:-1]) * (10.0 / np.sqrt(3.0)) / durs[:, None] ** 2, axis=0
    )
    half = peak + plan.vref_margin
    corners = np.array(
        [[sx * half[0], sy * half[1], sz * half[2]] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
    )
    if not np.all(vc_membership_many(corners, params)):
        raise ReferenceTooAggressive(
            f"reference input box {half} leaves the input sector; use longer durations"
        )

    def locate(t: float) -> tuple[int, float]:
        if t >= total:
            return len(durs) - 1, durs[-1]
        idx = int(np.searchsorted(starts, t, side="right") - 1)
        idx = min(max(idx, 0), len(durs) - 1)
        return idx, t - starts[idx]

    def state(t: float) -> np.ndarray:
        i, tau = locate(max(t, 0.0))
        pos, vel, _ = _quintic_eval(w[i], w[i + 1], durs[i], tau)
        return np.concatenate([pos, vel])

    def accel(t: float) -> np.ndarray:
        if t >= total or t < 0.0:
            return np.zeros(3)
        i, tau = locate(t)
        return _quintic_eval(w[i], w[i + 1], durs[i], tau)[2]

    return ReferenceTrajectory(plan, VPolytope(corners), total, state, accel)


@dataclass(frozen=True)
class Scenario:
    """One closed-loop run: mode, design, timing, and optional extras."""

    mode: str
    initial_state: np.ndarray
    duration: float
    params: PhysicalParams
    design: NominalDesign | RobustDesign
    plant_dt: float = 0.002
    control_dt: float = 0.1
    adaptive: AdaptiveState | None = None
    disturbance: DisturbanceChannel | None = None
    reference: ReferencePlan | None = None
    psi: float = 0.0
    seed: int = 0
    polytope_facets: tuple[int, int] = (24, 6)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        xi = np.asarray(self.initial_state, dtype=float).ravel()
        if xi.shape != (6,) or not np.all(np.isfinite(xi)):
            raise ValueError("initial_state must be a finite 6-vector")
        object.__setattr__(self, "initial_state", xi)
        if self.plant_dt <= 0 or self.control_dt <= 0 or self.plant_dt > self.control_dt:
            raise ValueError("need 0 < plant_dt <= control_dt")
        ratio = self.control_dt / self.plant_dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("control_dt must be an integer multiple of plant_dt")
        if self.mode == "track" and self.reference is None:
            raise ValueError("track mode needs a reference plan")


@dataclass(frozen=True)
class TraceRecord:
    """State, inputs and bookkeeping at one control instant."""

    t: float
    xi: np.ndarray
    v: np.ndarray
    u: RealInput
    lyapunov: float
    gamma: float
    lambda_star: float
    w: np.ndarray | None
    xi_ref: np.ndarray | None
    sat_active: bool


def rk4_step(
    xi: np.ndarray,
    u: RealInput,
    psi: float,
    params: PhysicalParams,
    dist: DisturbanceChannel | None,
    t: float,
    dt: float,
) -> np.ndarray:
    """One classical RK4 step with u held constant across the step."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    xi = np.asarray(xi, dtype=float)
    k1 = dynamics_rhs(xi, u, psi, params, dist, t)
    k2 = dynamics_rhs(xi + 0.5 * dt * k1, u, psi, params, dist, t + 0.5 * dt)
    k3 = dynamics_rhs(xi + 0.5 * dt * k2, u, psi, params, dist, t + 0.5 * dt)
    k4 = dynamics_rhs(xi + dt * k3, u, psi, params, dist, t + dt)
    return xi + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk4_step_acc(
    xi: np.ndarray,
    acc: np.ndarray,
    dist: DisturbanceChannel | None,
    t: float,
    dt: float,
) -> np.ndarray:
    """RK4 step with the commanded acceleration precomputed (ZOH fast path)."""

    def rhs(x, tt):
        out = np.empty(6)
        out[:3] = x[3:]
        out[3:] = acc
        if dist is not None:
            out += dist.e_matrix @ dist.sample(tt)
        return out

    k1 = rhs(xi, t)
    k2 = rhs(xi + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = rhs(xi + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = rhs(xi + dt * k3, t + dt)
    return xi + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def simulate(scenario: Scenario) -> list[TraceRecord]:
    """Run the closed loop and return one record per control instant
    (including the final state, whose inputs are the controller's answer
    at that state)."""
    sc = scenario
    params, design = sc.params, sc.design
    n_sub = int(round(sc.control_dt / sc.plant_dt))
    n_steps = int(round(sc.duration / sc.control_dt))

    adaptive = sc.adaptive
    gamma = adaptive.gamma if adaptive is not None else 1.0

    ref = v_tilde = None
    if sc.mode == "track":
        ref = make_reference(sc.reference, params)
        poly = polytope_approx_vc(params, *sc.polytope_facets)
        try:
            v_tilde = pontryagin_diff(poly, ref.v_polytope)
        except EmptyDifference as exc:
            raise ReferenceTooAggressive(str(exc)) from exc
        if np.min(v_tilde.b) <= 0:
            raise ReferenceTooAggressive("eroded input set has no interior")

    def act(xi: np.ndarray, t: float, gam: float) -> tuple[ControlAction, float, np.ndarray | None]:
        if sc.mode == "track":
            xr = ref.state(t)
            action = tracking_control(
                xi, xr, ref.accel(t), design.p, gam, v_tilde, sc.psi, params
            )
            return action, lyapunov_value(xi - xr, design.p), xr
        action = control(xi, design, gam, sc.psi, params)
        return action, lyapunov_value(xi, design.p), None

    records: list[TraceRecord] = []
    xi = sc.initial_state.copy()
    g_e3 = np.array([0.0, 0.0, params.g])
    for k in range(n_steps):
        t = k * sc.control_dt
        action, v_val, xr = act(xi, t, gamma)
        w = sc.disturbance.sample(t) if sc.disturbance is not None else None
        records.append(
            TraceRecord(
                t, xi.copy(), action.v, action.u, v_val, gamma,
                action.lambda_star, w, xr, action.lambda_star < 1.0,
            )
        )
        if adaptive is not None:
            new_state = gamma_step(
                AdaptiveState(gamma, adaptive.gamma0, adaptive.mu, adaptive.v_inf),
                v_val, sc.control_dt,
            )
            gamma = new_state.gamma
        # the applied input is exact: integrate with its commanded acceleration
        acc = yaw_matrix(sc.psi) @ thrust_map(action.u) - g_e3
        for j in range(n_sub):
            xi = _rk4_step_acc(xi, acc, sc.disturbance, t + j * sc.plant_dt, sc.plant_dt)

    t_end = n_steps * sc.control_dt
    action, v_val, xr = act(xi, t_end, gamma)
    w = sc.disturbance.sample(t_end) if sc.disturbance is not None else None
    records.append(
        TraceRecord(
            t_end, xi.copy(), action.v, action.u, v_val, gamma,
            action.lambda_star, w, xr, action.lambda_star < 1.0,
        )
    )
    return records


def metrics(
    trace: list[TraceRecord],
    level: float | None = None,
    reference: Callable[[float], np.ndarray] | None = None,
) -> dict:
    """Summary statistics of a trace.

    rms_error is over the position error (against the recorded reference
    when present, the supplied callable otherwise, the origin as a last
    resort); invariance_violations counts records with V beyond the given
    level (plus fp slack); saturation_duty is the fraction of instants with
    an active saturation.
    """
    if not trace:
        raise ValueError("trace must be nonempty")
    sq = 0.0
    for r in trace:
        if r.xi_ref is not None:
            target = r.xi_ref[:3]
        elif reference is not None:
            target = np.asarray(reference(r.t), dtype=float)[:3]
        else:
            target = np.zeros(3)
        err = r.xi[:3] - target
        sq += float(err @ err)
    rms = float(np.sqrt(sq / len(trace)))
    vmax = max(r.lyapunov for r in trace)
    violations = 0
    if level is not None:
        violations = sum(1 for r in trace if r.lyapunov > level * (1 + 1e-9))
    duty = sum(1 for r in trace if r.sat_active) / len(trace)
    return {
        "rms_error": rms,
        "max_v": float(vmax),
        "final_gamma": float(trace[-1].gamma),
        "invariance_violations": int(violations),
        "saturation_duty": float(duty),
    }


def _fmt(x: float) -> str:
    return repr(float(x))


def trace_to_csv(trace: list[TraceRecord], path) -> None:
    """Write a trace in the fixed CSV schema (full-precision floats, LF endings,
    absent channels left empty)."""
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in trace:
            w = ["", ""]
            if r.w is not None:
                for i in range(min(2, len(r.w))):
                    w[i] = _fmt(r.w[i])
            xr = ["", "", ""]
            if r.xi_ref is not None:
                xr = [_fmt(x) for x in r.xi_ref[:3]]
            cells = (
                [_fmt(r.t)]
                + [_fmt(x) for x in r.xi]
                + [_fmt(x) for x in r.v]
                + [_fmt(r.u.thrust), _fmt(r.u.roll), _fmt(r.u.pitch)]
                + [_fmt(r.lyapunov), _fmt(r.gamma), _fmt(r.lambda_star)]
                + w
                + xr
                + ["1" if r.sat_active else "0"]
            )
            fh.write(",".join(cells) + "\n")
