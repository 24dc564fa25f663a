"""Quadcopter translational model in the flat output space.

The vehicle's translational dynamics are

    xi_dot = A xi + B (R_psi f(u) - g e3),

with state xi = [x, y, z, xd, yd, zd], input u = (T, phi, theta) and yaw
psi treated as an exogenous measured signal.  The thrust direction map f
and its inverse give the exact linearizing change of variables
u = Phi(v) that turns the model into the double integrator
xi_dot = A xi + B v.

Conventions fixed here and relied on everywhere else:

* R_psi is the symmetric orthogonal matrix with rows
  [cos, sin, 0], [sin, -cos, 0], [0, 0, 1].  It is self-inverse
  (R_psi @ R_psi = I), which is why Phi applies R_psi twice.
* v3 = -g is rejected (strictly) by Phi: the inverse map divides by
  h3 = v3 + g.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NonPositiveSampling, SingularAttitude, ZeroThrust

E3 = np.array([0.0, 0.0, 1.0])

#: Continuous-time double-integrator matrices (position over velocity blocks).
A_MATRIX = np.block([[np.zeros((3, 3)), np.eye(3)], [np.zeros((3, 3)), np.zeros((3, 3))]])
B_MATRIX = np.vstack([np.zeros((3, 3)), np.eye(3)])


@dataclass(frozen=True)
class PhysicalParams:
    """Actuation limits defining the input set.

    g: gravity acceleration (m/s^2)
    t_max: maximum normalized thrust (m/s^2); must exceed g or hover is
        infeasible and no input ball exists
    eps_max: maximum inclination (rad), in (0, pi/2)
    """

    g: float = 9.81
    t_max: float = 1.45 * 9.81
    eps_max: float = float(np.radians(10.0))

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if not self.t_max > self.g:
            raise ValueError(
                f"t_max must exceed g (hover feasibility), got t_max={self.t_max}, g={self.g}"
            )
        if not 0 < self.eps_max < np.pi / 2:
            raise ValueError(f"eps_max must lie in (0, pi/2), got {self.eps_max}")


@dataclass(frozen=True)
class RealInput:
    """Physical input: normalized thrust (m/s^2), roll and pitch (rad)."""

    thrust: float
    roll: float
    pitch: float

    def as_array(self) -> np.ndarray:
        return np.array([self.thrust, self.roll, self.pitch])


def u_membership(u: RealInput, params: PhysicalParams, tol: float = 0.0) -> bool:
    """Actuation-set predicate: 0 <= T <= t_max, |phi| <= eps_max, |theta| <= eps_max."""
    return (
        -tol <= u.thrust <= params.t_max + tol
        and abs(u.roll) <= params.eps_max + tol
        and abs(u.pitch) <= params.eps_max + tol
    )


def yaw_matrix(psi: float) -> np.ndarray:
    """Yaw coupling matrix, symmetric orthogonal and therefore self-inverse."""
    c, s = np.cos(psi), np.sin(psi)
    return np.array([[c, s, 0.0], [s, -c, 0.0], [0.0, 0.0, 1.0]])


def thrust_map(u: RealInput) -> np.ndarray:
    """Thrust vector f(u) = T [cos(phi) sin(theta), sin(phi), cos(phi) cos(theta)]."""
    cp, sp = np.cos(u.roll), np.sin(u.roll)
    ct, st = np.cos(u.pitch), np.sin(u.pitch)
    return u.thrust * np.array([cp * st, sp, cp * ct])


def inverse_thrust_map(h: np.ndarray) -> RealInput:
    """Invert the thrust map on the open upper half space.

    Returns (|h|, asin(h2/|h|), atan(h1/h3)).  Raises ZeroThrust on h = 0
    and SingularAttitude when h3 <= 0 (the attitude would need >= 90 deg
    inclination).
    """
    h = np.asarray(h, dtype=float)
    norm = float(np.linalg.norm(h))
    if norm == 0.0:
        raise ZeroThrust("cannot invert the zero thrust vector")
    if h[2] <= 0.0:
        raise SingularAttitude(f"h3 must be positive, got {h[2]}")
    return RealInput(norm, float(np.arcsin(h[1] / norm)), float(np.arctan(h[0] / h[2])))


def linearizing_input(v: np.ndarray, psi: float, params: PhysicalParams) -> RealInput:
    """Exact linearizing change of variables Phi(v) = f^-1(R_psi (v + g e3)).

    Requires v3 > -g strictly; the boundary point is the inversion
    singularity (zero thrust, undefined pitch).
    """
    v = np.asarray(v, dtype=float)
    if v[2] <= -params.g:
        raise SingularAttitude(f"v3 must exceed -g, got v3={v[2]}, g={params.g}")
    return inverse_thrust_map(yaw_matrix(psi) @ (v + params.g * E3))


@dataclass(frozen=True)
class DisturbanceChannel:
    """Additive disturbance E w(t) with w constrained to the unit ball.

    Channels are (amplitude, angular frequency, phase) triples producing
    w_i(t) = amp * sin(omega t + phase); a raw callable can be supplied
    instead.  Samples whose norm exceeds 1 are scaled back onto the unit
    sphere (with a one-time warning) so the certificate assumption
    w'w <= 1 always holds.
    """

    e_matrix: np.ndarray
    channels: Sequence[tuple[float, float, float]] = ()
    signal: Callable[[float], np.ndarray] | None = None
    _warned: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        e = np.atleast_2d(np.asarray(self.e_matrix, dtype=float))
        object.__setattr__(self, "e_matrix", e)
        if e.shape[0] != 6:
            raise ValueError(f"e_matrix must have 6 rows, got {e.shape}")
        k = e.shape[1]
        if self.signal is None and len(self.channels) != k:
            raise ValueError(f"need {k} channel triples, got {len(self.channels)}")

    def sample(self, t: float) -> np.ndarray:
        if self.signal is not None:
            w = np.asarray(self.signal(t), dtype=float)
        else:
            w = np.array([a * np.sin(om * t + ph) for a, om, ph in self.channels])
        norm = float(np.linalg.norm(w))
        if norm > 1.0:
            if not self._warned:
                warnings.warn(
                    f"disturbance sample |w({t:.3f})| = {norm:.4f} > 1; clipping to the unit ball",
                    stacklevel=2,
                )
                self._warned.append(True)
            w = w / norm
        return w


def dynamics_rhs(
    xi: np.ndarray,
    u: RealInput,
    psi: float,
    params: PhysicalParams,
    dist: DisturbanceChannel | None = None,
    t: float = 0.0,
) -> np.ndarray:
    """Right-hand side of the translational dynamics, optionally disturbed.

    Position derivative is the velocity; velocity derivative is
    R_psi f(u) - g e3 plus E w(t) when a disturbance channel is present.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.empty(6)
    out[:3] = xi[3:]
    out[3:] = yaw_matrix(psi) @ thrust_map(u)
    out[5] -= params.g
    if dist is not None:
        out += dist.e_matrix @ dist.sample(t)
    return out


def discretize(ts: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact zero-order-hold discretization of the double integrator.

    Fourth-order Runge-Kutta reproduces this exactly (the flow is a cubic
    polynomial of the step), so A_d = [[I, ts I], [0, I]] and
    B_d = [[ts^2/2 I], [ts I]] in closed form.
    """
    if not ts > 0:
        raise NonPositiveSampling(f"sampling time must be positive, got {ts}")
    a_d = np.eye(6)
    a_d[:3, 3:] = ts * np.eye(3)
    b_d = np.vstack([0.5 * ts**2 * np.eye(3), ts * np.eye(3)])
    return a_d, b_d
