"""Explicit saturation onto the input sector and onto half-space polytopes.

Radial saturation scales an inadmissible v back onto the sector boundary by
the largest factor lambda in (0, 1].  Because the boundary consists of a
sphere, a cone and a plane, the candidate factors are the real roots of two
quadratics plus two linear roots; membership re-validation then picks the
correct one (the printed root list contains spurious roots for some sign
patterns).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoFeasibleScaling, OriginNotInterior, ZeroVector
from .geometry import HPolytope, vc_margins, vc_membership
from .model import PhysicalParams

#: Relative slack used when pre-validating candidate factors; final results
#: are nudged to exact (closed-set) membership afterwards.
_VALIDATE_RTOL = 1e-12


@dataclass(frozen=True)
class SaturationResult:
    """Scaled input, the applied factor, and whether scaling was needed."""

    v_sat: np.ndarray
    lambda_star: float
    active: bool


def candidate_lambdas(v: np.ndarray, params: PhysicalParams) -> list[float]:
    """All real finite candidate factors for the boundary crossing of t -> t v.

    The list holds the plane root -g/v3, the ball/cone corner-circle root
    (t_max cos(eps_max) - g)/v3, and the roots of

        a1 t^2 + b1 t + c1 = 0   (cone),   a2 t^2 + b2 t + c2 = 0   (ball),

    with a1 = v1^2 + v2^2 - v3^2 tan^2, b1 = -2 tan^2 v3 g, c1 = -tan^2 g^2,
    a2 = |v|^2, b2 = 2 v3 g, c2 = g^2 - t_max^2.  Divisions by zero and
    negative discriminants simply contribute no candidate; a vanishing
    quadratic coefficient degenerates to the linear root -c/b.
    """
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        raise ZeroVector("candidate factors are undefined for v = 0")
    g, tmax = params.g, params.t_max
    tan2 = math.tan(params.eps_max) ** 2
    v12sq = float(v[0] ** 2 + v[1] ** 2)
    v3 = float(v[2])

    cands: list[float] = []
    if v3 != 0.0:
        cands.append(-g / v3)
        cands.append((tmax * math.cos(params.eps_max) - g) / v3)
    for a, b, c in (
        (v12sq - v3**2 * tan2, -2.0 * tan2 * v3 * g, -tan2 * g**2),
        (v12sq + v3**2, 2.0 * v3 * g, g**2 - tmax**2),
    ):
        if a == 0.0:
            if b != 0.0:
                cands.append(-c / b)
            continue
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            continue
        root = math.sqrt(disc)
        cands.append((-b + root) / (2.0 * a))
        cands.append((-b - root) / (2.0 * a))
    return [t for t in cands if math.isfinite(t)]


def _nudge_into_vc(v: np.ndarray, lam: float, params: PhysicalParams) -> float:
    """Shrink lam geometrically (starting at one ulp) until lam*v satisfies
    the closed constraints exactly; candidates are roots computed to fp
    accuracy, so the required shrink is a few ulps in practice."""
    if vc_membership(lam * v, params):
        return lam
    step = 1e-16
    for _ in range(60):
        trial = lam * (1.0 - step)
        if vc_membership(trial * v, params):
            return trial
        step *= 2.0
    raise NoFeasibleScaling(f"could not validate scaling {lam} for v={v}")


def sat_vc(v: np.ndarray, params: PhysicalParams) -> SaturationResult:
    """Radially saturate v onto the input sector.

    Identity (factor 1) for admissible v, including v = 0; otherwise the
    factor is the largest candidate in (0, 1] whose scaled vector passes
    membership re-validation, nudged so the result is admissible under the
    exact closed-set predicate.
    """
    v = np.asarray(v, dtype=float)
    if vc_membership(v, params):
        return SaturationResult(v.copy(), 1.0, False)

    scale = _VALIDATE_RTOL * (1.0 + float(v @ v))
    cands = [t for t in candidate_lambdas(v, params) if _VALIDATE_RTOL < t <= 1.0 + _VALIDATE_RTOL]
    for lam in sorted(cands, reverse=True):
        lam = min(lam, 1.0)
        if np.all(vc_margins(lam * v, params) >= -scale):
            lam = _nudge_into_vc(v, lam, params)
            return SaturationResult(lam * v, lam, True)
    raise NoFeasibleScaling(f"no candidate in (0, 1] admissible for v={v}")


def sat_polytope(vt: np.ndarray, vset: HPolytope) -> np.ndarray:
    """Radially saturate vt onto a polytope containing the origin strictly.

    For an exterior point the factor is min over rows with a_i vt > 0 of
    b_i / (a_i vt), the closed-form solution of the underlying LP.
    """
    if np.min(vset.b) <= 0:
        raise OriginNotInterior(f"all offsets must be positive, min is {np.min(vset.b):.6g}")
    vt = np.asarray(vt, dtype=float)
    dots = vset.a_rows @ vt
    if np.all(dots <= vset.b):
        return vt.copy()
    pos = dots > 0
    lam = float(np.min(vset.b[pos] / dots[pos]))
    step = 1e-16
    for _ in range(60):
        if vset.contains(lam * vt):
            return lam * vt
        lam *= 1.0 - step
        step *= 2.0
    raise NoFeasibleScaling(f"could not validate polytope scaling for vt={vt}")
