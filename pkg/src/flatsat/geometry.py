"""Convex-set machinery for the admissible virtual-input set and its relatives.

The admissible set for the virtual input v is

    Vc = { v : |v + g e3| <= t_max,
               v1^2 + v2^2 <= tan(eps_max)^2 (v3 + g)^2,
               v3 >= -g },

geometrically a spherical sector: apex at (0, 0, -g), radius t_max,
half-angle eps_max about the +z axis.  The origin (hover) is interior
whenever t_max > g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .errors import EmptyDifference, InfeasibleBall
from .model import B_MATRIX, E3, PhysicalParams


@dataclass(frozen=True)
class Ellipsoid:
    """Sublevel set {x : x' shape x <= level} of an SPD quadratic form."""

    shape: np.ndarray
    level: float

    def __post_init__(self):
        p = np.asarray(self.shape, dtype=float)
        object.__setattr__(self, "shape", p)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"shape matrix must be square, got {p.shape}")
        if np.abs(p - p.T).max() > 1e-10:
            raise ValueError("shape matrix must be symmetric to 1e-10")
        if np.linalg.eigvalsh(p).min() <= 0:
            raise ValueError("shape matrix must be positive definite")
        if self.level < 0:
            raise ValueError(f"level must be >= 0, got {self.level}")

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return float(x @ self.shape @ x) <= self.level + tol

    def boundary_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n points with x' shape x = level, directions uniform on the sphere."""
        dim = self.shape.shape[0]
        z = rng.normal(size=(n, dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        l_chol = np.linalg.cholesky(self.shape)
        return np.sqrt(self.level) * np.linalg.solve(l_chol.T, z.T).T

    def interior_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n points uniform in the ellipsoid (Gaussian direction, radial rescale)."""
        dim = self.shape.shape[0]
        pts = self.boundary_points(n, rng)
        radii = rng.uniform(size=(n, 1)) ** (1.0 / dim)
        return pts * radii


@dataclass(frozen=True)
class HPolytope:
    """Half-space intersection {x : a_rows x <= b}."""

    a_rows: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a_rows, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if a.shape[0] != b.shape[0]:
            raise ValueError(f"row count mismatch: {a.shape} vs {b.shape}")
        object.__setattr__(self, "a_rows", a)
        object.__setattr__(self, "b", b)

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(self.a_rows @ np.asarray(x, dtype=float) <= self.b + tol))

    def margins(self, x: np.ndarray) -> np.ndarray:
        """Per-row slack b - a x (negative entries are violations)."""
        return self.b - self.a_rows @ np.asarray(x, dtype=float)


@dataclass(frozen=True)
class VPolytope:
    """Convex hull of a finite vertex list."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if v.size == 0:
            raise ValueError("vertex list must be nonempty")
        object.__setattr__(self, "vertices", v)

    def support(self, direction: np.ndarray) -> float:
        """max over vertices of <direction, vertex>."""
        return float(np.max(self.vertices @ np.asarray(direction, dtype=float)))


@dataclass(frozen=True)
class Box:
    """Origin-centered box {v : |v_i| <= half_widths_i}."""

    half_widths: np.ndarray

    def __post_init__(self):
        hw = np.asarray(self.half_widths, dtype=float).ravel()
        if np.any(hw <= 0):
            raise ValueError(f"half widths must be positive, got {hw}")
        object.__setattr__(self, "half_widths", hw)

    def corners(self) -> np.ndarray:
        n = self.half_widths.size
        signs = np.array(np.meshgrid(*([[-1.0, 1.0]] * n))).T.reshape(-1, n)
        return signs * self.half_widths

    def contains(self, v: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(np.asarray(v, dtype=float)) <= self.half_widths + tol))

    def as_vpolytope(self) -> VPolytope:
        return VPolytope(self.corners())


def vc_margins(v: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """Constraint slacks of the input sector; all >= 0 iff v is admissible.

    Order: thrust ball, inclination cone, lower half-space.
    """
    v = np.asarray(v, dtype=float)
    w = v + params.g * E3
    tan2 = np.tan(params.eps_max) ** 2
    return np.array(
        [
            params.t_max**2 - float(w @ w),
            tan2 * (v[2] + params.g) ** 2 - (v[0] ** 2 + v[1] ** 2),
            v[2] + params.g,
        ]
    )


def vc_membership(v: np.ndarray, params: PhysicalParams, tol: float = 0.0) -> bool:
    """Closed-set membership test for the input sector (exact inequalities at tol=0).

    Mirrors vc_membership_many operation for operation so scalar and batched
    decisions agree bit for bit on boundary points.
    """
    v0, v1, v2 = float(v[0]), float(v[1]), float(v[2])
    w3 = v2 + params.g
    s12 = v0 * v0 + v1 * v1
    tan2 = math.tan(params.eps_max) ** 2
    # explicit products, not **2: numpy's vectorized array power can be one
    # ulp off a plain multiply, which would desynchronize the two predicates
    return (
        s12 + w3 * w3 <= params.t_max * params.t_max + tol
        and s12 <= tan2 * (w3 * w3) + tol
        and w3 >= -tol
    )


def vc_membership_many(vs: np.ndarray, params: PhysicalParams, tol: float = 0.0) -> np.ndarray:
    """Vectorized membership over rows of vs (used by the fuzz and MC oracles)."""
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    w3 = vs[:, 2] + params.g
    s12 = vs[:, 0] * vs[:, 0] + vs[:, 1] * vs[:, 1]
    tan2 = math.tan(params.eps_max) ** 2
    ball = (s12 + w3 * w3) <= params.t_max * params.t_max + tol
    cone = s12 <= tan2 * (w3 * w3) + tol
    half = w3 >= -tol
    return ball & cone & half


def max_ball_in_vc(params: PhysicalParams) -> float:
    """Squared radius of the largest origin-centered ball inside the sector.

    The origin sits on the sector axis at distance g from the apex, so the
    distances to the three boundary pieces are t_max - g (spherical cap),
    g sin(eps_max) (lateral cone) and g (apex plane, never the minimum).
    """
    if params.t_max <= params.g:
        raise InfeasibleBall(f"t_max={params.t_max} <= g={params.g}")
    return float(min(params.t_max - params.g, params.g * np.sin(params.eps_max)) ** 2)


def max_box_in_vc(params: PhysicalParams, tol: float = 1e-6) -> Box:
    """Volume-maximal origin-centered box in the sector, with v1 = v2 by symmetry.

    Two-parameter search: for each height v3 the largest admissible lateral
    half-width follows by bisection on corner feasibility, and the height is
    optimized by a scan plus golden-section refinement of v1(v3)^2 * v3.
    """
    if params.t_max <= params.g:
        raise InfeasibleBall(f"t_max={params.t_max} <= g={params.g}")

    def corners_ok(v1: float, v3: float) -> bool:
        corners = np.array(
            [[s1 * v1, s2 * v1, s3 * v3] for s1 in (-1, 1) for s2 in (-1, 1) for s3 in (-1, 1)]
        )
        return bool(np.all(vc_membership_many(corners, params)))

    def best_v1(v3: float) -> float:
        lo, hi = 0.0, params.t_max
        if not corners_ok(lo + tol, v3):
            return 0.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if corners_ok(mid, v3):
                lo = mid
            else:
                hi = mid
        return lo

    def volume(v3: float) -> float:
        return best_v1(v3) ** 2 * v3

    v3_hi = min(params.g, params.t_max - params.g) * (1 - 1e-12)
    grid = np.linspace(v3_hi / 200, v3_hi, 200)
    v3 = grid[int(np.argmax([volume(x) for x in grid]))]
    lo = max(v3 - v3_hi / 100, tol)
    hi = min(v3 + v3_hi / 100, v3_hi)
    phi = (np.sqrt(5.0) - 1) / 2
    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = volume(c), volume(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = volume(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = volume(d)
    v3 = 0.5 * (a + b)
    v1 = best_v1(v3)
    return Box(np.array([v1, v1, v3]))


def vc_polytope_vertices(params: PhysicalParams, n_az: int, n_el: int) -> np.ndarray:
    """Boundary vertex grid of the sector: apex, cap pole and n_el cap rings."""
    apex = -params.g * E3
    pts = [apex, apex + params.t_max * E3]
    az = 2 * np.pi * np.arange(n_az) / n_az
    for i in range(1, n_el + 1):
        el = params.eps_max * i / n_el
        ring = apex + params.t_max * np.stack(
            [np.sin(el) * np.cos(az), np.sin(el) * np.sin(az), np.cos(el) * np.ones_like(az)],
            axis=1,
        )
        pts.extend(ring)
    return np.array(pts)


def polytope_approx_vc(params: PhysicalParams, n_az: int = 24, n_el: int = 6) -> HPolytope:
    """Inner polytopic approximation of the sector.

    Vertices are sampled on the boundary (so the hull is contained in the
    convex sector) and converted to half-space form; the origin is interior,
    hence all offsets are positive after normalization.
    """
    if n_az < 6 or n_el < 2:
        raise ValueError(f"need n_az >= 6 and n_el >= 2, got {n_az}, {n_el}")
    hull = ConvexHull(vc_polytope_vertices(params, n_az, n_el))
    a = hull.equations[:, :-1]
    b = -hull.equations[:, -1]
    if np.min(b) <= 0:
        raise ValueError("origin unexpectedly not interior to the sector polytope")
    return HPolytope(a, b)


def pontryagin_diff(outer: HPolytope, inner: VPolytope) -> HPolytope:
    """Erosion outer (-) inner: same normals, offsets reduced by the support
    of the inner set (a max over its vertices)."""
    shrink = np.array([inner.support(row) for row in outer.a_rows])
    b_new = outer.b - shrink
    if np.any(b_new < 0):
        raise EmptyDifference(
            f"difference is empty: min offset {b_new.min():.6g} < 0"
        )
    return HPolytope(outer.a_rows.copy(), b_new)


def check_input_ball_condition(
    p_matrix: np.ndarray, eps: float, rho: float, rtol: float = 0.0
) -> bool:
    """True iff x'Px <= eps implies |B'Px|^2 <= rho.

    The maximum of |B'Px|^2 over the ellipsoid is eps * lambda_max(B'PB)
    (substitute y = P^(1/2) x), so the implication is a scalar comparison.
    """
    p = np.asarray(p_matrix, dtype=float)
    if np.linalg.eigvalsh(p).min() <= 0:
        raise ValueError("P must be positive definite")
    lam = float(np.linalg.eigvalsh(B_MATRIX.T @ p @ B_MATRIX).max())
    return eps * lam <= rho * (1.0 + rtol)
