import numpy as np
import pytest

from flatsat import (
    HPolytope,
    PhysicalParams,
    candidate_lambdas,
    linearizing_input,
    max_box_in_vc,
    polytope_approx_vc,
    sat_polytope,
    sat_vc,
    u_membership,
    vc_membership,
)
from flatsat.errors import OriginNotInterior, ZeroVector
from flatsat.geometry import vc_membership_many
from helpers import bisect_lambda

G = 9.81


class TestCandidates:
    def test_vertical_far_above(self, table1_params):
        # ball quadratic for v = [0,0,10g]: (-20 + sqrt(400 + 441)) / 200
        cands = candidate_lambdas(np.array([0.0, 0.0, 10 * G]), table1_params)
        assert min(abs(c - 0.045) for c in cands) < 1e-12

    def test_linear_halfspace_candidate(self, table1_params):
        cands = candidate_lambdas(np.array([0.0, 0.0, -2 * G]), table1_params)
        assert min(abs(c - 0.5) for c in cands) < 1e-15

    def test_lateral_cone_candidate(self, table1_params):
        # v3 = 0 kills both linear candidates; the cone quadratic has b1 = 0
        expected = np.tan(table1_params.eps_max) * G / 10.0
        cands = candidate_lambdas(np.array([10.0, 0.0, 0.0]), table1_params)
        assert min(abs(c - expected) for c in cands) < 1e-12

    def test_zero_vector_rejected(self, table1_params):
        with pytest.raises(ZeroVector):
            candidate_lambdas(np.zeros(3), table1_params)


class TestSatVc:
    def test_identity_inside(self, table1_params):
        v = np.array([0.2, -0.1, 0.5])
        r = sat_vc(v, table1_params)
        assert r.lambda_star == 1.0 and not r.active
        np.testing.assert_array_equal(r.v_sat, v)

    def test_zero_identity(self, table1_params):
        r = sat_vc(np.zeros(3), table1_params)
        assert r.lambda_star == 1.0 and not r.active

    def test_vertical_ball_face(self, table1_params):
        r = sat_vc(np.array([0.0, 0.0, 10 * G]), table1_params)
        assert r.lambda_star == pytest.approx(0.045, abs=1e-9)
        np.testing.assert_allclose(r.v_sat, [0, 0, 0.45 * G], atol=1e-7)

    def test_downward_halfspace_face(self, table1_params):
        r = sat_vc(np.array([0.0, 0.0, -2 * G]), table1_params)
        assert r.lambda_star == pytest.approx(0.5, abs=1e-9)
        np.testing.assert_allclose(r.v_sat, [0, 0, -G], atol=1e-7)

    def test_fuzz_suite(self, table1_params):
        rng = np.random.default_rng(42)
        vs = rng.uniform(-60, 60, size=(20_000, 3))
        results = [sat_vc(v, table1_params) for v in vs]
        sat = np.array([r.v_sat for r in results])
        lams = np.array([r.lambda_star for r in results])
        # membership, exact closed-set predicate
        assert vc_membership_many(sat, table1_params).all()
        # colinearity
        cross = np.linalg.norm(np.cross(sat, vs), axis=1)
        assert np.max(cross / (1 + np.linalg.norm(vs, axis=1) ** 2)) < 1e-9
        # idempotence
        again = np.array([sat_vc(s, table1_params).v_sat for s in sat[:2000]])
        np.testing.assert_allclose(again, sat[:2000], atol=1e-9)
        # maximality
        active = lams < 1
        assert not vc_membership_many((1 + 1e-6) * sat[active], table1_params).any()
        # oracle agreement
        oracle = bisect_lambda(vs, table1_params)
        np.testing.assert_allclose(lams[active], oracle[active], atol=1e-9)

    def test_gain_scaling_property(self, table2_params):
        box = max_box_in_vc(table2_params)
        rng = np.random.default_rng(6)
        pts = np.vstack(
            [box.corners(), rng.uniform(-1, 1, size=(500, 3)) * box.half_widths]
        )
        for gamma in (1.0, 2.0, 10.0):
            for v in pts:
                r = sat_vc(gamma * v, table2_params)
                assert gamma * r.lambda_star >= 1 - 1e-9

    def test_composition_into_actuation_set(self, table1_params):
        rng = np.random.default_rng(9)
        for _ in range(2000):
            v = rng.uniform(-40, 40, 3)
            psi = rng.uniform(-np.pi, np.pi)
            r = sat_vc(v, table1_params)
            vv = r.v_sat
            if vv[2] <= -G + 1e-9:  # inversion singularity at the apex
                vv = vv.copy()
                vv[2] = -G + 1e-9
            u = linearizing_input(vv, psi, table1_params)
            assert u_membership(u, table1_params, tol=1e-9)


class TestSatPolytope:
    def _unit_cube(self):
        a = np.vstack([np.eye(3), -np.eye(3)])
        return HPolytope(a, np.ones(6))

    def test_identity_inside(self):
        v = np.array([0.3, -0.2, 0.9])
        np.testing.assert_array_equal(sat_polytope(v, self._unit_cube()), v)

    def test_single_facet(self):
        np.testing.assert_allclose(
            sat_polytope(np.array([2.0, 0.0, 0.0]), self._unit_cube()), [1, 0, 0], atol=1e-12
        )

    def test_origin_interior_required(self):
        bad = HPolytope(np.eye(3), np.array([1.0, 0.0, 1.0]))
        with pytest.raises(OriginNotInterior):
            sat_polytope(np.ones(3), bad)

    def test_bisection_oracle_agreement(self, table2_params):
        poly = polytope_approx_vc(table2_params, 12, 3)
        rng = np.random.default_rng(12)
        for _ in range(500):
            v = rng.uniform(-40, 40, 3)
            out = sat_polytope(v, poly)
            lo, hi = 0.0, 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if poly.contains(mid * v):
                    lo = mid
                else:
                    hi = mid
            lam = 1.0 if poly.contains(v) else lo
            np.testing.assert_allclose(out, lam * np.asarray(v), atol=1e-9)

    def test_result_inside_sector(self, table2_params):
        # the polytope is an inner approximation, so polytopic saturation
        # never leaves the sector itself
        poly = polytope_approx_vc(table2_params, 12, 3)
        rng = np.random.default_rng(13)
        outs = np.array(
            [sat_polytope(rng.uniform(-40, 40, 3), poly) for _ in range(1000)]
        )
        assert vc_membership_many(outs, table2_params, tol=1e-9).all()
