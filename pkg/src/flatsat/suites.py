"""Named verification suites run by `flatsat verify` and the acceptance tests.

Each suite returns a SuiteResult whose checks carry the measured value and
the limit it must not exceed, so the CLI can print one margin line per check.
The saturation oracle here is an independent bisection on the membership
predicate, deliberately separate from the closed-form root list it audits.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .control import AdaptiveState
from .geometry import vc_membership_many
from .lmi import (
    NominalDesign,
    RobustDesign,
    adaptive_bounds,
    check_box_rows,
    nominal_lmi_residual,
    robust_lmi_residual,
)
from .model import B_MATRIX, PhysicalParams, u_membership
from .reports import design_from_report, disturbance_from_obj
from .saturation import sat_vc
from .simulate import Scenario, simulate
from .terminal import discretize, terminal_alpha, verify_terminal_conditions

SUITES = ("saturation-fuzz", "lmi-margins", "invariance-mc", "terminal-conditions")


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    limit: float

    @property
    def passed(self) -> bool:
        return self.value <= self.limit

    def line(self) -> str:
        tag = "pass" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: value={self.value:.3e} limit={self.limit:.3e}"


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]


def saturation_fuzz_suite(
    params: PhysicalParams, n: int = 100_000, seed: int = 2024
) -> SuiteResult:
    """Membership, colinearity, idempotence, maximality and bisection-oracle
    agreement over uniformly fuzzed inputs."""
    rng = np.random.default_rng(seed)
    vs = rng.uniform(-60.0, 60.0, size=(n, 3))
    t0 = time.perf_counter()
    results = [sat_vc(v, params) for v in vs]
    sat = np.array([r.v_sat for r in results])
    lams = np.array([r.lambda_star for r in results])

    member_fail = int((~vc_membership_many(sat, params)).sum())
    colin = np.linalg.norm(np.cross(sat, vs), axis=1) / (1 + np.einsum("ij,ij->i", vs, vs))
    resat = np.array([sat_vc(s, params).v_sat for s in sat[:5000]])
    idem = float(np.abs(resat - sat[:5000]).max())
    active = lams < 1.0
    maximal_fail = int(vc_membership_many((1 + 1e-6) * sat[active], params).sum())

    lo = np.zeros(n)
    hi = np.ones(n)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        ok = vc_membership_many(mid[:, None] * vs, params)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    oracle_dev = float(np.abs(lams[active] - lo[active]).max()) if active.any() else 0.0
    elapsed = time.perf_counter() - t0

    return SuiteResult(
        "saturation-fuzz",
        [
            CheckResult("membership-failures", member_fail, 0),
            CheckResult("colinearity-residual", float(colin.max()), 1e-9),
            CheckResult("idempotence-deviation", idem, 1e-9),
            CheckResult("maximality-failures", maximal_fail, 0),
            CheckResult("oracle-deviation", oracle_dev, 1e-9),
            CheckResult("runtime-seconds", elapsed, 10.0),
        ],
    )


def lmi_margin_suite(report: dict) -> SuiteResult:
    """Certificate feasibility margins for whichever design the report holds."""
    built = design_from_report(report)
    params = built[0]
    checks: list[CheckResult] = []
    if report["mode"] == "nominal":
        design: NominalDesign = built[1]
        res = float(np.linalg.eigvalsh(nominal_lmi_residual(design.q_matrix, design.alpha)).max())
        lam = float(np.linalg.eigvalsh(B_MATRIX.T @ design.p_matrix @ B_MATRIX).max())
        checks.append(CheckResult("decay-lmi-max-eig", res, 1e-3))
        checks.append(
            CheckResult("q-not-pd", -float(np.linalg.eigvalsh(design.q_matrix).min()), 0.0)
        )
        checks.append(
            CheckResult(
                "input-ball-condition", design.eps * lam - design.rho * (1 + 1e-8), 0.0
            )
        )
    elif report["mode"] == "robust":
        design: RobustDesign = built[1]
        dist = disturbance_from_obj(report["disturbance"])
        res = float(
            np.linalg.eigvalsh(
                robust_lmi_residual(design.qw_matrix, design.beta, dist.e_matrix)
            ).max()
        )
        rows = check_box_rows(design.qw_matrix, design.box)
        corners = design.box.corners()
        tol = 1e-3 * (1 + float(np.max(np.sum(corners**2, axis=1))))
        outside = int((~vc_membership_many(corners, params, tol=tol)).sum())
        checks.append(CheckResult("disturbance-lmi-max-eig", res, 0.15))
        checks.append(CheckResult("box-row-margin", float(-rows.min()), 0.05))
        checks.append(CheckResult("box-corners-outside", outside, 0))
    else:
        _, ing, weights, vset, ts = built
        a_d, b_d = discretize(ts)
        a_cl = a_d + b_d @ ing.gains
        res = a_cl.T @ ing.p_terminal @ a_cl - ing.p_terminal + ing.m_matrix
        rel = float(np.linalg.norm(res, "fro") / np.linalg.norm(ing.m_matrix, "fro"))
        rho_cl = float(np.max(np.abs(np.linalg.eigvals(a_cl))))
        alpha_re = terminal_alpha(ing.p_terminal, ing.gains, vset)
        checks.append(CheckResult("lyapunov-residual-rel", rel, 1e-8))
        checks.append(CheckResult("closed-loop-spectral-radius", rho_cl, 1.0 - 1e-12))
        checks.append(
            CheckResult("terminal-level-consistency", abs(alpha_re - ing.alpha_t), 1e-9 * ing.alpha_t)
        )
    return SuiteResult("lmi-margins", checks)


def invariance_mc_suite(report: dict, n_starts: int = 20, seed: int = 7) -> SuiteResult:
    """Closed-loop Monte Carlo from ellipsoid-boundary starts.

    Nominal reports: undisturbed runs at the experiment control period must
    decay monotonically, reach the threshold level by the certified time and
    never leave the ellipsoid or the actuation set.  Robust reports: the
    report's disturbance drives boundary starts at gains 1 and 10 with
    near-continuous feedback; the unit level must never be exceeded beyond
    1e-6.
    """
    built = design_from_report(report)
    params, design = built[0], built[1]
    rng = np.random.default_rng(seed)
    starts = design.ellipsoid().boundary_points(n_starts, rng)
    checks: list[CheckResult] = []
    if report["mode"] == "nominal":
        v_inf = (report.get("adaptive") or {}).get("v_inf", 0.05)
        t_inf = adaptive_bounds(1.0, 0.0, design.eps, v_inf, design.alpha).t_inf_bound
        worst_inc = -np.inf
        worst_end = -np.inf
        worst_level = -np.inf
        bad_u = 0
        for xi0 in starts:
            tr = simulate(
                Scenario("stabilize", xi0, t_inf + 0.4, params, design, control_dt=0.1)
            )
            vs = np.array([r.lyapunov for r in tr])
            ts = np.array([r.t for r in tr])
            worst_inc = max(worst_inc, float(np.diff(vs).max()))
            worst_end = max(worst_end, float(vs[ts >= t_inf][0]))
            worst_level = max(worst_level, float(vs.max()))
            bad_u += sum(0 if u_membership(r.u, params, tol=0.0) else 1 for r in tr)
        checks.append(CheckResult("lyapunov-increase", worst_inc, 1e-9))
        checks.append(CheckResult("value-at-threshold-time", worst_end, v_inf))
        checks.append(CheckResult("level-excursion", worst_level, design.eps * (1 + 1e-12)))
        checks.append(CheckResult("input-violations", bad_u, 0))
    elif report["mode"] == "robust":
        dist = disturbance_from_obj(report["disturbance"])
        if dist is None:
            raise ValueError("robust invariance suite needs the report's disturbance section")
        worst_level = -np.inf
        bad_u = 0
        for gamma in (1.0, 10.0):
            for xi0 in starts:
                tr = simulate(
                    Scenario(
                        "robust",
                        xi0,
                        6.0,
                        params,
                        design,
                        adaptive=AdaptiveState(gamma, gamma, 0.0, 0.05),
                        disturbance=dist,
                        plant_dt=0.002,
                        control_dt=0.002,
                    )
                )
                worst_level = max(worst_level, max(r.lyapunov for r in tr))
                bad_u += sum(0 if u_membership(r.u, params, tol=0.0) else 1 for r in tr[::25])
        checks.append(CheckResult("level-excursion", worst_level, 1.0 + 1e-6))
        checks.append(CheckResult("input-violations", bad_u, 0))
    else:
        raise ValueError("invariance-mc applies to nominal or robust reports")
    return SuiteResult("invariance-mc", checks)


def terminal_conditions_suite(report: dict, n_samples: int = 10_000, seed: int = 5) -> SuiteResult:
    if report["mode"] != "terminal":
        raise ValueError("terminal-conditions applies to terminal reports")
    _, ing, weights, vset, ts = design_from_report(report)
    rep = verify_terminal_conditions(ing, weights, vset, ts, n_samples, seed)
    return SuiteResult(
        "terminal-conditions",
        [
            CheckResult("invariance-violation", rep.max_invariance, 1e-8),
            CheckResult("decrease-violation", rep.max_decrease, 1e-8),
            CheckResult("input-violation", rep.max_input, 1e-8),
        ],
    )


def run_suite(name: str, report: dict, seed: int = 7) -> SuiteResult:
    if name == "saturation-fuzz":
        params, *_ = design_from_report(report)
        return saturation_fuzz_suite(params, seed=seed)
    if name == "lmi-margins":
        return lmi_margin_suite(report)
    if name == "invariance-mc":
        return invariance_mc_suite(report, seed=seed)
    if name == "terminal-conditions":
        return terminal_conditions_suite(report, seed=seed)
    raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
