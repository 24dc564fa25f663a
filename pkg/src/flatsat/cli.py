"""Command line front end.

Subcommands:

* synthesize  - produce a design report (design.json) from a config
* terminal    - same, restricted to terminal-ingredient configs
* simulate    - run the config's scenarios against a design report,
                writing one trace CSV per scenario plus metrics.json
* verify      - run a named verification suite against a design report
* export      - dump a design report's matrices as CSV files

Exit codes: 0 ok, 1 bad config, 2 infeasible synthesis, 3 runtime abort,
4 failed verification.  FLATSAT_THREADS caps scenario parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import reports, suites
from .control import AdaptiveState
from .errors import ConfigError, ControllerAbort, FlatsatError, Infeasible
from .geometry import Box, max_box_in_vc, polytope_approx_vc
from .lmi import (
    adaptive_bounds,
    check_box_rows,
    nominal_lmi_residual,
    robust_lmi_residual,
    solve_nominal,
    solve_robust,
)
from .model import DisturbanceChannel, PhysicalParams
from .simulate import ReferencePlan, Scenario, metrics, simulate, trace_to_csv
from .terminal import (
    StageWeights,
    design_terminal,
    gain_matrix,
    q_star,
    verify_terminal_conditions,
)

_NUM = {"type": "number"}
_MAT = {"type": "array", "items": {"type": "array", "items": _NUM}}
_VEC3 = {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}
_VEC6 = {"type": "array", "items": _NUM, "minItems": 6, "maxItems": 6}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["physical"],
    "properties": {
        "physical": {
            "type": "object",
            "additionalProperties": False,
            "required": ["g", "t_max", "eps_max"],
            "properties": {"g": _NUM, "t_max": _NUM, "eps_max": _NUM},
        },
        "synthesis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["nominal", "robust", "terminal"]},
                "alpha": _NUM,
                "q": _MAT,
                "lmi_tol": _NUM,
                "beta": _NUM,
                "q_w": _MAT,
                "box": _VEC3,
                "weights": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"q_diag": _VEC6, "r_diag": _VEC3},
                    "required": ["q_diag", "r_diag"],
                },
                "gains": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "k1": {"anyOf": [_NUM, _VEC3]},
                        "k2": {"anyOf": [_NUM, _VEC3]},
                    },
                    "required": ["k1", "k2"],
                },
                "ts": _NUM,
                "m_scale": _NUM,
                "polytope": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"n_az": {"type": "integer"}, "n_el": {"type": "integer"}},
                },
            },
        },
        "adaptive": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"gamma0": _NUM, "mu": _NUM, "v_inf": _NUM},
        },
        "disturbance": {
            "type": "object",
            "additionalProperties": False,
            "required": ["e_cols", "signals"],
            "properties": {
                "e_cols": {"type": "array", "items": _VEC6},
                "signals": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["amp", "omega", "phase"],
                        "properties": {"amp": _NUM, "omega": _NUM, "phase": _NUM},
                    },
                },
            },
        },
        "scenarios": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name", "mode", "initial_state", "duration"],
                "properties": {
                    "name": {"type": "string"},
                    "mode": {"enum": ["stabilize", "stabilize-adaptive", "robust", "track"]},
                    "initial_state": _VEC6,
                    "duration": _NUM,
                    "plant_dt": _NUM,
                    "control_dt": _NUM,
                    "gamma0": _NUM,
                    "mu": _NUM,
                    "v_inf": _NUM,
                    "psi": _NUM,
                    "seed": {"type": "integer"},
                    "disturbed": {"type": "boolean"},
                    "reference": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["waypoints", "durations"],
                        "properties": {
                            "waypoints": {"type": "array", "items": _VEC3},
                            "durations": {"type": "array", "items": _NUM},
                            "vref_margin": _NUM,
                        },
                    },
                },
            },
        },
        "output_dir": {"type": "string"},
    },
}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation: {exc.message}") from exc
    return cfg


def _params(cfg: dict) -> PhysicalParams:
    p = cfg["physical"]
    return PhysicalParams(g=p["g"], t_max=p["t_max"], eps_max=p["eps_max"])


def _disturbance(cfg: dict) -> DisturbanceChannel | None:
    d = cfg.get("disturbance")
    if d is None:
        return None
    e = np.array(d["e_cols"], dtype=float).T
    channels = [(s["amp"], s["omega"], s["phase"]) for s in d["signals"]]
    return DisturbanceChannel(e, channels=channels)


def _synthesize_report(cfg: dict) -> dict:
    params = _params(cfg)
    syn = cfg.get("synthesis", {})
    mode = syn.get("mode", "nominal")
    adaptive = cfg.get("adaptive")
    digest = reports.config_digest(cfg)
    if mode == "nominal":
        q = np.array(syn["q"], dtype=float) if "q" in syn else None
        design = solve_nominal(
            params, syn.get("alpha", 1.2), q_matrix=q, lmi_tol=syn.get("lmi_tol", 1e-3)
        )
        diag = {
            "verify_mode": q is not None,
            "lmi_max_eig": float(
                np.linalg.eigvalsh(nominal_lmi_residual(design.q_matrix, design.alpha)).max()
            ),
        }
        return reports.nominal_report(design, params, adaptive, diag, digest)
    if mode == "robust":
        dist = _disturbance(cfg)
        if dist is None:
            raise ConfigError("robust synthesis needs a disturbance section")
        box = Box(np.array(syn["box"], dtype=float)) if "box" in syn else max_box_in_vc(params)
        qw = np.array(syn["q_w"], dtype=float) if "q_w" in syn else None
        design = solve_robust(
            params,
            box,
            dist.e_matrix,
            beta=syn.get("beta"),
            qw_matrix=qw,
            lmi_tol=syn.get("lmi_tol", 0.15),
        )
        diag = {
            "verify_mode": qw is not None,
            "lmi_max_eig": float(
                np.linalg.eigvalsh(
                    robust_lmi_residual(design.qw_matrix, design.beta, dist.e_matrix)
                ).max()
            ),
            "box_row_margins": [float(x) for x in check_box_rows(design.qw_matrix, design.box)],
        }
        return reports.robust_report(design, params, dist, adaptive, diag, digest)
    if mode == "terminal":
        w = syn["weights"]
        weights = StageWeights(np.diag(w["q_diag"]), np.diag(w["r_diag"]))
        poly_cfg = syn.get("polytope", {})
        vset = polytope_approx_vc(
            params, poly_cfg.get("n_az", 12), poly_cfg.get("n_el", 3)
        )
        m_scale = syn.get("m_scale", 1.0)
        k1, k2 = syn["gains"]["k1"], syn["gains"]["k2"]
        m = None
        if m_scale != 1.0:
            m = m_scale * q_star(weights, gain_matrix(k1, k2))
        ing = design_terminal(weights, k1, k2, syn["ts"], vset, m_matrix=m)
        quick = verify_terminal_conditions(ing, weights, vset, syn["ts"], 1000, seed=0)
        diag = {
            "max_invariance": quick.max_invariance,
            "max_decrease": quick.max_decrease,
            "max_input": quick.max_input,
        }
        return reports.terminal_report(ing, weights, vset, syn["ts"], params, diag, digest)
    raise ConfigError(f"unknown synthesis mode {mode!r}")


def cmd_synthesize(args) -> int:
    cfg = load_config(args.config)
    report = _synthesize_report(cfg)
    out = Path(args.out or cfg.get("output_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    path = out / "design.json"
    reports.write_design(path, reports.to_jsonable(report))
    print(f"wrote {path} (mode={report['mode']})")
    for key, val in report["diagnostics"].items():
        print(f"  {key}: {val}")
    return 0


def _build_scenario(cfg: dict, sc_cfg: dict, params, design, base_seed: int | None) -> Scenario:
    adaptive_cfg = dict(cfg.get("adaptive") or {})
    for key in ("gamma0", "mu", "v_inf"):
        if key in sc_cfg:
            adaptive_cfg[key] = sc_cfg[key]
    adaptive = None
    if adaptive_cfg:
        g0 = adaptive_cfg.get("gamma0", 1.0)
        adaptive = AdaptiveState(
            g0, g0, adaptive_cfg.get("mu", 0.0), adaptive_cfg.get("v_inf", 0.05)
        )
    dist = None
    if sc_cfg.get("disturbed", sc_cfg["mode"] == "robust"):
        dist = _disturbance(cfg)
    reference = None
    if "reference" in sc_cfg:
        r = sc_cfg["reference"]
        reference = ReferencePlan(
            np.array(r["waypoints"], dtype=float),
            np.array(r["durations"], dtype=float),
            r.get("vref_margin", 0.2),
        )
    return Scenario(
        sc_cfg["mode"],
        np.array(sc_cfg["initial_state"], dtype=float),
        sc_cfg["duration"],
        params,
        design,
        plant_dt=sc_cfg.get("plant_dt", 0.002),
        control_dt=sc_cfg.get("control_dt", 0.1),
        adaptive=adaptive,
        disturbance=dist,
        reference=reference,
        psi=sc_cfg.get("psi", 0.0),
        seed=base_seed if base_seed is not None else sc_cfg.get("seed", 0),
    )


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    report = reports.read_design(args.design)
    digest = reports.config_digest(cfg)
    if report.get("config_digest") not in (None, digest):
        print(
            "warning: design file was produced from a different config "
            f"(digest {report.get('config_digest')[:12]}... != {digest[:12]}...)",
            file=sys.stderr,
        )
    built = reports.design_from_report(report)
    params, design = built[0], built[1]
    out = Path(args.out or cfg.get("output_dir", "."))
    out.mkdir(parents=True, exist_ok=True)

    scenario_cfgs = cfg.get("scenarios", [])
    scenarios = [
        _build_scenario(cfg, sc_cfg, params, design, args.seed) for sc_cfg in scenario_cfgs
    ]

    def run_one(pair):
        sc_cfg, sc = pair
        trace = simulate(sc)
        path = out / f"{sc_cfg['name']}.csv"
        trace_to_csv(trace, path)
        m = metrics(trace, level=design.level)
        entry = {
            "name": sc_cfg["name"],
            "csv": path.name,
            "mode": sc.mode,
            "metrics": m,
        }
        if sc.adaptive is not None:
            v0 = trace[0].lyapunov
            entry["gamma0"] = sc.adaptive.gamma0
            entry["mu"] = sc.adaptive.mu
            entry["v_inf"] = sc.adaptive.v_inf
            entry["v0"] = v0
            if report["mode"] == "nominal" and v0 >= sc.adaptive.v_inf:
                b = adaptive_bounds(
                    sc.adaptive.gamma0,
                    sc.adaptive.mu,
                    v0,
                    sc.adaptive.v_inf,
                    report["scalars"]["alpha"],
                )
                entry["t_inf_bound"] = b.t_inf_bound
                entry["gamma_bound"] = b.gamma_inf_bound
        return entry

    workers = int(os.environ.get("FLATSAT_THREADS", "1"))
    pairs = list(zip(scenario_cfgs, scenarios))
    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(run_one, pairs))
    else:
        entries = [run_one(p) for p in pairs]

    meta = {"design_digest": report.get("config_digest"), "scenarios": entries}
    with open(out / "metrics.json", "w") as fh:
        json.dump(reports.to_jsonable(meta), fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(entries)} trace(s) and metrics.json to {out}")
    return 0


def cmd_verify(args) -> int:
    report = reports.read_design(args.design)
    result = suites.run_suite(args.suite, report, seed=args.seed if args.seed is not None else 7)
    for line in result.lines():
        print(line)
    if not result.passed:
        print(f"suite {args.suite}: FAILED")
        return 4
    print(f"suite {args.suite}: ok")
    return 0


def cmd_terminal(args) -> int:
    cfg = load_config(args.config)
    mode = cfg.get("synthesis", {}).get("mode")
    if mode != "terminal":
        raise ConfigError("the terminal subcommand needs synthesis.mode == 'terminal'")
    return cmd_synthesize(args)


def cmd_export(args) -> int:
    report = reports.read_design(args.design)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    for name, obj in report["matrices"].items():
        m = reports.matrix_from_obj(obj)
        np.savetxt(out / f"{name}.csv", m, delimiter=",", fmt="%.17g")
    with open(out / "scalars.json", "w") as fh:
        json.dump(reports.to_jsonable(report["scalars"]), fh, indent=2)
        fh.write("\n")
    print(f"exported {len(report['matrices'])} matrices to {out}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flatsat", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p_syn = sub.add_parser("synthesize", help="synthesize or verify a design")
    p_syn.add_argument("--config", required=True)
    p_syn.add_argument("--out", default=None)
    p_syn.set_defaults(func=cmd_synthesize)

    p_term = sub.add_parser("terminal", help="design terminal ingredients")
    p_term.add_argument("--config", required=True)
    p_term.add_argument("--out", default=None)
    p_term.set_defaults(func=cmd_terminal)

    p_sim = sub.add_parser("simulate", help="run the config's scenarios")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--design", required=True)
    p_sim.add_argument("--out", default=None)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_ver = sub.add_parser("verify", help="run a verification suite")
    p_ver.add_argument("--design", required=True)
    p_ver.add_argument("--suite", required=True, choices=suites.SUITES)
    p_ver.add_argument("--seed", type=int, default=None)
    p_ver.set_defaults(func=cmd_verify)

    p_exp = sub.add_parser("export", help="dump design matrices as CSV")
    p_exp.add_argument("--design", required=True)
    p_exp.add_argument("--out", default=None)
    p_exp.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        if exc.best_residual is not None:
            print(f"best residual: {exc.best_residual:.6g}", file=sys.stderr)
        return 2
    except ControllerAbort as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return 3
    except FlatsatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
