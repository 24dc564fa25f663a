"""Design-report JSON schema: the file interface between synthesis, simulation,
verification and plotting.

Matrices are stored row-major with explicit dimensions at full double
precision; the report also embeds the physical parameters, the adaptive and
disturbance sections and a digest of the producing configuration so that
downstream consumers never re-read the config.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

import numpy as np

from .geometry import Box, HPolytope
from .lmi import NominalDesign, RobustDesign
from .model import DisturbanceChannel, PhysicalParams
from .terminal import StageWeights, TerminalIngredients

SCHEMA_VERSION = 1


def matrix_to_obj(m: np.ndarray) -> dict:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "data": [float(x) for x in m.ravel()]}


def matrix_from_obj(obj: dict) -> np.ndarray:
    return np.array(obj["data"], dtype=float).reshape(obj["rows"], obj["cols"])


def config_digest(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def params_to_obj(params: PhysicalParams) -> dict:
    return {"g": params.g, "t_max": params.t_max, "eps_max": params.eps_max}


def params_from_obj(obj: dict) -> PhysicalParams:
    return PhysicalParams(g=obj["g"], t_max=obj["t_max"], eps_max=obj["eps_max"])


def disturbance_to_obj(dist: DisturbanceChannel | None) -> dict | None:
    if dist is None:
        return None
    if dist.signal is not None:
        raise ValueError("only channel-triple disturbances serialize to reports")
    return {
        "e_cols": [[float(x) for x in col] for col in dist.e_matrix.T],
        "signals": [
            {"amp": float(a), "omega": float(om), "phase": float(ph)}
            for a, om, ph in dist.channels
        ],
    }


def disturbance_from_obj(obj: dict | None) -> DisturbanceChannel | None:
    if obj is None:
        return None
    e = np.array(obj["e_cols"], dtype=float).T
    channels = [(s["amp"], s["omega"], s["phase"]) for s in obj["signals"]]
    return DisturbanceChannel(e, channels=channels)


def nominal_report(
    design: NominalDesign,
    params: PhysicalParams,
    adaptive: dict | None = None,
    diagnostics: dict | None = None,
    digest: str | None = None,
) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": "nominal",
        "config_digest": digest,
        "params": params_to_obj(params),
        "matrices": {"q": matrix_to_obj(design.q_matrix), "p": matrix_to_obj(design.p_matrix)},
        "scalars": {"alpha": design.alpha, "rho": design.rho, "eps": design.eps},
        "adaptive": adaptive,
        "disturbance": None,
        "diagnostics": diagnostics or {},
    }


def robust_report(
    design: RobustDesign,
    params: PhysicalParams,
    disturbance: DisturbanceChannel,
    adaptive: dict | None = None,
    diagnostics: dict | None = None,
    digest: str | None = None,
) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": "robust",
        "config_digest": digest,
        "params": params_to_obj(params),
        "matrices": {
            "q_w": matrix_to_obj(design.qw_matrix),
            "p_w": matrix_to_obj(design.pw_matrix),
        },
        "scalars": {"beta": design.beta, "box": [float(x) for x in design.box.half_widths]},
        "adaptive": adaptive,
        "disturbance": disturbance_to_obj(disturbance),
        "diagnostics": diagnostics or {},
    }


def terminal_report(
    ing: TerminalIngredients,
    weights: StageWeights,
    vset: HPolytope,
    ts: float,
    params: PhysicalParams,
    diagnostics: dict | None = None,
    digest: str | None = None,
) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": "terminal",
        "config_digest": digest,
        "params": params_to_obj(params),
        "matrices": {
            "gains": matrix_to_obj(ing.gains),
            "m": matrix_to_obj(ing.m_matrix),
            "p_terminal": matrix_to_obj(ing.p_terminal),
            "q_weight": matrix_to_obj(weights.q_weight),
            "r_weight": matrix_to_obj(weights.r_weight),
            "polytope_a": matrix_to_obj(vset.a_rows),
        },
        "scalars": {"alpha_t": ing.alpha_t, "ts": ts, "polytope_b": [float(x) for x in vset.b]},
        "adaptive": None,
        "disturbance": None,
        "diagnostics": diagnostics or {},
    }


def design_from_report(report: dict):
    """Rebuild the typed design objects from a report dictionary.

    Returns (params, design) for nominal/robust reports and
    (params, ingredients, weights, vset, ts) for terminal ones.
    """
    params = params_from_obj(report["params"])
    mode = report["mode"]
    mats, scal = report["matrices"], report["scalars"]
    if mode == "nominal":
        return params, NominalDesign(
            matrix_from_obj(mats["q"]),
            matrix_from_obj(mats["p"]),
            float(scal["alpha"]),
            float(scal["rho"]),
            float(scal["eps"]),
        )
    if mode == "robust":
        return params, RobustDesign(
            matrix_from_obj(mats["q_w"]),
            matrix_from_obj(mats["p_w"]),
            float(scal["beta"]),
            Box(np.array(scal["box"], dtype=float)),
        )
    if mode == "terminal":
        ing = TerminalIngredients(
            matrix_from_obj(mats["gains"]),
            matrix_from_obj(mats["m"]),
            matrix_from_obj(mats["p_terminal"]),
            float(scal["alpha_t"]),
        )
        weights = StageWeights(matrix_from_obj(mats["q_weight"]), matrix_from_obj(mats["r_weight"]))
        vset = HPolytope(
            matrix_from_obj(mats["polytope_a"]), np.array(scal["polytope_b"], dtype=float)
        )
        return params, ing, weights, vset, float(scal["ts"])
    raise ValueError(f"unknown report mode {mode!r}")


def write_design(path, report: dict) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")


def read_design(path) -> dict:
    with open(path) as fh:
        report = json.load(fh)
    if report.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported design schema version {report.get('schema_version')}")
    return report


def to_jsonable(value: Any):
    """Recursively convert numpy scalars/arrays for json.dump."""
    if isinstance(value, dict):
        return {k: to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value
