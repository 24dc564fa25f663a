"""Figure rendering for flatsat traces.

Five figure kinds, mirroring the simulation-study plots:

* lyapunov-gamma - V(t) with the stopping threshold, gamma(t) with the
  precomputed per-run upper bounds (two panels)
* inputs         - real input (T, phi, theta) with actuation bounds and
  the virtual input components (two panels)
* phase          - (x, xdot) trajectories over the invariant-ellipsoid
  slice obtained by Schur complement of the certificate matrix
* tracking-error - per-axis position error against the recorded reference
* gamma-multi    - gamma(t) from several runs on one axis

Rendering is read-only and deterministic for fixed inputs: the Agg
backend is forced, fonts and sizes are pinned, and SVG hashing is salted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .csvio import read_trace, require_channels

matplotlib.rcParams.update(
    {
        "figure.dpi": 110,
        "savefig.dpi": 110,
        "font.size": 9,
        "svg.hashsalt": "flatsat-plot",
        "axes.grid": True,
        "grid.alpha": 0.3,
    }
)

KINDS = ("lyapunov-gamma", "inputs", "phase", "tracking-error", "gamma-multi")


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: list[str]
    output: str
    labels: list[str] | None = None
    design: str | None = None
    metrics: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.inputs:
            raise ValueError("need at least one input CSV")

    @staticmethod
    def from_json(path) -> "FigureSpec":
        with open(path) as fh:
            obj = json.load(fh)
        return FigureSpec(
            kind=obj["kind"],
            inputs=list(obj["inputs"]),
            output=obj["output"],
            labels=obj.get("labels"),
            design=obj.get("design"),
            metrics=obj.get("metrics"),
        )


def _labels(spec: FigureSpec) -> list[str]:
    if spec.labels:
        if len(spec.labels) != len(spec.inputs):
            raise ValueError("labels must match inputs one to one")
        return list(spec.labels)
    return [Path(p).stem for p in spec.inputs]


def _load_design(spec: FigureSpec) -> dict | None:
    if spec.design is None:
        return None
    with open(spec.design) as fh:
        return json.load(fh)


def _design_matrix(design: dict, *names: str) -> np.ndarray | None:
    for name in names:
        obj = design.get("matrices", {}).get(name)
        if obj is not None:
            return np.array(obj["data"], dtype=float).reshape(obj["rows"], obj["cols"])
    return None


def _gamma_bounds(spec: FigureSpec) -> dict[str, float]:
    """Map trace file name -> precomputed gain bound from metrics.json."""
    if spec.metrics is None:
        return {}
    with open(spec.metrics) as fh:
        meta = json.load(fh)
    out = {}
    for entry in meta.get("scenarios", []):
        if "gamma_bound" in entry:
            out[entry["csv"]] = float(entry["gamma_bound"])
    return out


def _ellipse_slice(p: np.ndarray, level: float, i: int, j: int, n: int = 256) -> np.ndarray:
    """Boundary of the (i, j) shadow of {x'Px <= level} via Schur complement."""
    keep = [i, j]
    rest = [k for k in range(p.shape[0]) if k not in keep]
    p_kk = p[np.ix_(keep, keep)]
    p_kr = p[np.ix_(keep, rest)]
    p_rr = p[np.ix_(rest, rest)]
    s = p_kk - p_kr @ np.linalg.solve(p_rr, p_kr.T)
    evals, evecs = np.linalg.eigh(s)
    s_inv_sqrt = evecs @ np.diag(evals**-0.5) @ evecs.T
    th = np.linspace(0, 2 * np.pi, n)
    circ = np.stack([np.cos(th), np.sin(th)])
    return np.sqrt(level) * (s_inv_sqrt @ circ)


def render(spec: FigureSpec) -> str:
    """Render the figure and return the output path.

    Traces are validated before the file is touched, so a bad input never
    leaves a partial figure behind.
    """
    labels = _labels(spec)
    traces = [read_trace(p) for p in spec.inputs]
    design = _load_design(spec)

    if spec.kind == "lyapunov-gamma":
        for tr, p in zip(traces, spec.inputs):
            require_channels(tr, ["t", "V", "gamma"], p)
        bounds = _gamma_bounds(spec)
        fig, (ax_v, ax_g) = plt.subplots(2, 1, figsize=(6.4, 5.2), sharex=True)
        for tr, lab, path in zip(traces, labels, spec.inputs):
            (line,) = ax_v.plot(tr["t"], tr["V"], label=lab)
            ax_g.plot(tr["t"], tr["gamma"], color=line.get_color(), label=lab)
            b = bounds.get(Path(path).name)
            if b is not None:
                ax_g.axhline(b, color=line.get_color(), linestyle="--", linewidth=0.9)
        v_inf = ((design or {}).get("adaptive") or {}).get("v_inf")
        if v_inf is not None:
            ax_v.axhline(v_inf, color="k", linestyle=":", linewidth=1.0, label="threshold")
        ax_v.set_ylabel("V")
        ax_g.set_ylabel("gain")
        ax_g.set_xlabel("t (s)")
        ax_v.legend(loc="upper right", fontsize=8)

    elif spec.kind == "inputs":
        for tr, p in zip(traces, spec.inputs):
            require_channels(tr, ["t", "T", "phi", "theta", "v1", "v2", "v3"], p)
        fig, (ax_u, ax_v) = plt.subplots(2, 1, figsize=(6.4, 5.2), sharex=True)
        for tr, lab in zip(traces, labels):
            ax_u.plot(tr["t"], tr["T"], label=f"{lab} thrust")
            ax_u.plot(tr["t"], tr["phi"], label=f"{lab} roll")
            ax_u.plot(tr["t"], tr["theta"], label=f"{lab} pitch")
            for k in ("v1", "v2", "v3"):
                ax_v.plot(tr["t"], tr[k], label=f"{lab} {k}")
        if design is not None:
            pars = design.get("params", {})
            if "t_max" in pars:
                ax_u.axhline(pars["t_max"], color="k", linestyle="--", linewidth=1.0)
            if "eps_max" in pars:
                ax_u.axhline(pars["eps_max"], color="r", linestyle="--", linewidth=0.9)
                ax_u.axhline(-pars["eps_max"], color="r", linestyle="--", linewidth=0.9)
        ax_u.set_ylabel("real input")
        ax_v.set_ylabel("virtual input (m/s^2)")
        ax_v.set_xlabel("t (s)")
        ax_u.legend(loc="upper right", fontsize=7, ncol=2)

    elif spec.kind == "phase":
        for tr, p in zip(traces, spec.inputs):
            require_channels(tr, ["x", "vx"], p)
        fig, ax = plt.subplots(figsize=(5.4, 5.0))
        for tr, lab in zip(traces, labels):
            ax.plot(tr["x"], tr["vx"], label=lab)
            ax.plot(tr["x"][:1], tr["vx"][:1], "o", markersize=4, color="k")
        if design is not None:
            p_mat = _design_matrix(design, "p", "p_w", "p_terminal")
            level = design.get("scalars", {}).get("eps", 1.0)
            if p_mat is not None:
                xy = _ellipse_slice(p_mat, float(level), 0, 3)
                ax.plot(xy[0], xy[1], "k--", linewidth=1.2, label="invariant set")
        ax.set_xlabel("x (m)")
        ax.set_ylabel("xdot (m/s)")
        ax.legend(loc="upper right", fontsize=8)

    elif spec.kind == "tracking-error":
        for tr, p in zip(traces, spec.inputs):
            require_channels(tr, ["t", "x", "y", "z", "xr", "yr", "zr"], p)
        fig, axes = plt.subplots(3, 1, figsize=(6.4, 6.2), sharex=True)
        for tr, lab in zip(traces, labels):
            for ax, q, qr in zip(axes, ("x", "y", "z"), ("xr", "yr", "zr")):
                ax.plot(tr["t"], tr[q] - tr[qr], label=lab)
        for ax, q in zip(axes, ("x", "y", "z")):
            ax.set_ylabel(f"e_{q} (m)")
        axes[-1].set_xlabel("t (s)")
        axes[0].legend(loc="upper right", fontsize=8)

    else:  # gamma-multi
        for tr, p in zip(traces, spec.inputs):
            require_channels(tr, ["t", "gamma"], p)
        fig, ax = plt.subplots(figsize=(6.4, 3.6))
        for tr, lab in zip(traces, labels):
            ax.plot(tr["t"], tr["gamma"], label=lab)
        ax.set_xlabel("t (s)")
        ax.set_ylabel("gain")
        ax.legend(loc="lower right", fontsize=8)

    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return spec.output
