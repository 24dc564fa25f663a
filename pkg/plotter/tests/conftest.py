import json

import numpy as np
import pytest

HEADER = "t,x,y,z,vx,vy,vz,v1,v2,v3,T,phi,theta,V,gamma,lambda,w1,w2,xr,yr,zr,sat_active"


def synth_trace_csv(path, n=60, with_ref=False, with_dist=False, gamma_slope=0.1):
    """Write a schema-conformant synthetic trace."""
    ts = np.linspace(0.0, 0.1 * (n - 1), n)
    rows = []
    for k, t in enumerate(ts):
        x = np.exp(-0.6 * t)
        cells = [
            t, x, 0.8 * x, 0.5 * x, -0.6 * x, -0.5 * x, -0.3 * x,
            -0.7 * x, 0.9 * x, -0.1 * x,
            9.81 + 0.3 * x, 0.05 * x, -0.04 * x,
            2.4 * np.exp(-1.2 * t), 1.0 + gamma_slope * min(t, 2.0), 1.0,
        ]
        cells = [repr(float(c)) for c in cells]
        cells += ([repr(float(0.5 * np.sin(t))), repr(0.3)] if with_dist else ["", ""])
        cells += (
            [repr(float(x - 0.01)), repr(float(0.8 * x + 0.01)), repr(float(0.5 * x))]
            if with_ref
            else ["", "", ""]
        )
        cells += ["0" if k % 3 else "1"]
        rows.append(",".join(cells))
    path.write_text(HEADER + "\n" + "\n".join(rows) + "\n")
    return path


def synth_design_json(path):
    p2 = np.array([[0.864, 0.72], [0.72, 1.2]])
    p = np.zeros((6, 6))
    for i in range(3):
        p[i, i] = p2[0, 0]
        p[i, 3 + i] = p[3 + i, i] = p2[0, 1]
        p[3 + i, 3 + i] = p2[1, 1]
    report = {
        "schema_version": 1,
        "mode": "nominal",
        "config_digest": "0" * 64,
        "params": {"g": 9.81, "t_max": 14.2245, "eps_max": 0.1745329},
        "matrices": {
            "q": {"rows": 6, "cols": 6, "data": list(np.linalg.inv(p).ravel())},
            "p": {"rows": 6, "cols": 6, "data": list(p.ravel())},
        },
        "scalars": {"alpha": 1.2, "rho": 2.9019, "eps": 2.4182},
        "adaptive": {"gamma0": 1.0, "mu": 2.0, "v_inf": 0.05},
        "disturbance": None,
        "diagnostics": {},
    }
    path.write_text(json.dumps(report))
    return path


def synth_metrics_json(path, csv_names, bounds):
    meta = {
        "design_digest": "0" * 64,
        "scenarios": [
            {"name": n.rsplit(".", 1)[0], "csv": n, "mode": "stabilize-adaptive",
             "gamma_bound": b, "metrics": {}}
            for n, b in zip(csv_names, bounds)
        ],
    }
    path.write_text(json.dumps(meta))
    return path


@pytest.fixture
def trace_factory(tmp_path):
    def make(name, **kw):
        return synth_trace_csv(tmp_path / name, **kw)

    return make


@pytest.fixture
def design_file(tmp_path):
    return synth_design_json(tmp_path / "design.json")


@pytest.fixture
def metrics_factory(tmp_path):
    def make(csv_names, bounds):
        return synth_metrics_json(tmp_path / "metrics.json", csv_names, bounds)

    return make
