import json

from flatsat_plot.cli import main


def test_cli_renders_figure(tmp_path, trace_factory, design_file, metrics_factory):
    csvs = [str(trace_factory(f"mu{k}.csv", gamma_slope=0.1 * k)) for k in (0, 1)]
    metrics = metrics_factory(["mu0.csv", "mu1.csv"], [1.0, 3.1])
    out = tmp_path / "sweep.png"
    spec = tmp_path / "spec.json"
    spec.write_text(
        json.dumps(
            {
                "kind": "lyapunov-gamma",
                "inputs": csvs,
                "output": str(out),
                "design": str(design_file),
                "metrics": str(metrics),
            }
        )
    )
    assert main(["--spec", str(spec)]) == 0
    assert out.exists()


def test_cli_error_exit_code(tmp_path, trace_factory):
    spec = tmp_path / "spec.json"
    spec.write_text(
        json.dumps(
            {
                "kind": "tracking-error",
                "inputs": [str(trace_factory("noref.csv"))],
                "output": str(tmp_path / "x.png"),
            }
        )
    )
    assert main(["--spec", str(spec)]) == 1
    assert not (tmp_path / "x.png").exists()


def test_cli_missing_spec_file(tmp_path):
    assert main(["--spec", str(tmp_path / "nope.json")]) == 1
