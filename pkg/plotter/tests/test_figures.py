import numpy as np
import pytest

from flatsat_plot import (
    EmptyTraceError,
    FigureSpec,
    MissingChannelError,
    TraceFormatError,
    read_trace,
    render,
)
from flatsat_plot.figures import _ellipse_slice


class TestCsvReader:
    def test_reads_all_columns(self, trace_factory):
        path = trace_factory("a.csv", with_ref=True, with_dist=True)
        tr = read_trace(path)
        assert len(tr["t"]) == 60
        assert not np.isnan(tr["xr"]).any()

    def test_empty_channels_are_nan(self, trace_factory):
        tr = read_trace(trace_factory("a.csv"))
        assert np.isnan(tr["w1"]).all() and np.isnan(tr["xr"]).all()

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        with pytest.raises(EmptyTraceError):
            read_trace(p)

    def test_header_only_rejected(self, tmp_path):
        from flatsat_plot.csvio import HEADER

        p = tmp_path / "hdr.csv"
        p.write_text(",".join(HEADER) + "\n")
        with pytest.raises(EmptyTraceError):
            read_trace(p)

    def test_wrong_header_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(TraceFormatError):
            read_trace(p)


class TestRender:
    def test_lyapunov_gamma_two_panel_sweep(self, tmp_path, trace_factory, design_file, metrics_factory):
        csvs = [
            str(trace_factory(f"mu{k}.csv", gamma_slope=0.1 * k)) for k in range(4)
        ]
        metrics = metrics_factory([f"mu{k}.csv" for k in range(4)], [1.0, 3.1, 5.3, 11.7])
        out = tmp_path / "fig.png"
        spec = FigureSpec(
            "lyapunov-gamma", csvs, str(out),
            labels=[f"mu={k}" for k in range(4)],
            design=str(design_file), metrics=str(metrics),
        )
        render(spec)
        assert out.exists() and out.stat().st_size > 5000

    def test_inputs_figure(self, tmp_path, trace_factory, design_file):
        out = tmp_path / "inputs.svg"
        spec = FigureSpec(
            "inputs", [str(trace_factory("run.csv"))], str(out), design=str(design_file)
        )
        render(spec)
        assert out.exists()

    def test_phase_with_ellipse(self, tmp_path, trace_factory, design_file):
        out = tmp_path / "phase.png"
        spec = FigureSpec(
            "phase", [str(trace_factory("run.csv"))], str(out), design=str(design_file)
        )
        render(spec)
        assert out.exists()

    def test_tracking_error(self, tmp_path, trace_factory):
        out = tmp_path / "err.png"
        spec = FigureSpec(
            "tracking-error", [str(trace_factory("tr.csv", with_ref=True))], str(out)
        )
        render(spec)
        assert out.exists()

    def test_gamma_multi(self, tmp_path, trace_factory):
        csvs = [str(trace_factory(f"d{k}.csv", gamma_slope=0.2 * k)) for k in range(3)]
        out = tmp_path / "gm.png"
        render(FigureSpec("gamma-multi", csvs, str(out)))
        assert out.exists()

    def test_missing_channel_named(self, tmp_path, trace_factory):
        out = tmp_path / "err.png"
        spec = FigureSpec(
            "tracking-error", [str(trace_factory("noref.csv"))], str(out)
        )
        with pytest.raises(MissingChannelError) as exc:
            render(spec)
        assert exc.value.column == "xr"
        assert not out.exists()

    def test_empty_csv_writes_nothing(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        out = tmp_path / "fig.png"
        with pytest.raises(EmptyTraceError):
            render(FigureSpec("gamma-multi", [str(p)], str(out)))
        assert not out.exists()

    def test_byte_stable_rendering(self, tmp_path, trace_factory, design_file):
        csvs = [str(trace_factory("s.csv"))]
        out1, out2 = tmp_path / "r1.png", tmp_path / "r2.png"
        render(FigureSpec("inputs", csvs, str(out1), design=str(design_file)))
        render(FigureSpec("inputs", csvs, str(out2), design=str(design_file)))
        assert out1.read_bytes() == out2.read_bytes()

    def test_unknown_kind_rejected(self, tmp_path, trace_factory):
        with pytest.raises(ValueError):
            FigureSpec("pie", [str(trace_factory("x.csv"))], str(tmp_path / "x.png"))

    def test_label_mismatch_rejected(self, tmp_path, trace_factory):
        spec = FigureSpec(
            "gamma-multi", [str(trace_factory("x.csv"))], str(tmp_path / "x.png"),
            labels=["a", "b"],
        )
        with pytest.raises(ValueError):
            render(spec)


class TestEllipseSlice:
    def test_identity_projection_is_circle(self):
        xy = _ellipse_slice(np.eye(6), 4.0, 0, 3)
        np.testing.assert_allclose(np.linalg.norm(xy, axis=0), 2.0, atol=1e-12)

    def test_shadow_contains_state_slice(self):
        # the projection is the shadow, so it encloses the coordinate slice
        rng = np.random.default_rng(3)
        m = rng.normal(size=(6, 6))
        p = m @ m.T + 2 * np.eye(6)
        xy = _ellipse_slice(p, 1.0, 0, 3)
        quad = np.einsum("in,ij,jn->n", xy, p[np.ix_([0, 3], [0, 3])], xy)
        assert (quad >= 1.0 - 1e-9).all()
