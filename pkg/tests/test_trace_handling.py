import json

import numpy as np
import pytest

from nullgeo.trace_handling import ReportFile, TraceFile, build_report, hausdorff_distance, load_report, \
    load_trace, pointwise_distance, recompute_pass, report_details, trace_frame, write_report, write_trace


def circle_trace(n: int = 9) -> TraceFile:
    s = np.linspace(0.0, 2.0, n)
    values = np.column_stack([np.cos(s), np.sin(s), np.zeros(n)])
    return TraceFile("great_circle", "round-sphere", {"x": [1.0, 0.0, 0.0], "u": [0.0, 1.0, 0.0], "s_max": 2.0},
                     trace_frame("great_circle", s, values))


@pytest.mark.records
class TestTraceFrames:
    def test_trace_frame(self):
        df = trace_frame("distance", [2.0, 1.0, 0.0], [[0.2], [0.1], [0.0]])
        assert df.columns == ["s", "distance"]
        assert df["s"].to_list() == [0.0, 1.0, 2.0]
        assert df["distance"].to_list() == [0.0, 0.1, 0.2]

        with pytest.raises(ValueError):
            trace_frame("photon", [0.0], [[0.0]])
        with pytest.raises(ValueError):
            trace_frame("geodesic", [0.0, 1.0], np.zeros((2, 5)))

    def test_report_details(self):
        residuals = [0.1, 0.5, 0.5, 0.0]
        points = [[0.0], [1.0], [2.0], [3.0]]
        df = report_details(points, residuals, top=3)
        assert df["rank"].to_list() == [0, 1, 2]
        assert df["residual"].to_list() == [0.5, 0.5, 0.1]

        # ties keep sample order
        assert df["point"].to_list() == ["[1.0]", "[2.0]", "[0.0]"]

    def test_build_report(self):
        report = build_report("cone", [[0.0], [1.0]], [1e-9, 2e-9], 1e-8, 7, {"c": 2})
        assert report.passed
        assert report.max_residual == 2e-9
        assert report.n_samples == 2
        assert report.header() == {"check_id": "cone", "n_samples": 2, "seed": 7, "tolerance": 1e-8,
                                   "max_residual": 2e-9, "pass": True, "params": {"c": 2}}

        # pass is strict
        assert not build_report("cone", [[0.0]], [1e-8], 1e-8, 0).passed

    def test_recompute_pass(self):
        report = build_report("minkowski", [[0.0], [1.0], [2.0]], [0.0, 3e-7, 2e-6], 1e-6, 0)
        assert not report.passed
        assert recompute_pass(report.header(), report.details) == report.passed

        header = dict(report.header(), tolerance=1e-5)
        assert recompute_pass(header, report.details)


@pytest.mark.records
class TestTraceFiles:
    @pytest.mark.parametrize("fmt", ["json", "csv"])
    def test_trace_files(self, tmp_path, fmt):
        trace = circle_trace()
        path = write_trace(trace, tmp_path / f"circle.{fmt}", fmt)
        loaded = load_trace(path)
        assert loaded.kind == "great_circle"
        assert loaded.metric_id == "round-sphere"
        assert loaded.params == trace.params
        assert loaded.samples.columns == trace.samples.columns
        assert np.array_equal(loaded.samples.to_numpy(), trace.samples.to_numpy())

    def test_json_layout(self, tmp_path):
        trace = circle_trace(3)
        lines = write_trace(trace, tmp_path / "circle.json").read_text().splitlines()
        assert len(lines) == 4
        header = json.loads(lines[0])
        assert header["kind"] == "great_circle"
        assert header["n_samples"] == 3
        assert header["columns"] == ["s", "y1", "y2", "y3"]
        assert json.loads(lines[1]) == {"s": 0.0, "y1": 1.0, "y2": 0.0, "y3": 0.0}

    def test_csv_layout(self, tmp_path):
        lines = write_trace(circle_trace(3), tmp_path / "circle.csv", "csv").read_text().splitlines()
        assert lines[0].startswith("# {")
        assert lines[1] == "s,y1,y2,y3"
        assert len(lines) == 5

    def test_determinism(self, tmp_path):
        a = write_trace(circle_trace(), tmp_path / "a.json").read_bytes()
        b = write_trace(circle_trace(), tmp_path / "b.json").read_bytes()
        assert a == b

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            write_trace(circle_trace(), tmp_path / "circle.txt", "txt")

    @pytest.mark.parametrize("fmt", ["json", "csv"])
    def test_report_files(self, tmp_path, fmt):
        report = build_report("cone", [[0.0, 1.0], [1.0, 2.0], [2.0, 3.0]], [1e-9, 5e-9, 0.0], 1e-8, 3, {"c": 1})
        loaded = load_report(write_report(report, tmp_path / f"report.{fmt}", fmt))
        assert isinstance(loaded, ReportFile)
        assert loaded.header() == report.header()
        assert loaded.details["point"].to_list() == ["[1.0, 2.0]", "[0.0, 1.0]", "[2.0, 3.0]"]
        assert loaded.details["residual"].to_list() == [5e-9, 1e-9, 0.0]
        assert recompute_pass(loaded.header(), loaded.details) == loaded.passed


@pytest.mark.records
class TestDistances:
    def test_pointwise_distance(self):
        a = trace_frame("great_circle", [0.0, 1.0, 2.0], [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        b = trace_frame("great_circle", [1.0, 2.0, 3.0], [[1.0, 3.0, 4.0], [2.0, 0.0, 0.0], [9.0, 9.0, 9.0]])
        df = pointwise_distance(a, b, ["y1", "y2", "y3"])
        assert df["s"].to_list() == [1.0, 2.0]
        assert df["distance"].to_list() == [5.0, 0.0]

        c = trace_frame("great_circle", [5.0], [[0.0, 0.0, 0.0]])
        with pytest.raises(ValueError):
            pointwise_distance(a, c, ["y1", "y2", "y3"])

    def test_hausdorff_distance(self):
        line = np.column_stack([np.linspace(0.0, 1.0, 11), np.zeros(11)])
        coarse = np.array([[0.0, 0.0], [1.0, 0.0]])
        assert hausdorff_distance(line, coarse) == pytest.approx(0.0, abs=1e-15)

        shifted = line + np.array([0.0, 0.25])
        assert hausdorff_distance(line, shifted) == pytest.approx(0.25, abs=1e-15)

        # the longer curve sticks out by its extra length
        longer = np.column_stack([np.linspace(0.0, 1.5, 16), np.zeros(16)])
        assert hausdorff_distance(line, longer) == pytest.approx(0.5, abs=1e-12)
