import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import polars as pl
from scipy.spatial import cKDTree

from .helpers.schemas import DistanceColumns, ReportColumns, TRACE_SCHEMAS
from .internal_checks import check_column_names, check_report_frame, check_trace_frame

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv")
CSV_HEADER_PREFIX = "# "


@dataclass
class TraceFile:
    """
    | Trace file content: kind, metric id, run parameters and the sample table.
    """
    kind: str
    metric_id: str
    params: Dict[str, object]
    samples: pl.DataFrame

    def header(self) -> dict:
        return {
            "kind": self.kind,
            "metric_id": self.metric_id,
            "params": self.params,
            "n_samples": self.samples.height,
            "columns": self.samples.columns,
        }


@dataclass
class ReportFile:
    """
    | Verification report: check id, sweep size, seed, declared tolerance, largest residual and pass flag, with the
    worst offenders as details.
    """
    check_id: str
    n_samples: int
    seed: int
    tolerance: float
    max_residual: float
    passed: bool
    details: pl.DataFrame
    params: Dict[str, object] = field(default_factory=dict)

    def header(self) -> dict:
        return {
            "check_id": self.check_id,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "max_residual": self.max_residual,
            "pass": self.passed,
            "params": self.params,
        }


def trace_frame(kind: str, s, values) -> pl.DataFrame:
    """
    | Build a trace DataFrame of the given kind from the parameter array and a value matrix whose columns follow the
    kind's schema after s.

    :param kind: trace kind.
    :param s: parameters of shape (n,).
    :param values: array of shape (n, k).
    :return: validated polars DataFrame.
    """
    if kind not in TRACE_SCHEMAS:
        raise ValueError(f"Trace kind '{kind}' not found in {sorted(TRACE_SCHEMAS)}")
    names = [column.value.name for column in TRACE_SCHEMAS[kind]]
    values = np.asarray(values, dtype=float).reshape(len(s), -1)
    if values.shape[1] != len(names) - 1:
        raise ValueError(f"Trace of kind '{kind}' needs {len(names) - 1} value columns, got {values.shape[1]}")
    data = {names[0]: np.asarray(s, dtype=float)}
    data.update({name: values[:, i] for i, name in enumerate(names[1:])})
    # backward integrations come out with decreasing s
    return check_trace_frame(pl.DataFrame(data, schema={name: pl.Float64 for name in names}).sort("s"), kind)


def report_details(points: List, residuals, top: int = 10) -> pl.DataFrame:
    """
    | Worst offender table: the top residuals in decreasing order with their sample points.

    :param points: one point (sequence of numbers) per sample.
    :param residuals: residual per sample.
    :param top: number of records kept.
    :return: polars DataFrame following ReportColumns.
    """
    residuals = np.asarray(residuals, dtype=float)
    # stable order so ties keep sample order
    order = np.argsort(-residuals, kind="stable")[:top]
    df = pl.DataFrame(
        {
            ReportColumns.RANK.value.name: np.arange(len(order), dtype=np.int64),
            ReportColumns.RESIDUAL.value.name: residuals[order],
            ReportColumns.POINT.value.name: [json.dumps([float(v) for v in np.ravel(points[i])]) for i in order],
        },
        schema={
            ReportColumns.RANK.value.name: pl.Int64,
            ReportColumns.RESIDUAL.value.name: pl.Float64,
            ReportColumns.POINT.value.name: pl.String,
        },
    )
    return check_report_frame(df)


def build_report(check_id: str, points: List, residuals, tolerance: float, seed: int,
                 params: Optional[dict] = None) -> ReportFile:
    """
    | Aggregate per-sample residuals into a ReportFile; pass holds iff the largest residual is below tolerance.
    """
    residuals = np.asarray(residuals, dtype=float)
    max_residual = float(np.max(residuals)) if residuals.size else 0.0
    report = ReportFile(
        check_id=check_id,
        n_samples=int(residuals.size),
        seed=int(seed),
        tolerance=float(tolerance),
        max_residual=max_residual,
        passed=bool(max_residual < tolerance),
        details=report_details(points, residuals),
        params=params or {},
    )
    logger.info(f"Check {check_id}: n={report.n_samples} max residual={max_residual:.3e} "
                f"tol={tolerance:.1e} pass={report.passed}")
    return report


def recompute_pass(header: dict, details: pl.DataFrame) -> bool:
    """
    | Pass flag recomputed from a report's own details and declared tolerance.
    """
    details = check_report_frame(details)
    if details.height == 0:
        return True
    return bool(details[ReportColumns.RESIDUAL.value.name].max() < header["tolerance"])


def _dump_header(header: dict) -> str:
    return json.dumps(header, sort_keys=True, separators=(",", ":"))


def _write(header: dict, df: pl.DataFrame, path, fmt: str) -> Path:
    if fmt not in FORMATS:
        raise ValueError(f"Format '{fmt}' not found in {FORMATS}")
    path = Path(path)
    buffer = io.StringIO()
    if fmt == "json":
        buffer.write(_dump_header(header) + "\n")
        if df.height:
            buffer.write(df.write_ndjson())
    else:
        buffer.write(CSV_HEADER_PREFIX + _dump_header(header) + "\n")
        buffer.write(df.write_csv())
    path.write_text(buffer.getvalue())
    return path


def write_trace(trace: TraceFile, path, fmt: str = "json") -> Path:
    """
    | Write a trace file: one header object followed by one record per sample (json), or a commented header line
    followed by a CSV table (csv).

    :param trace: TraceFile.
    :param path: output file.
    :param fmt: json or csv.
    :return: path written.
    """
    check_trace_frame(trace.samples, trace.kind)
    return _write(trace.header(), trace.samples, path, fmt)


def write_report(report: ReportFile, path, fmt: str = "json") -> Path:
    """
    | Write a report file in the same layout as trace files.
    """
    check_report_frame(report.details)
    return _write(report.header(), report.details, path, fmt)


def _read(path) -> Tuple[dict, pl.DataFrame]:
    text = Path(path).read_text()
    first, _, rest = text.partition("\n")
    if first.startswith(CSV_HEADER_PREFIX):
        header = json.loads(first[len(CSV_HEADER_PREFIX):])
        df = pl.read_csv(io.BytesIO(rest.encode())) if rest.strip() else pl.DataFrame()
    else:
        header = json.loads(first)
        df = pl.read_ndjson(io.BytesIO(rest.encode())) if rest.strip() else pl.DataFrame()
    return header, check_column_names(df)


def load_trace(path) -> TraceFile:
    """
    | Read a trace file written by write_trace, in either format.

    :param path: file path.
    :return: TraceFile with a validated sample table.
    """
    header, df = _read(path)
    kind = header["kind"]
    names = [column.value.name for column in TRACE_SCHEMAS[kind]]
    if df.height == 0:
        df = pl.DataFrame(schema={name: pl.Float64 for name in names})
    df = df.select([pl.col(name).cast(pl.Float64) for name in names])
    return TraceFile(kind, header["metric_id"], header.get("params", {}), check_trace_frame(df, kind))


def load_report(path) -> ReportFile:
    """
    | Read a report file written by write_report.
    """
    header, df = _read(path)
    if df.height == 0:
        df = pl.DataFrame(schema={"rank": pl.Int64, "residual": pl.Float64, "point": pl.String})
    df = df.with_columns(pl.col("rank").cast(pl.Int64), pl.col("residual").cast(pl.Float64),
                         pl.col("point").cast(pl.String))
    return ReportFile(
        check_id=header["check_id"],
        n_samples=header["n_samples"],
        seed=header["seed"],
        tolerance=header["tolerance"],
        max_residual=header["max_residual"],
        passed=header["pass"],
        details=check_report_frame(df),
        params=header.get("params", {}),
    )


def pointwise_distance(a: pl.DataFrame, b: pl.DataFrame, columns: List[str]) -> pl.DataFrame:
    """
    | Euclidean distance between two traces at their common parameters, joining on s.

    :param a: first trace.
    :param b: second trace.
    :param columns: coordinate columns compared.
    :return: DataFrame following DistanceColumns.
    """
    joined = a.select(["s", *columns]).join(b.select(["s", *columns]), on="s", how="inner", suffix="_b")
    if joined.height == 0:
        raise ValueError("Traces share no parameter values")
    sq = sum((pl.col(c) - pl.col(f"{c}_b")) ** 2 for c in columns)
    out = joined.select(pl.col("s"), sq.sqrt().alias(DistanceColumns.DISTANCE.value.name)).sort("s")
    return check_trace_frame(out, "distance")


def _polyline_distances(points: np.ndarray, polyline: np.ndarray) -> np.ndarray:
    # nearest vertex, then the two segments touching it
    tree = cKDTree(polyline)
    _, idx = tree.query(points)
    best = np.linalg.norm(points - polyline[idx], axis=1)
    for shift in (-1, 1):
        j = idx + shift
        ok = (j >= 0) & (j < len(polyline))
        a = polyline[idx[ok]]
        b = polyline[j[ok]]
        p = points[ok]
        ab = b - a
        t = np.clip(np.einsum("ij,ij->i", p - a, ab) / np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300), 0.0, 1.0)
        d = np.linalg.norm(p - (a + t[:, None] * ab), axis=1)
        best[ok] = np.minimum(best[ok], d)
    return best


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    """
    | Symmetric Hausdorff distance between the images of two sampled curves, each treated as a polyline.

    :param a: points of shape (n, k).
    :param b: points of shape (m, k).
    :return: distance.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(max(np.max(_polyline_distances(a, b)), np.max(_polyline_distances(b, a))))
