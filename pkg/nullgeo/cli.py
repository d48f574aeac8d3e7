import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .engel_prolong import ProlongationPoint, compare_with_geodesic
from .helpers.metrics import resolve_metric
from .helpers.settings import DEFAULT_SEED, DEFAULT_SMAX, DEFAULT_STEP
from .internal_checks import check_order, check_step
from .lorentz_core import integrate_geodesic, norm_sq, null_cone_vector, trace_norm_drift
from .s2s1_model import EventPoint, UnitTangent, great_circle, sky
from .trace_handling import FORMATS, ReportFile, TraceFile, trace_frame, write_report, write_trace
from .verification import CHECKS, run_check

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got '{text}'")


def _vector(values: Optional[Sequence[float]], n: int, name: str) -> np.ndarray:
    if values is None or len(values) != n:
        raise ValueError(f"{name} needs {n} comma separated numbers, got {values}")
    return np.asarray(values, dtype=float)


def _companion(out: Path, tag: str) -> Path:
    return out.with_name(f"{out.stem}_{tag}{out.suffix}")


def _emit_trace(trace: TraceFile, out: Optional[Path], fmt: str):
    if out is None:
        print(json.dumps(trace.header(), sort_keys=True))
    else:
        write_trace(trace, out, fmt)


def cmd_geodesic(metric: str, x0, v0=None, theta: Optional[float] = None, s_max: float = DEFAULT_SMAX,
                 h: float = DEFAULT_STEP, out: Optional[Path] = None, fmt: str = "json") -> TraceFile:
    """
    | Integrate a geodesic of a chart metric and write it as a geodesic trace. The initial velocity is v0, or the
    future null vector at angle theta when v0 is not given.

    :param metric: metric id or config path.
    :param x0: initial chart point.
    :param v0: initial velocity.
    :param theta: null direction angle.
    :param s_max: final parameter.
    :param h: step.
    :param out: output file.
    :param fmt: json or csv.
    :return: TraceFile.
    """
    m = resolve_metric(metric)
    x0 = _vector(x0, 3, "x0")
    if v0 is not None:
        v0 = _vector(v0, 3, "v0")
    else:
        v0 = null_cone_vector(m, x0, 0.0 if theta is None else theta)
    h = check_step(h)

    trace = integrate_geodesic(m, x0, v0, s_max, h)
    params = {
        "x0": [float(v) for v in x0],
        "v0": [float(v) for v in v0],
        "s_max": float(s_max),
        "h": h,
        "exited": trace.exited,
        "norm_sq_initial": norm_sq(m, x0, v0),
        "norm_drift": trace_norm_drift(m, trace),
    }
    result = TraceFile("geodesic", m.metric_id, params, trace.to_frame())
    _emit_trace(result, out, fmt)
    return result


def cmd_verify(check: str, c: int = 1, n: int = 100, seed: int = DEFAULT_SEED, out: Optional[Path] = None,
               fmt: str = "json", tol: Optional[float] = None) -> ReportFile:
    """
    | Run a verification sweep and write its report.
    """
    report = run_check(check, c=c, n=n, seed=seed, tolerance=tol)
    if out is None:
        print(json.dumps(report.header(), sort_keys=True))
    else:
        write_report(report, out, fmt)
    return report


def cmd_deprolong(metric: str, x0, theta: float, s_max: float = DEFAULT_SMAX, h: float = DEFAULT_STEP,
                  out: Optional[Path] = None, fmt: str = "json") -> Tuple[TraceFile, TraceFile, TraceFile]:
    """
    | Integrate the Z-flow of a separable metric from (x0, theta) next to the null geodesic with the same initial
    direction. Writes the flow trace to out and the geodesic and the pointwise distance series next to it with the
    suffixes _geodesic and _distance.

    :param metric: metric id or config path.
    :param x0: chart point.
    :param theta: null direction angle.
    :param s_max: final parameter.
    :param h: step.
    :param out: output file for the flow trace.
    :param fmt: json or csv.
    :return: (flow, geodesic, distance) traces.
    """
    m = resolve_metric(metric)
    p0 = ProlongationPoint.make(_vector(x0, 3, "x0"), theta)
    comparison = compare_with_geodesic(m, np.array(p0), s_max, check_step(h))
    params = {
        "p0": [float(v) for v in p0],
        "s_max": float(s_max),
        "h": float(h),
        "max_distance": comparison.max_distance,
        "hausdorff": comparison.hausdorff,
        "exited": bool(comparison.flow.exited or comparison.geodesic.exited),
    }
    flow = TraceFile("kernel_flow", m.metric_id, params, comparison.flow.to_frame())
    geodesic = TraceFile("geodesic", m.metric_id, params, comparison.geodesic.to_frame())
    distance = TraceFile("distance", m.metric_id, params, comparison.distances)
    if out is None:
        print(json.dumps(params, sort_keys=True))
    else:
        write_trace(flow, out, fmt)
        write_trace(geodesic, _companion(out, "geodesic"), fmt)
        write_trace(distance, _companion(out, "distance"), fmt)
    return flow, geodesic, distance


def cmd_sky(x, t: float, c: int, n: int = 360, out: Optional[Path] = None, fmt: str = "json") -> TraceFile:
    """
    | Sample the sky of the event (x, t) at n equally spaced angles; each record holds the class representative.
    """
    c = check_order(c)
    n = check_order(n, "n")
    e = EventPoint.make(_vector(x, 3, "x"), t)
    thetas = 2.0 * math.pi * np.arange(n) / n
    values = [sky(e, c, float(theta)).rep.to_array() for theta in thetas]
    trace = TraceFile("sky", f"s2s1:c={c}", {"x": list(e.x), "t": e.t, "c": c, "n": n},
                      trace_frame("sky", thetas, np.vstack(values)))
    _emit_trace(trace, out, fmt)
    return trace


def cmd_great_circle(x, u, s_max: float = DEFAULT_SMAX, n: int = 360, out: Optional[Path] = None,
                     fmt: str = "json") -> TraceFile:
    """
    | Sample the great circle through x with direction u at n + 1 parameters in [0, s_max].
    """
    p = UnitTangent.normalized(_vector(x, 3, "x"), _vector(u, 3, "u"))
    n = check_order(n, "n")
    s = np.linspace(0.0, s_max, n + 1)
    trace = TraceFile("great_circle", "round-sphere", {"x": list(p.x), "u": list(p.u), "s_max": float(s_max)},
                      trace_frame("great_circle", s, np.vstack([great_circle(p, float(si)) for si in s])))
    _emit_trace(trace, out, fmt)
    return trace


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nullgeo", description="Null geodesics and contact structures of "
                                                                "three dimensional spacetimes")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--out", type=Path, default=None, help="output file, a header summary goes to stdout if absent")
        p.add_argument("--format", dest="fmt", choices=FORMATS, default="json")

    p = sub.add_parser("geodesic", help="integrate a geodesic of a chart metric")
    p.add_argument("--metric", required=True)
    p.add_argument("--x0", type=_floats, required=True)
    p.add_argument("--v0", type=_floats, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--smax", type=float, default=DEFAULT_SMAX)
    p.add_argument("--step", type=float, default=DEFAULT_STEP)
    common(p)

    p = sub.add_parser("verify", help="run a verification sweep")
    p.add_argument("check", help=f"one of {', '.join(sorted(CHECKS))}")
    p.add_argument("--c", type=int, default=1)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--tol", type=float, default=None, help="overrides the declared tolerance")
    common(p)

    p = sub.add_parser("deprolong", help="Z-flow of the Lorentz prolongation against the null geodesic")
    p.add_argument("--metric", required=True)
    p.add_argument("--x0", type=_floats, required=True)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--smax", type=float, default=DEFAULT_SMAX)
    p.add_argument("--step", type=float, default=DEFAULT_STEP)
    common(p)

    p = sub.add_parser("sky", help="sample the sky of an event of S^2 x S^1")
    p.add_argument("--x0", type=_floats, required=True)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--c", type=int, default=1)
    p.add_argument("--n", type=int, default=360)
    common(p)

    p = sub.add_parser("great-circle", help="sample a great circle of S^2")
    p.add_argument("--x0", type=_floats, required=True)
    p.add_argument("--v0", type=_floats, required=True)
    p.add_argument("--smax", type=float, default=DEFAULT_SMAX)
    p.add_argument("--n", type=int, default=360)
    common(p)

    return parser


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "geodesic":
        cmd_geodesic(args.metric, args.x0, args.v0, args.theta, args.smax, args.step, args.out, args.fmt)
    elif args.command == "verify":
        report = cmd_verify(args.check, args.c, args.n, args.seed, args.out, args.fmt, args.tol)
        return EXIT_PASS if report.passed else EXIT_FAIL
    elif args.command == "deprolong":
        cmd_deprolong(args.metric, args.x0, args.theta, args.smax, args.step, args.out, args.fmt)
    elif args.command == "sky":
        cmd_sky(args.x0, args.t, args.c, args.n, args.out, args.fmt)
    else:
        cmd_great_circle(args.x0, args.v0, args.smax, args.n, args.out, args.fmt)
    return EXIT_PASS


def main(argv: Optional[List[str]] = None) -> int:
    """
    | Command line entry point. Returns 0 on success or a passing check, 1 on a failing check and 2 on usage or
    configuration errors.
    """
    try:
        args = _parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_PASS

    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, stream=sys.stderr)
    try:
        return _dispatch(args)
    except (ValueError, KeyError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"nullgeo: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
