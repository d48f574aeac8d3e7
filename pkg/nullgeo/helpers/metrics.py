import math
import re
from pathlib import Path
from typing import Callable, Dict, NamedTuple

import numpy as np

from ..internal_checks import check_order
from ..lorentz_core import UNBOUNDED, DiagonalMetric
from .exceptions import MetricConfigError
from .metric_config import load_metric

# spatial half width of the stereographic chart and half length of its time axis
STEREO_RADIUS = 10.0
TIME_EXTENT = 1.0e3


def minkowski3() -> DiagonalMetric:
    """
    | Flat metric dx1^2 + dx2^2 - dx3^2.
    """
    return DiagonalMetric(
        g11=lambda x: 1.0,
        g22=lambda x: 1.0,
        g33=lambda x: -1.0,
        partials=lambda x: np.zeros((3, 3)),
        separable=True,
        domain=UNBOUNDED,
        metric_id="minkowski3",
    )


def _conformal(x: np.ndarray) -> float:
    return 4.0 / (1.0 + x[0] * x[0] + x[1] * x[1]) ** 2


def _conformal_partials(x: np.ndarray) -> np.ndarray:
    q = (1.0 + x[0] * x[0] + x[1] * x[1]) ** 3
    dg = np.zeros((3, 3))
    dg[0, 0] = dg[1, 0] = -16.0 * x[0] / q
    dg[0, 1] = dg[1, 1] = -16.0 * x[1] / q
    return dg


def stereographic_gc(c: int) -> DiagonalMetric:
    """
    | The metric round(S^2) - dt^2 / c^2 of S^2 x S^1 in the stereographic chart of S^2 from the north pole,
    g11 = g22 = 4 / (1 + x1^2 + x2^2)^2 and g33 = -1 / c^2. The time coordinate x3 is unwrapped.

    :param c: positive integer.
    :return: separable DiagonalMetric.
    """
    c = check_order(c)
    g33 = -1.0 / (c * c)
    return DiagonalMetric(
        g11=_conformal,
        g22=_conformal,
        g33=lambda x: g33,
        partials=_conformal_partials,
        separable=True,
        domain=((-STEREO_RADIUS, STEREO_RADIUS), (-STEREO_RADIUS, STEREO_RADIUS), (-TIME_EXTENT, TIME_EXTENT)),
        metric_id=f"s2s1:c={int(c)}",
    )


def round_sphere() -> DiagonalMetric:
    """
    | Round sphere in the stereographic chart with g33 = -1, the case c = 1.
    """
    m = stereographic_gc(1)
    return DiagonalMetric(m.g11, m.g22, m.g33, partials=m.partials, separable=True, domain=m.domain,
                          metric_id="round-sphere")


def _lapse(x: np.ndarray) -> float:
    return 1.0 + 0.25 * math.sin(x[2])


def warped_time() -> DiagonalMetric:
    """
    | Separable metric with a time dependent g33, round sphere spatial part and g33 = -(1 + sin(x3) / 4)^2.
    """
    def partials(x: np.ndarray) -> np.ndarray:
        dg = _conformal_partials(x)
        dg[2, 2] = -0.5 * _lapse(x) * math.cos(x[2])
        return dg

    return DiagonalMetric(
        g11=_conformal,
        g22=_conformal,
        g33=lambda x: -_lapse(x) ** 2,
        partials=partials,
        separable=True,
        domain=((-STEREO_RADIUS, STEREO_RADIUS), (-STEREO_RADIUS, STEREO_RADIUS), (-TIME_EXTENT, TIME_EXTENT)),
        metric_id="warped-time",
    )


def tilted_conformal() -> DiagonalMetric:
    """
    | Non separable metric, g11 = g22 = exp(x1 x3 / 4) and g33 = -(1 + x1^2 / 10), for the general kernel formula.
    """
    def partials(x: np.ndarray) -> np.ndarray:
        e = math.exp(0.25 * x[0] * x[2])
        dg = np.zeros((3, 3))
        dg[0, 0] = dg[1, 0] = 0.25 * x[2] * e
        dg[0, 2] = dg[1, 2] = 0.25 * x[0] * e
        dg[2, 0] = -0.2 * x[0]
        return dg

    return DiagonalMetric(
        g11=lambda x: math.exp(0.25 * x[0] * x[2]),
        g22=lambda x: math.exp(0.25 * x[0] * x[2]),
        g33=lambda x: -(1.0 + 0.1 * x[0] * x[0]),
        partials=partials,
        separable=False,
        domain=((-3.0, 3.0), (-3.0, 3.0), (-3.0, 3.0)),
        metric_id="tilted-conformal",
    )


class MetricEntry(NamedTuple):
    builder: Callable[[], DiagonalMetric]
    description: str


METRICS: Dict[str, MetricEntry] = {
    "minkowski3": MetricEntry(minkowski3, "flat dx1^2 + dx2^2 - dx3^2"),
    "round-sphere": MetricEntry(round_sphere, "stereographic round sphere, g33 = -1"),
    "warped-time": MetricEntry(warped_time, "stereographic round sphere, g33 = -(1 + sin(x3) / 4)^2"),
    "tilted-conformal": MetricEntry(tilted_conformal, "non separable conformal metric"),
}

_S2S1 = re.compile(r"^s2s1:c=(\d+)$")


def resolve_metric(metric_id: str) -> DiagonalMetric:
    """
    | Metric for an id: a registered name, s2s1:c=<n>, file:<path>, or the path of a JSON config file.

    :param metric_id: metric id.
    :return: DiagonalMetric.
    """
    if not isinstance(metric_id, str):
        raise TypeError("metric_id must be a string")

    if metric_id in METRICS:
        return METRICS[metric_id].builder()

    match = _S2S1.match(metric_id)
    if match:
        return stereographic_gc(int(match.group(1)))

    if metric_id.startswith("file:"):
        return load_metric(metric_id[len("file:"):])

    if metric_id.endswith(".json") and Path(metric_id).is_file():
        return load_metric(metric_id)

    raise MetricConfigError(
        f"Unknown metric '{metric_id}'. Use one of {sorted(METRICS)}, s2s1:c=<n>, file:<path> or a .json config"
    )
