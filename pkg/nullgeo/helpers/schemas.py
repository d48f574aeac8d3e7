from collections import namedtuple
from enum import Enum

import polars as pl

# Define named tuple with dtype defaulting to None
ColumnInfo = namedtuple('ColumnInfo', ['name', 'dtype'])
ColumnInfo.__new__.__defaults__ = (None,)


class GeodesicColumns(Enum):
    """
    | Columns of a geodesic trace: parameter, chart point and velocity.
    """
    S = ColumnInfo(name='s', dtype=pl.Float64)
    X1 = ColumnInfo(name='x1', dtype=pl.Float64)
    X2 = ColumnInfo(name='x2', dtype=pl.Float64)
    X3 = ColumnInfo(name='x3', dtype=pl.Float64)
    V1 = ColumnInfo(name='v1', dtype=pl.Float64)
    V2 = ColumnInfo(name='v2', dtype=pl.Float64)
    V3 = ColumnInfo(name='v3', dtype=pl.Float64)


class KernelFlowColumns(Enum):
    """
    | Columns of a kernel flow trace on the prolongation chart. theta is reduced to [0, 2 pi).
    """
    S = ColumnInfo(name='s', dtype=pl.Float64)
    X1 = ColumnInfo(name='x1', dtype=pl.Float64)
    X2 = ColumnInfo(name='x2', dtype=pl.Float64)
    X3 = ColumnInfo(name='x3', dtype=pl.Float64)
    THETA = ColumnInfo(name='theta', dtype=pl.Float64)
    THETA_UNWRAPPED = ColumnInfo(name='theta_unwrapped', dtype=pl.Float64)


class SkyColumns(Enum):
    """
    | Columns of a sky trace: sky angle and the canonical representative (x, u) of each class.
    """
    S = ColumnInfo(name='s', dtype=pl.Float64)
    X1 = ColumnInfo(name='x1', dtype=pl.Float64)
    X2 = ColumnInfo(name='x2', dtype=pl.Float64)
    X3 = ColumnInfo(name='x3', dtype=pl.Float64)
    U1 = ColumnInfo(name='u1', dtype=pl.Float64)
    U2 = ColumnInfo(name='u2', dtype=pl.Float64)
    U3 = ColumnInfo(name='u3', dtype=pl.Float64)


class GreatCircleColumns(Enum):
    """
    | Columns of a great circle trace on the unit sphere.
    """
    S = ColumnInfo(name='s', dtype=pl.Float64)
    Y1 = ColumnInfo(name='y1', dtype=pl.Float64)
    Y2 = ColumnInfo(name='y2', dtype=pl.Float64)
    Y3 = ColumnInfo(name='y3', dtype=pl.Float64)


class DistanceColumns(Enum):
    """
    | Pointwise distance series between two traces sharing the parameter grid.
    """
    S = ColumnInfo(name='s', dtype=pl.Float64)
    DISTANCE = ColumnInfo(name='distance', dtype=pl.Float64)


class ReportColumns(Enum):
    """
    | Worst offender records of a verification report, point encoded as a JSON array.
    """
    RANK = ColumnInfo(name='rank', dtype=[pl.Int64, pl.Int32])
    RESIDUAL = ColumnInfo(name='residual', dtype=pl.Float64)
    POINT = ColumnInfo(name='point', dtype=pl.String)


TRACE_SCHEMAS = {
    "geodesic": GeodesicColumns,
    "kernel_flow": KernelFlowColumns,
    "sky": SkyColumns,
    "great_circle": GreatCircleColumns,
    "distance": DistanceColumns,
}

column_name_mapper = {
    "param": "s",
    "parameter": "s",
    "th": "theta",
    "theta_unwrap": "theta_unwrapped",
    "err": "distance",
    "dist": "distance",
    "res": "residual",
}
