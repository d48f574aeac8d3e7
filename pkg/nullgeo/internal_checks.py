from enum import EnumMeta

import numpy as np
import polars as pl

from .helpers.exceptions import InvalidOrderError
from .helpers.schemas import ReportColumns, TRACE_SCHEMAS, column_name_mapper


def _check_schema(df: pl.DataFrame, columns: EnumMeta) -> pl.DataFrame:
    df_schema = df.schema

    for column in columns:
        # check column is present
        if column.value.name not in df_schema:
            raise KeyError(f"Column {column.value.name} not found in DataFrame columns.")

        # check column data type
        if column.value.dtype is not None:
            if not isinstance(column.value.dtype, list):
                if df_schema[column.value.name] != column.value.dtype:
                    raise TypeError(f"Column {column.value.name} should be of type {column.value.dtype}.")
            else:
                if not any(df_schema[column.value.name] == dtype for dtype in column.value.dtype):
                    raise TypeError(f"Column {column.value.name} should be of type {column.value.dtype}.")

    return df


def check_trace_frame(df: pl.DataFrame, kind: str) -> pl.DataFrame:
    """
    | Check that a trace is a polars DataFrame with the columns of its kind and strictly increasing parameter s.

    :param df: DataFrame to be checked.
    :param kind: trace kind, one of geodesic, kernel_flow, sky, great_circle, distance.
    :return: DataFrame if it is valid.
    """

    if not isinstance(df, pl.DataFrame):
        raise TypeError("df must be a polars DataFrame")

    if kind not in TRACE_SCHEMAS:
        raise ValueError(f"Trace kind '{kind}' not found in {sorted(TRACE_SCHEMAS)}")

    df = _check_schema(df, TRACE_SCHEMAS[kind])

    # coordinate arity must match the kind
    expected = [column.value.name for column in TRACE_SCHEMAS[kind]]
    if df.columns != expected:
        raise KeyError(f"Trace of kind '{kind}' must have exactly the columns {expected}, got {df.columns}")

    if df.height > 1 and not (df["s"].diff().drop_nulls() > 0).all():
        raise ValueError("Trace samples must be strictly increasing in s")

    return df


def check_report_frame(df: pl.DataFrame) -> pl.DataFrame:
    """
    | Check a verification report's worst offender table.

    :param df: DataFrame to be checked.
    :return: DataFrame if it is valid.
    """

    if not isinstance(df, pl.DataFrame):
        raise TypeError("df must be a polars DataFrame.")

    df = _check_schema(df, ReportColumns)

    if df.height > 1 and not (df["residual"].diff().drop_nulls() <= 0).all():
        raise ValueError("Report details must be sorted by decreasing residual")
    return df


def check_column_names(df: pl.DataFrame) -> pl.DataFrame:
    """
    | Lowercase column names and map common aliases onto trace and report column names.

    :param df: polars DataFrame.
    :return: DataFrame with canonical column names.
    """

    # lowercase all column names
    df = df.rename({col: col.lower() for col in df.columns})

    # Apply the renaming map only if the column exists in the dataframe
    df = df.rename({old: new for old, new in column_name_mapper.items() if old in df.columns})

    return df


def check_order(value, name: str = "c") -> int:
    """
    | Check that a group order is a positive integer.
    """
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise InvalidOrderError(f"{name} must be a positive integer, got {value}")
    return int(value)


def check_step(h, name: str = "h") -> float:
    """
    | Check that a step size is a positive finite number.
    """
    if not isinstance(h, (int, float, np.floating)) or not np.isfinite(h) or h <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {h}")
    return float(h)


def check_samples(points, name: str = "samples") -> np.ndarray:
    """
    | Check a non-empty list of points and return it as an array of shape (n, dim).
    """
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        raise ValueError(f"{name} must not be empty")
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a list of points, got array of shape {arr.shape}")
    return arr
