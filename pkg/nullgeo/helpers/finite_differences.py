from typing import Callable

import numpy as np

from .settings import FD_STEP


def central_jacobian(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """
    | Central difference Jacobian of a vector valued function.

    :param f: function R^n -> R^m.
    :param x: evaluation point of shape (n,).
    :param h: step.
    :return: array J of shape (m, n) with J[a, b] = d f_a / d x_b.
    """
    x = np.asarray(x, dtype=float)
    columns = []
    for b in range(x.size):
        e = np.zeros_like(x)
        e[b] = h
        columns.append((np.asarray(f(x + e), dtype=float) - np.asarray(f(x - e), dtype=float)) / (2.0 * h))
    return np.stack(columns, axis=-1)


def central_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """
    | Central difference gradient of a scalar function.

    :param f: function R^n -> R.
    :param x: evaluation point.
    :param h: step.
    :return: gradient of shape (n,).
    """
    return central_jacobian(lambda y: np.atleast_1d(f(y)), x, h)[0]


def directional_derivative(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, d: np.ndarray,
                           h: float = FD_STEP) -> np.ndarray:
    """
    | Central difference of f along direction d.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    return (np.asarray(f(x + h * d)) - np.asarray(f(x - h * d))) / (2.0 * h)


def vector_field_bracket(X: Callable[[np.ndarray], np.ndarray], Y: Callable[[np.ndarray], np.ndarray],
                         x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """
    | Lie bracket [X, Y] = (DY) X - (DX) Y at x, each term a central difference along the other field.

    :param X: vector field.
    :param Y: vector field.
    :param x: evaluation point.
    :param h: step.
    :return: bracket vector.
    """
    x = np.asarray(x, dtype=float)
    return directional_derivative(Y, x, X(x), h) - directional_derivative(X, x, Y(x), h)
