import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np

from .exceptions import DomainError

logger = logging.getLogger(__name__)


def rk4_step(rhs: Callable[[np.ndarray], np.ndarray], y: np.ndarray, dt: float) -> np.ndarray:
    """
    | One classical fourth order Runge-Kutta step of an autonomous system.

    :param rhs: right hand side y -> dy/ds.
    :param y: current state.
    :param dt: signed step.
    :return: state after the step.
    """
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_integrate(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    s_end: float,
    h: float,
    inside: Optional[Callable[[np.ndarray], bool]] = None,
) -> Tuple[np.ndarray, np.ndarray, bool]:
    """
    | Fixed step RK4 from s = 0 to s = s_end. The step is shrunk so that an integer number of steps lands on s_end;
    a negative s_end integrates backwards.

    | Integration stops at the last accepted state when a stage raises DomainError or when the new state fails the
    inside test. The trace is then truncated and the exit flag is set.

    :param rhs: right hand side y -> dy/ds.
    :param y0: initial state.
    :param s_end: final parameter value, may be negative.
    :param h: positive nominal step.
    :param inside: optional predicate telling whether a state lies in the domain.
    :return: (parameters of shape (k,), states of shape (k, n), exited flag).
    """
    if not h > 0:
        raise ValueError(f"Step h must be positive, got {h}")
    if not math.isfinite(s_end):
        raise ValueError(f"s_end must be finite, got {s_end}")

    y = np.asarray(y0, dtype=float).copy()
    n_steps = int(math.ceil(abs(s_end) / h - 1e-9)) if s_end != 0 else 0
    dt = s_end / n_steps if n_steps > 0 else 0.0

    params = np.empty(n_steps + 1)
    states = np.empty((n_steps + 1, y.size))
    params[0] = 0.0
    states[0] = y
    exited = False
    k = 0
    for k in range(1, n_steps + 1):
        try:
            y_next = rk4_step(rhs, y, dt)
        except DomainError:
            exited = True
        else:
            if not np.all(np.isfinite(y_next)) or (inside is not None and not inside(y_next)):
                exited = True
        if exited:
            k -= 1
            break
        y = y_next
        params[k] = k * dt
        states[k] = y

    if exited:
        logger.warning(f"Integration left the domain at s = {params[k]:.6g} after {k} of {n_steps} steps")
    else:
        logger.debug(f"Integrated {n_steps} steps of size {dt:.3g}")

    return params[: k + 1], states[: k + 1], exited
