import logging
import math
from functools import lru_cache
from typing import Callable, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from polytope_em.exceptions import QuadratureError
from polytope_em.utils.reduction import pairwise_array_sum, pairwise_sum

logger = logging.getLogger(__name__)

ORDERS = (7, 15, 31, 63, 127)

# an affine upper limit: coefficients over the earlier variables, then a constant
Limit = Tuple[Tuple[float, ...], float]


@lru_cache(maxsize=None)
def unit_rule(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """ n-point Gauss-Legendre nodes and weights on [0, 1] """
    x, w = leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=None)
def composite_rule(n: int, panels: int) -> Tuple[np.ndarray, np.ndarray]:
    """ n points on each of `panels` equal subintervals of [0, 1] """
    x, w = unit_rule(n)
    starts = np.arange(panels) / panels
    nodes = (starts[:, None] + x[None, :] / panels).ravel()
    weights = np.tile(w / panels, panels)
    return nodes, weights


def nested_rule(limits: Sequence[Limit], n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Tensor Gauss-Legendre rule for the iterated integral

        int_0^{U_0} int_0^{U_1(z_0)} ... dz_{m-1} ... dz_0,

    U_p affine in z_0..z_{p-1}.

    :return: points (N, m) and weights (N,)
    """
    t, w = unit_rule(n)
    points = np.zeros((1, 0))
    weights = np.ones(1)
    for coeffs, const in limits:
        upper = const + points @ np.asarray(coeffs, dtype=float) if len(coeffs) else np.full(len(points), const)
        new_column = (upper[:, None] * t[None, :]).ravel()
        weights = (weights[:, None] * upper[:, None] * w[None, :]).ravel()
        points = np.column_stack([np.repeat(points, len(t), axis=0), new_column])
    return points, weights


def simplex_limits(d: int) -> Tuple[Limit, ...]:
    """ Limits of the standard simplex: z_p runs to 1 - (z_0 + ... + z_{p-1}) """
    return tuple(((-1.0,) * p, 1.0) for p in range(d))


def collapsed_simplex_rule(d: int, n: int, panels: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Composite rule on the standard simplex through the collapsed map
    y_p = u_p prod_{q<p} (1 - u_q) of the unit cube.
    """
    x, w = composite_rule(n, panels)
    grids = np.meshgrid(*([x] * d), indexing='ij')
    u = np.stack([g.ravel() for g in grids], axis=1)
    weight_grids = np.meshgrid(*([w] * d), indexing='ij')
    weights = np.prod(np.stack([g.ravel() for g in weight_grids], axis=1), axis=1)
    y = np.empty_like(u)
    remaining = np.ones(len(u))
    for p in range(d):
        # dy_p / du_p
        y[:, p] = u[:, p] * remaining
        weights = weights * remaining
        remaining = remaining * (1.0 - u[:, p])
    return y, weights


def integrate_interval(func: Callable[[np.ndarray], np.ndarray], a: float, b: float, tol: float,
                       breakpoints: Sequence[float] = ()) -> float:
    """
    Adaptive Gauss-Legendre on [a, b], split at the given breakpoints; the order
    doubles until two successive estimates agree to tol.
    """
    cuts = sorted({a, b} | {c for c in breakpoints if a < c < b})
    previous = None
    for n in ORDERS:
        x, w = unit_rule(n)
        pieces = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            pieces.append(pairwise_array_sum((hi - lo) * w * func(lo + (hi - lo) * x)))
        estimate = float(pairwise_sum(pieces))
        if previous is not None and abs(estimate - previous) < tol:
            return estimate
        previous = estimate
    raise QuadratureError(f"Interval quadrature on [{a}, {b}] did not reach tolerance {tol}")


def panels_for_frequency(frequency: float, n: int, nodes_per_period: int = 10) -> int:
    """ Panels per axis so that n-point panels give nodes_per_period nodes per oscillation """
    return max(1, int(math.ceil(nodes_per_period * abs(frequency) / n)))
