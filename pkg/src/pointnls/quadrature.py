"""Radial grids and quadrature rules shared by the solvers."""

import math

import numpy as np

_LAGUERRE = {}
_LEGENDRE = {}


def sphere_area(d: int) -> float:
    """``|S^{d-1}|``."""
    return 2 * math.pi if d == 2 else 4 * math.pi


def laguerre_rule(n: int = 8):
    if n not in _LAGUERRE:
        _LAGUERRE[n] = np.polynomial.laguerre.laggauss(n)
    return _LAGUERRE[n]


def legendre_rule(n: int = 4):
    if n not in _LEGENDRE:
        _LEGENDRE[n] = np.polynomial.legendre.leggauss(n)
    return _LEGENDRE[n]


def graded_grid(r_min: float, r_max: float, ratio: float = 1.05, h_max: float | None = None):
    """Geometric grid from ``r_min`` that turns uniform once the spacing reaches ``h_max``."""
    if not 0 < r_min < r_max:
        raise ValueError("need 0 < r_min < r_max")
    if h_max is None:
        n = int(math.ceil(math.log(r_max / r_min) / math.log(ratio)))
        return np.geomspace(r_min, r_max, n + 1)
    r_switch = h_max / (ratio - 1.0)
    if r_switch <= r_min:
        n = int(math.ceil((r_max - r_min) / h_max))
        return np.linspace(r_min, r_max, n + 1)
    if r_switch >= r_max:
        return graded_grid(r_min, r_max, ratio)
    n_geo = int(math.ceil(math.log(r_switch / r_min) / math.log(ratio)))
    geo = np.geomspace(r_min, r_switch, n_geo + 1)
    n_uni = int(math.ceil((r_max - r_switch) / h_max))
    uni = np.linspace(r_switch, r_max, n_uni + 1)
    return np.concatenate([geo, uni[1:]])


def singular_cell(func, r1: float, kappa: float, n: int = 8) -> float:
    """``int_0^r1 func(r) dr`` for integrands behaving like ``r^(kappa-1)`` (times logs).

    Substitutes ``r = r1 exp(-t)`` and applies ``n``-point Gauss-Laguerre with
    weight ``exp(-kappa t)``; ``func`` must accept arrays.
    """
    if not kappa > 0:
        raise ValueError("integrand is not integrable at the origin (kappa <= 0)")
    s, w = laguerre_rule(n)
    t = s / kappa
    r = r1 * np.exp(-t)
    return float(r1 / kappa * np.sum(w * func(r) * np.exp((kappa - 1.0) * t)))


def log_gauss(func, grid, n: int = 4) -> float:
    """``int func(r) dr`` over ``[grid[0], grid[-1]]``, Gauss-Legendre per cell in ``log r``."""
    x, w = legendre_rule(n)
    lo = np.log(grid[:-1])[:, None]
    hi = np.log(grid[1:])[:, None]
    t = 0.5 * (hi + lo) + 0.5 * (hi - lo) * x[None, :]
    r = np.exp(t)
    vals = func(r) * r
    return float(np.sum(0.5 * (hi - lo) * w[None, :] * vals))


def cell_measures(nodes, d: int):
    """Measure ``|S^{d-1}| int r^{d-1} dr`` of every cell between consecutive nodes."""
    nodes = np.asarray(nodes, dtype=float)
    return sphere_area(d) * (nodes[1:] ** d - nodes[:-1] ** d) / d


def lumped_weights(nodes, d: int):
    """Nodal weights obtained by splitting each cell measure equally between its ends."""
    cells = cell_measures(nodes, d)
    w = np.zeros(len(nodes))
    w[:-1] += 0.5 * cells
    w[1:] += 0.5 * cells
    return w
