"""Green function of ``-Delta + lam`` in dimension 2 and 3.

``G(r) = K0(sqrt(lam) r) / (2 pi)`` for d = 2 and ``exp(-sqrt(lam) r) / (4 pi r)``
for d = 3.  The numba kernel :func:`green_pair` is what the radial integrator
calls; the public functions below validate input and accept arrays.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .bessel import k0k1, k0, k1
from .model import EULER_GAMMA, ParameterError
from .quadrature import graded_grid, log_gauss, singular_cell, sphere_area

R_MIN_FACTOR = 1e-10
R_MAX_FACTOR = 40.0
GRID_RATIO = 1.05


@njit(cache=True)
def green_pair(d, sqrt_lam, r):
    """``(G(r), G'(r))`` for scalar ``r > 0``."""
    if d == 3:
        e = math.exp(-sqrt_lam * r) / (4.0 * math.pi * r)
        return e, -e * (1.0 + sqrt_lam * r) / r
    kk0, kk1 = k0k1(sqrt_lam * r)
    return kk0 / (2.0 * math.pi), -sqrt_lam * kk1 / (2.0 * math.pi)


def _check(d, lam, r):
    if d not in (2, 3):
        raise ParameterError(f"dimension must be 2 or 3, got {d}")
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise ParameterError("the Green function is evaluated at r > 0 only")
    return r


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def green(d: int, lam: float, r):
    r = _check(d, lam, r)
    s = math.sqrt(lam)
    if d == 3:
        return _out(np.exp(-s * r) / (4 * math.pi * r))
    return _out(k0(s * r) / (2 * math.pi))


def green_deriv(d: int, lam: float, r):
    r = _check(d, lam, r)
    s = math.sqrt(lam)
    if d == 3:
        return _out(-np.exp(-s * r) * (1 + s * r) / (4 * math.pi * r**2))
    return _out(-s * k1(s * r) / (2 * math.pi))


def singular_part(d: int, lam: float, r):
    """Local profile of ``G`` at the origin, constant included.

    d = 2: ``-(ln(sqrt(lam) r / 2) + gamma) / (2 pi)``;
    d = 3: ``1/(4 pi r) - sqrt(lam)/(4 pi)``.
    ``G - singular_part`` vanishes at ``r = 0``, so the constant of ``u`` after
    removing ``q * singular_part`` is the same ``f(0)`` that enters ``beta``.
    """
    r = _check(d, lam, r)
    s = math.sqrt(lam)
    if d == 3:
        return _out(1 / (4 * math.pi * r) - s / (4 * math.pi))
    return _out(-(np.log(s * r / 2) + EULER_GAMMA) / (2 * math.pi))


def _default_grid(lam, r_max=None):
    s = math.sqrt(lam)
    r_max = R_MAX_FACTOR / s if r_max is None else r_max
    return graded_grid(R_MIN_FACTOR / s, r_max, GRID_RATIO)


def ball_integral(d: int, lam: float, func, r: float) -> float:
    """``int_{B_r} func(|x|) dx`` for a radial ``func`` whose singularity is at most that of ``|G|^e``, e < d/(d-2)."""
    area = sphere_area(d)
    r_min = R_MIN_FACTOR / math.sqrt(lam)
    integrand = lambda x: area * x ** (d - 1) * func(x)  # noqa: E731
    if r <= r_min:
        return singular_cell(integrand, r, kappa=_cell_rate(d, 1.0))
    grid = graded_grid(r_min, r, GRID_RATIO)
    return singular_cell(integrand, r_min, kappa=_cell_rate(d, 1.0)) + log_gauss(integrand, grid)


def _cell_rate(d, exponent):
    # r^{d-1} G^e ~ r^{kappa - 1} near the origin (logs ignored for d = 2)
    return 2.0 if d == 2 else 3.0 - exponent


def green_norm(d: int, lam: float, exponent: float) -> float:
    """``||G||_{L^exponent}``; the function is in L^e iff d = 2 or e < 3."""
    if not exponent >= 1:
        raise ParameterError("exponent must be >= 1")
    if d == 3 and exponent >= 3:
        raise ParameterError(
            f"G_lambda is not in L^{exponent}(R^3): integrability requires exponent < 3"
        )
    if not math.isfinite(exponent):
        raise ParameterError("infinite exponent: G_lambda is unbounded")
    _check(d, lam, 1.0)
    area = sphere_area(d)
    f = lambda x: area * x ** (d - 1) * green(d, lam, x) ** exponent  # noqa: E731
    grid = _default_grid(lam)
    total = singular_cell(f, grid[0], kappa=_cell_rate(d, exponent), n=16) + log_gauss(f, grid, n=6)
    return total ** (1.0 / exponent)


def flux_normalization(d: int, lam: float, r: float) -> float:
    """``-|S^{d-1}| r^{d-1} G'(r) - lam * int_{B_r} G``.

    Tends to 1 as ``r -> 0`` with error ``2 lam int_{B_r} G = O(r^2 |ln r|)``.
    Since the flux plus ``lam * int_{B_r} G`` is identically 1, the value
    tends to -1 as ``r -> infinity``.
    """
    _check(d, lam, r)
    flux = -sphere_area(d) * r ** (d - 1) * green_deriv(d, lam, r)
    mass = ball_integral(d, lam, lambda x: green(d, lam, x), r)
    return flux - lam * mass


@dataclass(frozen=True)
class GreenSamples:
    lam: float
    d: int
    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray

    def check_invariants(self) -> None:
        if not np.all(self.values > 0):
            raise AssertionError("Green function samples must be positive")
        if not np.all(np.diff(self.values) < 0):
            raise AssertionError("Green function samples must decrease")
        if not np.all(self.derivs < 0):
            raise AssertionError("Green function derivative must be negative")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "value"])
            for r, v in zip(self.grid, self.values):
                w.writerow([f"{r:.17g}", f"{v:.17g}"])


def sample_green(d: int, lam: float, grid=None) -> GreenSamples:
    grid = _default_grid(lam) if grid is None else np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ParameterError("grid must be strictly increasing")
    values = np.asarray(green(d, lam, grid), dtype=float)
    derivs = np.asarray(green_deriv(d, lam, grid), dtype=float)
    for arr in (grid, values, derivs):
        arr.setflags(write=False)
    return GreenSamples(lam, d, grid, values, derivs)
