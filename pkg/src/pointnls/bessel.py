"""Modified Bessel functions K0 and K1 of real positive argument.

Power series around the origin for ``x <= 2`` and Steed's continued
fraction (Temme's CF2) for ``x > 2``.  Both branches are accurate to a few
ulps, so the switch at ``x = 2`` is seamless.  The scalar kernels are
compiled with numba so that the ODE right-hand side can call them.
"""

import math

import numpy as np
from numba import njit, vectorize

EULER_GAMMA = 0.57721566490153286061
SWITCH = 2.0
_EPS = 1e-17
_MAXIT = 200


@njit(cache=True)
def _series(x):
    # K0 and K1 from the ascending series
    t = 0.25 * x * x
    lg = math.log(0.5 * x)
    # k = 0 terms
    a0 = 1.0  # t^k / (k!)^2
    a1 = 1.0  # t^k / (k! (k+1)!)
    h = 0.0  # harmonic number H_k
    i0 = 1.0
    s0 = 0.0
    i1 = 1.0
    s1 = 1.0 - 2.0 * EULER_GAMMA  # psi(1) + psi(2) = -2 gamma + 1
    for k in range(1, 60):
        a0 *= t / (k * k)
        a1 *= t / (k * (k + 1))
        h += 1.0 / k
        i0 += a0
        s0 += a0 * h
        i1 += a1
        s1 += a1 * (2.0 * h + 1.0 / (k + 1) - 2.0 * EULER_GAMMA)
        if a0 * (1.0 + h) < _EPS * i0 and a1 < _EPS * i1:
            break
    k0 = -(lg + EULER_GAMMA) * i0 + s0
    k1 = 1.0 / x + 0.5 * x * i1 * lg - 0.25 * x * s1
    return k0, k1


@njit(cache=True)
def _steed(x):
    # Steed's method for CF2, order nu = 0 (Numerical Recipes ``bessik``)
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d
    delh = d
    q1 = 0.0
    q2 = 1.0
    a1 = 0.25
    q = a1
    c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    h = a1 * h
    k0 = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


@njit(cache=True)
def k0k1(x):
    """Return ``(K0(x), K1(x))`` for ``x > 0``."""
    if x <= SWITCH:
        return _series(x)
    return _steed(x)


@njit(cache=True)
def k0_scalar(x):
    return k0k1(x)[0]


@njit(cache=True)
def k1_scalar(x):
    return k0k1(x)[1]


@vectorize(["float64(float64)"], cache=True)
def _k0_ufunc(x):
    if x <= 0.0:
        return np.nan
    return k0k1(x)[0]


@vectorize(["float64(float64)"], cache=True)
def _k1_ufunc(x):
    if x <= 0.0:
        return np.nan
    return k0k1(x)[1]


def k0(x):
    """Modified Bessel function of the second kind, order 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("K0 requires a positive argument")
    out = _k0_ufunc(x)
    return float(out) if out.ndim == 0 else out


def k1(x):
    """Modified Bessel function of the second kind, order 1."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("K1 requires a positive argument")
    out = _k1_ufunc(x)
    return float(out) if out.ndim == 0 else out
