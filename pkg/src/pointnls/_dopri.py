"""Compiled Dormand-Prince 5(4) kernel for the regular part of a radial solution.

State ``y = (f, f', int |u|^{p+1} r^{d-1}, int (f'^2 + lam f^2) r^{d-1})`` with
``u = f + q G(r)``.  Only the first two components enter the error norm; the
last two are quadratures carried along the accepted steps.
"""

import math

import numpy as np
from numba import njit

from .greens import green_pair

# status codes
DECAY = 0
ESC_PLUS = 1
ESC_MINUS = 2
UNDETERMINED = 3
MANY_ZEROS = 4
SPLICED = 5
FAIL_UNDERFLOW = -1
FAIL_NAN = -2
FAIL_MAXSTEPS = -3

A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
C2, C3, C4, C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)
D1 = -12715105075.0 / 11282082432.0
D3 = 87487479700.0 / 32700410799.0
D4 = -10690763975.0 / 1880347072.0
D5 = 701980252875.0 / 199316789632.0
D6 = -1453857185.0 / 822651844.0
D7 = 69997945.0 / 29380423.0


@njit(cache=True)
def _rhs(r, y, out, d, sigma, p, lam, sl, q):
    g, _ = green_pair(d, sl, r)
    u = y[0] + q * g
    au = abs(u)
    out[0] = y[1]
    out[1] = -(d - 1) * y[1] / r + lam * y[0] - sigma * au ** (p - 1.0) * u
    w = r ** (d - 1)
    out[2] = au ** (p + 1.0) * w
    out[3] = (y[1] * y[1] + lam * y[0] * y[0]) * w


@njit(cache=True)
def _dense(theta, i, y0, y1, h, k1, k3, k4, k5, k6, k7):
    dy = y1[i] - y0[i]
    bspl = h * k1[i] - dy
    c4 = dy - h * k7[i] - bspl
    c5 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
    return y0[i] + theta * (dy + (1.0 - theta) * (bspl + theta * (c4 + (1.0 - theta) * c5)))


@njit(cache=True)
def _energy(u, du, sigma, p, lam):
    return 0.5 * du * du + sigma * abs(u) ** (p + 1.0) / (p + 1.0) - 0.5 * lam * u * u


@njit(cache=True)
def shoot(
    d, sigma, p, lam, q, f0, df0, r0, rmax, rtol, atol, max_steps, max_zeros,
    m_blow, tol_decay, splice_tol, splice_band, r_out,
):
    """Integrate from ``r0`` and classify.  See ``radial_ode.integrate``."""
    sl = math.sqrt(lam)
    n_out = r_out.shape[0]
    f_out = np.full(n_out, np.nan)
    df_out = np.full(n_out, np.nan)
    zeros = np.zeros(max_zeros + 2)
    slopes = np.zeros(max_zeros + 2)
    nz = 0

    y = np.zeros(4)
    y[0] = f0
    y[1] = df0
    ynew = np.zeros(4)
    ytmp = np.zeros(4)
    k1 = np.zeros(4)
    k2 = np.zeros(4)
    k3 = np.zeros(4)
    k4 = np.zeros(4)
    k5 = np.zeros(4)
    k6 = np.zeros(4)
    k7 = np.zeros(4)

    r = r0
    j = 0
    while j < n_out and r_out[j] < r0:
        j += 1
    while j < n_out and r_out[j] == r0:
        f_out[j] = f0
        df_out[j] = df0
        j += 1

    g, dg = green_pair(d, sl, r)
    u = y[0] + q * g
    du = y[1] + q * dg
    last_sign = 0.0
    if u != 0.0:
        last_sign = 1.0 if u > 0 else -1.0
    peak = 0.0
    r_peak = 0.1 / sl

    h_max = 0.1 / sl
    h = min(1e-2 * r0, h_max)
    _rhs(r, y, k1, d, sigma, p, lam, sl, q)
    status = UNDETERMINED
    splice_r = np.nan
    splice_mismatch = np.nan
    steps = 0
    rejected = 0
    while True:
        if steps >= max_steps:
            status = FAIL_MAXSTEPS
            break
        if r + h > rmax:
            h = rmax - r
        if h < 1e-15 * max(r, 1e-300) or h <= 0.0:
            status = FAIL_UNDERFLOW
            break
        for i in range(4):
            ytmp[i] = y[i] + h * A21 * k1[i]
        _rhs(r + C2 * h, ytmp, k2, d, sigma, p, lam, sl, q)
        for i in range(4):
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
        _rhs(r + C3 * h, ytmp, k3, d, sigma, p, lam, sl, q)
        for i in range(4):
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        _rhs(r + C4 * h, ytmp, k4, d, sigma, p, lam, sl, q)
        for i in range(4):
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        _rhs(r + C5 * h, ytmp, k5, d, sigma, p, lam, sl, q)
        for i in range(4):
            ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
        _rhs(r + h, ytmp, k6, d, sigma, p, lam, sl, q)
        for i in range(4):
            ynew[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
        _rhs(r + h, ynew, k7, d, sigma, p, lam, sl, q)

        err = 0.0
        for i in range(2):
            ei = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            if i == 1:
                # f' = O(r) near a regular origin; measure it on its own scale
                sc = atol * min(1.0, sl * r) + rtol * max(abs(y[i]), abs(ynew[i]))
            err += (ei / sc) ** 2
        err = math.sqrt(err / 2.0)
        if not math.isfinite(err):
            if h > 1e-12 * r:
                h *= 0.1
                rejected += 1
                continue
            status = FAIL_NAN
            break
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            rejected += 1
            continue

        # accepted step
        steps += 1
        rnew = r + h
        while j < n_out and r_out[j] <= rnew:
            th = (r_out[j] - r) / h
            f_out[j] = _dense(th, 0, y, ynew, h, k1, k3, k4, k5, k6, k7)
            df_out[j] = _dense(th, 1, y, ynew, h, k1, k3, k4, k5, k6, k7)
            j += 1

        g, dg = green_pair(d, sl, rnew)
        unew = ynew[0] + q * g
        dunew = ynew[1] + q * dg
        if not (math.isfinite(unew) and math.isfinite(dunew)):
            status = FAIL_NAN
            r = rnew
            break

        if unew != 0.0:
            s_new = 1.0 if unew > 0 else -1.0
            if last_sign != 0.0 and s_new != last_sign:
                lo = 0.0
                hi = 1.0
                ulo = u
                for _ in range(200):
                    if (hi - lo) * h <= 1e-12:
                        break
                    mid = 0.5 * (lo + hi)
                    gm, _ = green_pair(d, sl, r + mid * h)
                    um = _dense(mid, 0, y, ynew, h, k1, k3, k4, k5, k6, k7) + q * gm
                    if (um > 0) == (ulo > 0) and um != 0.0:
                        lo = mid
                        ulo = um
                    else:
                        hi = mid
                rz = r + 0.5 * (lo + hi) * h
                _, gz = green_pair(d, sl, rz)
                th = 0.5 * (lo + hi)
                if nz < max_zeros + 2:
                    zeros[nz] = rz
                    slopes[nz] = _dense(th, 1, y, ynew, h, k1, k3, k4, k5, k6, k7) + q * gz
                nz += 1
            last_sign = s_new

        for i in range(4):
            y[i] = ynew[i]
            k1[i] = k7[i]
        r = rnew
        u = unew
        du = dunew

        if r >= r_peak and abs(u) > peak:
            peak = abs(u)

        if nz > max_zeros:
            status = MANY_ZEROS
            break
        if abs(u) > m_blow:
            status = ESC_PLUS if u > 0 else ESC_MINUS
            break
        if sigma > 0:
            if _energy(u, du, sigma, p, lam) < 0.0:
                status = ESC_PLUS if u > 0 else ESC_MINUS
                break
        elif u * du > 0.0:
            status = ESC_PLUS if u > 0 else ESC_MINUS
            break
        if splice_tol > 0.0 and r * sl >= 2.0 and u * du < 0.0 and abs(u) <= splice_tol * peak:
            g_s, dg_s = green_pair(d, sl, r)
            mismatch = abs(du / u - dg_s / g_s) / sl
            if mismatch <= splice_band:
                status = SPLICED
                splice_r = r
                splice_mismatch = mismatch
                break
        if r >= rmax:
            if abs(u) < tol_decay and (u * du < 0.0 or (u == 0.0 and du == 0.0)):
                status = DECAY
            else:
                status = UNDETERMINED
            break

        fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h = min(h * fac, h_max, 0.5 * r + h)

    return (
        status, r, y[0], y[1], y[2], y[3], f_out, df_out, zeros, slopes, nz,
        splice_r, splice_mismatch, peak, steps, rejected,
    )
