"""Radial reduction: right-hand side, singular start and adaptive integration.

A radial solution is written ``u = f + q G`` and the stepper integrates the
regular part ``f``; the charge only enters through the source term, so the
singularity at the origin never passes through the integrator.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import _dopri
from .greens import green, green_deriv
from .model import FREE, UNCONSTRAINED, Params, ParameterError, Regime, alpha_from_charge
from .quadrature import graded_grid, singular_cell, sphere_area


class IntegrationError(RuntimeError):
    """Step-size underflow, NaN escape or step budget exhausted."""

    def __init__(self, message: str, radius: float):
        super().__init__(f"{message} at r = {radius:.6g}")
        self.radius = radius


class DegenerateZero(RuntimeError):
    """A sign change of ``u`` at which ``u'`` vanishes numerically."""


class OutcomeKind(enum.Enum):
    DECAY = "decay"
    BLOW_UP_PLUS = "blow_up_plus"
    BLOW_UP_MINUS = "blow_up_minus"
    UNDETERMINED = "undetermined"


class SKind(enum.Enum):
    NONE = "none"
    POWER = "power"  # r^(2-p)
    LOG = "log"


@dataclass(frozen=True)
class LocalExpansion:
    """``f(r) ~ a + A s(r)`` near the origin."""

    q: float
    a: float
    A: float
    s_kind: SKind
    p: float

    def s(self, r):
        if self.s_kind is SKind.POWER:
            return np.power(r, 2.0 - self.p)
        if self.s_kind is SKind.LOG:
            return np.log(r)
        return np.zeros_like(np.asarray(r, dtype=float))

    def ds(self, r):
        if self.s_kind is SKind.POWER:
            return (2.0 - self.p) * np.power(r, 1.0 - self.p)
        if self.s_kind is SKind.LOG:
            return 1.0 / np.asarray(r, dtype=float)
        return np.zeros_like(np.asarray(r, dtype=float))

    def f(self, r):
        return self.a + self.A * self.s(r)

    def df(self, r):
        return self.A * self.ds(r)


@dataclass(frozen=True)
class Controls:
    rtol: float = 1e-9
    atol: float = 1e-10
    r0: float | None = None  # default 1e-6/sqrt(lam)
    r_max: float | None = None  # default 50/sqrt(lam)
    r0_tol: float = 1e-7
    tol_decay: float = 1e-6
    max_steps: int = 2_000_000
    max_zeros: int = 64
    blow_factor: float = 1e6
    band: float = 0.2
    # splice the exponential tail once |u| drops below this fraction of its
    # peak; 0 integrates all the way to r_max
    splice_tol: float = 0.0

    def start_radius(self, lam: float) -> float:
        return 1e-6 / math.sqrt(lam) if self.r0 is None else self.r0

    def end_radius(self, lam: float) -> float:
        return 50.0 / math.sqrt(lam) if self.r_max is None else self.r_max


DEFAULT_CONTROLS = Controls()


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    zeros: int
    zero_radii: tuple = ()
    zero_slopes: tuple = ()
    r_event: float = math.nan
    spliced_at: float | None = None
    steps: int = 0

    @property
    def label(self) -> tuple[int, int | None]:
        """``(zeros, escape sign)``; the sign is 0 for decay and None if undetermined."""
        sign = {
            OutcomeKind.BLOW_UP_PLUS: 1,
            OutcomeKind.BLOW_UP_MINUS: -1,
            OutcomeKind.DECAY: 0,
        }.get(self.kind)
        return self.zeros, sign

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "zeros": self.zeros,
            "zero_radii": list(self.zero_radii),
            "zero_slopes": list(self.zero_slopes),
            "r_event": self.r_event,
            "spliced_at": self.spliced_at,
            "steps": self.steps,
        }


@dataclass(frozen=True)
class RadialProfile:
    params: Params
    q: float
    expansion: LocalExpansion
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    f: np.ndarray
    controls: Controls = DEFAULT_CONTROLS
    # quadratures over [r0, r_end] and the tail, see ``integrate``
    integrals: dict = field(default_factory=dict)

    @property
    def a(self) -> float:
        return self.expansion.a

    @property
    def f0(self) -> float | None:
        """``f(0)`` in the strong regime; ``None`` where ``f`` has no boundary value."""
        if self.expansion.s_kind is not SKind.NONE and self.expansion.A != 0.0:
            return None
        return self.expansion.a

    @property
    def alpha(self):
        if self.params.regime is Regime.WEAK and self.q != 0:
            return UNCONSTRAINED
        if self.q == 0:
            return FREE
        return alpha_from_charge(self.q, self.a, self.params.lam, self.params.d)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "u", "du", "f"])
            for row in zip(self.r, self.u, self.du, self.f):
                w.writerow([f"{x:.17g}" for x in row])

    def metadata(self, outcome: Outcome | None = None) -> dict:
        meta = {
            "params": self.params.to_record(),
            "q": self.q,
            "a": self.a,
            "A": self.expansion.A,
            "s_kind": self.expansion.s_kind.value,
            "f0": self.f0 if self.f0 is not None else "undefined",
            "rtol": self.controls.rtol,
            "atol": self.controls.atol,
            "r0": float(self.r[0]),
            "r_max": float(self.r[-1]),
        }
        if outcome is not None:
            meta["outcome"] = outcome.to_dict()
        return meta

    def to_json(self, path, outcome: Outcome | None = None) -> None:
        with open(path, "w") as fh:
            json.dump(self.metadata(outcome), fh, indent=2, sort_keys=True)

    def negated(self) -> "RadialProfile":
        e = self.expansion
        return RadialProfile(
            self.params, -self.q, LocalExpansion(-e.q, -e.a, -e.A, e.s_kind, e.p),
            self.r, -self.u, -self.du, -self.f, self.controls,
            {k: (v if k in ("nonlinear", "quadratic") else -v) for k, v in self.integrals.items()},
        )


def ode_rhs(params: Params, r: float, u: float, du: float) -> float:
    """``u''`` from the radial equation."""
    if not r > 0:
        raise ParameterError("the radial equation is posed on r > 0")
    p = params.p
    return -(params.d - 1) / r * du + params.lam * u - params.sigma * abs(u) ** (p - 1) * u


def local_expansion(params: Params, q: float, a: float) -> LocalExpansion:
    params.require_solvable()
    p = params.p
    if params.d == 2 or q == 0 or params.sigma == 0:
        return LocalExpansion(q, a, 0.0, SKind.NONE, p)
    src = params.sigma * abs(q) ** (p - 1) * q
    if p == 2:
        return LocalExpansion(q, a, -src / (16 * math.pi**2), SKind.LOG, p)
    A = -src / ((4 * math.pi) ** p * (2 - p) * (3 - p))
    return LocalExpansion(q, a, A, SKind.POWER, p)


def default_grid(lam: float, r0: float, r_max: float) -> np.ndarray:
    """Output grid: geometric from ``r0``, uniform once the spacing reaches ``0.02/sqrt(lam)``."""
    return graded_grid(r0, r_max, 1.05, h_max=0.02 / math.sqrt(lam))


def _inner_zero(params: Params, exp: LocalExpansion, r0: float):
    """Zero of the start model ``a + A s + q G`` inside ``(0, r0)``, if any."""
    q = exp.q
    if q == 0:
        return None

    def model(t):
        r = math.exp(t)
        return exp.f(r) + q * green(params.d, params.lam, r)

    u0 = model(math.log(r0))
    if u0 == 0 or (u0 > 0) == (q > 0):
        return None
    lo = math.log(r0) - 1.0
    while model(lo) * u0 > 0:
        lo -= 10.0
        if lo < -690:
            return 0.0, math.nan  # below the representable radii
    t = brentq(model, lo, math.log(r0), xtol=1e-14)
    rz = math.exp(t)
    slope = float(exp.df(rz) + q * green_deriv(params.d, params.lam, rz))
    return rz, slope


def integrate(
    params: Params,
    q: float,
    a: float,
    ctrl: Controls = DEFAULT_CONTROLS,
    grid=None,
    dense: bool = True,
) -> tuple[RadialProfile | None, Outcome]:
    """Integrate the decomposed Cauchy problem from ``r0`` and classify the orbit.

    ``f(r0) = a + A s(r0)``, ``f'(r0) = A s'(r0)``.  With ``dense=False`` only
    the outcome is computed (this is what the shooting bisection uses) and the
    profile is ``None``.
    """
    params.require_solvable()
    lam = params.lam
    r0 = ctrl.start_radius(lam)
    r_max = ctrl.end_radius(lam)
    if not 0 < r0 < r_max:
        raise ParameterError("need 0 < r0 < r_max")
    exp = local_expansion(params, q, a)
    f0 = float(exp.f(r0))
    df0 = float(exp.df(r0))
    if dense:
        r_out = default_grid(lam, r0, r_max) if grid is None else np.asarray(grid, dtype=float)
    else:
        r_out = np.empty(0)
    g0 = green(params.d, lam, r0)
    m_blow = ctrl.blow_factor * max(1.0, abs(a), abs(q * g0))
    res = _dopri.shoot(
        params.d, float(params.sigma), float(params.p), float(lam), float(q), f0, df0,
        r0, r_max, ctrl.rtol, ctrl.atol, ctrl.max_steps, ctrl.max_zeros,
        m_blow, ctrl.tol_decay, ctrl.splice_tol, ctrl.band, r_out,
    )
    (status, r_end, f_end, df_end, i_nl, i_quad, f_out, df_out, zr, zs, nz,
     splice_r, _mismatch, _peak, steps, _rej) = res
    if status < 0:
        msg = {
            _dopri.FAIL_UNDERFLOW: "step-size underflow",
            _dopri.FAIL_NAN: "non-finite state",
            _dopri.FAIL_MAXSTEPS: "step budget exhausted",
        }[status]
        raise IntegrationError(msg, r_end)

    radii = list(zr[: min(nz, len(zr))])
    slopes = list(zs[: min(nz, len(zs))])
    inner = _inner_zero(params, exp, r0)
    if inner is not None:
        radii.insert(0, inner[0])
        slopes.insert(0, inner[1])
        nz += 1

    spliced = None
    kind = {
        _dopri.DECAY: OutcomeKind.DECAY,
        _dopri.SPLICED: OutcomeKind.DECAY,
        _dopri.ESC_PLUS: OutcomeKind.BLOW_UP_PLUS,
        _dopri.ESC_MINUS: OutcomeKind.BLOW_UP_MINUS,
    }.get(status, OutcomeKind.UNDETERMINED)
    if status == _dopri.SPLICED:
        spliced = float(splice_r)
    outcome = Outcome(kind, int(nz), tuple(radii), tuple(slopes), float(r_end), spliced, int(steps))
    if not dense:
        return None, outcome

    area = sphere_area(params.d)
    gg = green(params.d, lam, r_out)
    dg = green_deriv(params.d, lam, r_out)
    if spliced is not None:
        # continue with the decaying linear solution through the splice point
        g_s = green(params.d, lam, spliced)
        c = (f_end + q * g_s) / g_s
        tail = r_out > spliced
        f_out = f_out.copy()
        df_out = df_out.copy()
        f_out[tail] = (c - q) * gg[tail]
        df_out[tail] = (c - q) * dg[tail]
        r_end_int = spliced
        tail_quad = -(c - q) ** 2 * spliced ** (params.d - 1) * g_s * green_deriv(params.d, lam, spliced)
    else:
        r_end_int = r_end
        tail_quad = 0.0
    u = f_out + q * gg
    du = df_out + q * dg

    integrals = {
        "nonlinear": area * (i_nl + _inner_nonlinear(params, exp, r0)),
        "quadratic": area * (i_quad + tail_quad + _inner_quadratic(params, exp, r0)),
        "r_end": float(r_end_int),
    }
    for arr in (r_out, u, du, f_out):
        arr.setflags(write=False)
    profile = RadialProfile(params, float(q), exp, r_out, u, du, f_out, ctrl, integrals)
    return profile, outcome


def _inner_nonlinear(params, exp, r0):
    d, p, lam = params.d, params.p, params.lam
    func = lambda r: np.abs(exp.f(r) + exp.q * green(d, lam, r)) ** (p + 1) * r ** (d - 1)  # noqa: E731
    kappa = float(d) if exp.q == 0 else (2.0 if d == 2 else 3.0 - (p + 1))
    if kappa <= 0:
        return math.inf
    return singular_cell(func, r0, kappa, n=16)


def _inner_quadratic(params, exp, r0):
    d, lam = params.d, params.lam
    func = lambda r: (exp.df(r) ** 2 + lam * exp.f(r) ** 2) * r ** (d - 1)  # noqa: E731
    kappa = float(d)
    if exp.s_kind is SKind.POWER:
        kappa = 5.0 - 2.0 * params.p
    elif exp.s_kind is SKind.LOG:
        kappa = 1.0
    if kappa <= 0:
        return math.inf
    return singular_cell(func, r0, kappa, n=16)


def start_radius_check(params: Params, q: float, a: float, ctrl: Controls = DEFAULT_CONTROLS):
    """Largest change of ``f`` on ``[r0, 2/sqrt(lam)]`` when the start radius is halved.

    Both runs share the same data ``(q, a)`` and output grid, so the difference
    is the error of starting from the local model at ``r0``.  Returns
    ``(change, change <= ctrl.r0_tol * max(1, |a|, |q|))``.
    """
    r0 = ctrl.start_radius(params.lam)
    r_top = min(ctrl.end_radius(params.lam), 2.0 / math.sqrt(params.lam))
    grid = default_grid(params.lam, r0, r_top)
    quiet = replace(ctrl, splice_tol=0.0)
    prof, out = integrate(params, q, a, quiet, grid=grid)
    half, out_half = integrate(params, q, a, replace(quiet, r0=0.5 * r0), grid=grid)
    keep = grid <= min(out.r_event, out_half.r_event, r_top)
    change = float(np.max(np.abs(prof.f[keep] - half.f[keep])))
    return change, change <= ctrl.r0_tol * max(1.0, abs(a), abs(q))


def lyapunov_monitor(profile: RadialProfile, r_cut: float = 0.0, use_p_exponent: bool = False, tol: float = 1e-8):
    """Energy ``E = u'^2/2 + sigma |u|^(p+1)/(p+1) - lam u^2/2`` along the profile.

    ``use_p_exponent`` swaps the potential term for ``|u|^p/p``, which is not a
    Lyapunov function of the radial equation and exists for comparison only.

    Returns ``(E, nonincreasing, gradient_bound)``; the gradient bound
    ``|u'| <= sqrt(lam) |u|`` is tested where ``E <= 0``.
    """
    pr = profile.params
    u, du = profile.u, profile.du
    p = pr.p
    if use_p_exponent:
        pot = pr.sigma * np.abs(u) ** p / p
    else:
        pot = pr.sigma * np.abs(u) ** (p + 1) / (p + 1)
    energy = 0.5 * du**2 + pot - 0.5 * pr.lam * u**2
    mask = profile.r >= r_cut
    e = energy[mask]
    scale = max(1.0, float(np.max(np.abs(e)))) if e.size else 1.0
    nonincreasing = bool(np.all(np.diff(e) <= tol * scale))
    neg = mask & (energy <= 0)
    bound = bool(np.all(np.abs(du[neg]) <= math.sqrt(pr.lam) * np.abs(u[neg]) * (1 + 1e-6) + 1e-12))
    return energy, nonincreasing, bound


def count_zeros(outcome: Outcome, slope_floor: float = 1e-10) -> int:
    """Number of certified simple sign changes of ``u``.

    Every zero carries the slope of ``u`` at the bisected root; a slope below
    ``slope_floor`` is a degeneracy, never silently counted.
    """
    for rz, s in zip(outcome.zero_radii, outcome.zero_slopes):
        if not abs(s) > slope_floor:
            raise DegenerateZero(f"zero at r = {rz:.6g} with u' = {s:.3g}")
    return len(outcome.zero_radii)


def sign_changes(values) -> int:
    """Strict sign changes of a sampled sequence, zeros skipped."""
    v = np.asarray(values, dtype=float)
    s = np.sign(v[v != 0])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def fornberg_weights(z: float, x, m: int) -> np.ndarray:
    """Finite-difference weights for derivatives ``0..m`` at ``z`` on the nodes ``x``."""
    n = len(x)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def ode_residual(profile: RadialProfile, zero_guard: float = 1e-3, stencil: int = 7) -> float:
    """Largest relative residual of the radial equation on interior nodes.

    ``u''`` is the ``stencil``-point finite-difference derivative of the sampled
    ``u'`` and is compared with :func:`ode_rhs`, relative to the largest term
    of the equation.  Nodes where ``|u|`` is below ``zero_guard`` times its
    maximum, and the spliced tail, are skipped.
    """
    r, u, du = profile.r, profile.u, profile.du
    pr = profile.params
    half = stencil // 2
    end = profile.integrals.get("r_end", r[-1])
    big = np.nanmax(np.abs(u))
    worst = 0.0
    for i in range(half, len(r) - half):
        if r[i + half] > end or not abs(u[i]) > zero_guard * big:
            continue
        if not np.all(np.isfinite(du[i - half:i + half + 1])):
            continue
        sl = slice(i - half, i + half + 1)
        w = fornberg_weights(r[i], r[sl], 1)[:, 1]
        d2 = float(w @ du[sl])
        t1 = (pr.d - 1) / r[i] * du[i]
        t2 = pr.lam * u[i]
        t3 = pr.sigma * abs(u[i]) ** (pr.p - 1) * u[i]
        scale = max(abs(t1), abs(t2), abs(t3))
        worst = max(worst, abs(d2 - (-t1 + t2 - t3)) / scale)
    return worst
