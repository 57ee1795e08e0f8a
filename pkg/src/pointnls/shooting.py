"""Decaying radial solutions by shooting.

Every orbit of the radial equation is labelled by ``(zeros, escape sign)``.
Decaying solutions separate orbits with different labels, so a scan of the
shooting parameter followed by bisection of each label change finds them.
Two families of one-parameter shots are used:

* fixed charge ``q``, free matching constant ``a`` (:func:`match_decay`);
* fixed ``alpha``, on the line ``a = beta_alpha(lam) q`` in ``log |q|``
  (:func:`solve_fixed_alpha`).  In the strong regime this is exactly the
  boundary condition of the point interaction.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import (
    FREE,
    UNCONSTRAINED,
    Alpha,
    Params,
    ParameterError,
    Regime,
    alpha_from_charge,
    beta,
    lambda_alpha,
)
from .radial_ode import (
    Controls,
    DegenerateZero,
    OutcomeKind,
    RadialProfile,
    count_zeros,
    integrate,
    ode_residual,
)
from .greens import green
from .verify import fit_charge


class BranchNotFound(RuntimeError):
    """The requested branch was not met inside the scanned range."""

    def __init__(self, message: str, scanned: tuple[float, float]):
        super().__init__(f"{message} (scanned {scanned[0]:.4g} .. {scanned[1]:.4g})")
        self.scanned = scanned


@dataclass(frozen=True)
class ShootControls:
    a_bracket: tuple[float, float] | None = None  # default scale-aware, see match_decay
    scan_points: int = 161
    bisect_tol: float = 1e-12  # relative to max(1, |parameter|)
    max_branch: int = 4
    widen: int = 3
    q_range: tuple[float, float] = (1e-4, 1e3)
    q_points: int = 281
    integrator: Controls = field(default_factory=Controls)
    splice_tol: float = 1e-6
    nehari_tol: float = 1e-5

    def __post_init__(self):
        if self.a_bracket is not None:
            lo, hi = self.a_bracket
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ParameterError("a-bracket must be finite and increasing")
        if not 1e-15 <= self.bisect_tol < 1:
            raise ParameterError("bisection tolerance must lie in [1e-15, 1)")
        if self.scan_points < 3 or self.q_points < 3:
            raise ParameterError("need at least 3 scan points")
        if not 0 < self.q_range[0] < self.q_range[1]:
            raise ParameterError("q_range must be 0 < q_lo < q_hi")


@dataclass(frozen=True)
class BranchPoint:
    params: Params
    q: float
    a: float
    f0: float | None
    zero_count: int
    alpha: float | Alpha
    action: float | None
    residuals: dict
    profile: RadialProfile | None = None
    flagged: bool = False

    def to_dict(self) -> dict:
        alpha = self.alpha.value if isinstance(self.alpha, Alpha) else self.alpha
        return {
            "params": self.params.to_record(),
            "q": self.q,
            "a": self.a,
            "f0": "undefined" if self.f0 is None else self.f0,
            "zero_count": self.zero_count,
            "alpha": alpha,
            "action": self.action,
            "residuals": dict(self.residuals),
            "flagged": self.flagged,
        }

    def to_json(self, path, profile_file: str | None = None) -> None:
        data = self.to_dict()
        if profile_file is not None:
            data["profile_file"] = profile_file
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)

    def negated(self) -> "BranchPoint":
        return replace(
            self,
            q=-self.q,
            a=-self.a,
            f0=None if self.f0 is None else -self.f0,
            profile=None if self.profile is None else self.profile.negated(),
        )


def _label(params, q, a, ictrl):
    _, out = integrate(params, q, a, ictrl, dense=False)
    return out.label


def _bisect_transitions(shoot, xs, labels, tol, max_zeros=None):
    """Return ``(lo, hi, label_lo, label_hi)`` for every label change between scan nodes.

    ``shoot(x)`` returns the label.  An interval whose midpoint carries a
    third label is split in two, so several separators inside one scan cell
    are all resolved.  A shot that decays outright is returned as a
    degenerate interval ``(x, x, ...)`` labelled by its neighbours.  Cells
    where both labels exceed ``max_zeros`` zeros are skipped.
    """
    out = []
    n = len(xs)
    for i in range(n):
        if _decays(labels[i]) and 0 < i < n - 1:
            out.append((xs[i], xs[i], labels[i - 1], labels[i + 1]))
    for x0, x1, l0, l1 in zip(xs[:-1], xs[1:], labels[:-1], labels[1:]):
        if l0 == l1 or _decays(l0) or _decays(l1):
            continue
        if max_zeros is not None and min(l0[0], l1[0]) > max_zeros:
            continue
        stack = [(x0, x1, l0, l1)]
        while stack:
            lo, hi, llo, lhi = stack.pop()
            while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
                mid = 0.5 * (lo + hi)
                lm = shoot(mid)
                if lm == llo:
                    lo = mid
                elif lm == lhi:
                    hi = mid
                elif _decays(lm):
                    lo = hi = mid
                else:
                    stack.append((mid, hi, lm, lhi))
                    hi, lhi = mid, lm
            out.append((lo, hi, llo, lhi))
    out.sort(key=lambda t: t[0])
    return out


def _decays(label):
    return label[1] == 0


def _is_separator(llo, lhi):
    # a decaying orbit sits between opposite escapes whose zero counts differ by one
    (z0, s0), (z1, s1) = llo, lhi
    return s0 in (1, -1) and s1 in (1, -1) and s0 == -s1 and abs(z0 - z1) == 1


def _action(profile: RadialProfile, params: Params):
    """``(action, D-norm squared, L^{p+1} norm to the p+1, nehari residual)`` or Nones."""
    if params.sigma != 1 or params.regime is not Regime.STRONG:
        return None, None, None, None
    q = profile.q
    if q != 0 and params.alpha is FREE:
        return None, None, None, None
    charge = beta(params) * q * q if q != 0 else 0.0
    dnorm = profile.integrals["quadratic"] + charge
    nl = profile.integrals["nonlinear"]
    s = 0.5 * dnorm - nl / (params.p + 1)
    neh = abs(dnorm - nl) / abs(dnorm) if dnorm else math.inf
    return s, dnorm, nl, neh


def _make_point(params, q, a, llo, lhi, ctrl, alpha=None) -> BranchPoint:
    ictrl = replace(ctrl.integrator, splice_tol=ctrl.splice_tol)
    profile, outcome = integrate(params, q, a, ictrl)
    flagged = outcome.kind is not OutcomeKind.DECAY
    try:
        zc = count_zeros(outcome)
    except DegenerateZero:
        zc = len(outcome.zero_radii)
        flagged = True
    expected = min(llo[0], lhi[0])
    if zc != expected:
        flagged = True

    regime = params.regime
    if q == 0:
        alpha = FREE
    elif regime is Regime.WEAK:
        alpha = UNCONSTRAINED
    elif alpha is None:
        alpha = alpha_from_charge(q, profile.a, params.lam, params.d)
    f0 = profile.f0 if regime is Regime.STRONG else None
    if alpha is FREE or isinstance(alpha, Alpha):
        p_alpha = params.replace(alpha=FREE) if alpha is FREE else params
    else:
        p_alpha = params.replace(alpha=alpha)
    act, dnorm, nl, neh = _action(profile, p_alpha)
    residuals = {
        "ode": ode_residual(profile),
        "relation": _relation_residual(profile, p_alpha),
        "decay_margin": _decay_margin(profile, outcome),
        "nehari": neh,
        "zeros_expected": expected,
    }
    if neh is not None and neh > ctrl.nehari_tol:
        flagged = True
    return BranchPoint(p_alpha, float(q), float(a), f0, zc, alpha, act, residuals, profile, flagged)


def _relation_residual(profile, params):
    """``|f(0) - beta q|`` with ``f(0), q`` read back from the profile by the charge fit."""
    if params.regime is not Regime.STRONG or params.alpha is FREE or profile.q == 0:
        return None
    fit = fit_charge(profile)
    return abs(fit.a - beta(params) * fit.q)


def _decay_margin(profile, outcome):
    if outcome.kind is not OutcomeKind.DECAY:
        return None
    u = np.abs(profile.u)
    return float(u[-1] / max(np.max(u[profile.r >= 0.1 / profile.params.sqrt_lam]), 1e-300))


def default_a_bracket(params: Params, q: float, ctrl: ShootControls) -> tuple[float, float]:
    r0 = ctrl.integrator.start_radius(params.lam)
    b = 10.0 * (1.0 + abs(q) * green(params.d, params.lam, r0))
    return -b, b


def match_decay(params: Params, q: float, ctrl: ShootControls | None = None) -> list[BranchPoint]:
    """Decaying solutions with charge ``q``, one per certified separator in ``a``.

    Points are sorted by zero count (then by ``a``) and limited to zero counts
    up to ``ctrl.max_branch``.  An empty bracket is widened four-fold up to
    ``ctrl.widen`` times before giving up with an empty list.
    """
    ctrl = ctrl or ShootControls()
    params.require_solvable()
    lo, hi = ctrl.a_bracket or default_a_bracket(params, q, ctrl)
    ictrl = ctrl.integrator
    for attempt in range(ctrl.widen + 1):
        xs = np.linspace(lo, hi, ctrl.scan_points)
        labels = [_label(params, q, a, ictrl) for a in xs]
        trans = _bisect_transitions(
            lambda a: _label(params, q, a, ictrl), xs, labels, ctrl.bisect_tol, ctrl.max_branch
        )
        trans = [t for t in trans if _is_separator(t[2], t[3]) and min(t[2][0], t[3][0]) <= ctrl.max_branch]
        if trans or ctrl.a_bracket is not None:
            break
        lo, hi = 4 * lo, 4 * hi
    points = [_make_point(params, q, 0.5 * (t[0] + t[1]), t[2], t[3], ctrl) for t in trans]
    points.sort(key=lambda bp: (bp.zero_count, bp.a))
    return points


def _check_alpha_params(params: Params, k: int):
    if params.alpha is FREE or isinstance(params.alpha, Alpha):
        raise ParameterError("a finite alpha is required")
    if params.regime is not Regime.STRONG:
        raise ParameterError("alpha fixes the solution only in the strong regime")
    if k < 0:
        raise ParameterError("branch index must be >= 0")
    lam_a = lambda_alpha(params)
    if k == 0 and params.lam <= lam_a:
        raise ParameterError(
            f"no positive solution for lambda = {params.lam} <= lambda_alpha = {lam_a:.12g}"
        )


def fixed_alpha_separators(params: Params, ctrl: ShootControls | None = None, sign: int = 1, max_zeros=None):
    """Separators on the line ``a = beta q`` for ``q`` of the given sign, up to ``max_zeros`` zeros.

    Returns ``(list of (q_lo, q_hi, label_lo, label_hi), scanned range)``.
    """
    ctrl = ctrl or ShootControls()
    b = beta(params)
    ictrl = ctrl.integrator
    t_lo, t_hi = math.log(ctrl.q_range[0]), math.log(ctrl.q_range[1])
    ts = np.linspace(t_lo, t_hi, ctrl.q_points)

    def shoot(t):
        q = sign * math.exp(t)
        return _label(params, q, b * q, ictrl)

    labels = [shoot(t) for t in ts]
    # tolerance in log q is a relative tolerance in q
    trans = _bisect_transitions(shoot, ts, labels, ctrl.bisect_tol / max(1.0, abs(t_lo), abs(t_hi)), max_zeros)
    trans = [t for t in trans if _is_separator(t[2], t[3])]
    if max_zeros is not None:
        trans = [t for t in trans if min(t[2][0], t[3][0]) <= max_zeros]
    return trans, ctrl.q_range


def solve_fixed_alpha(params: Params, k: int, ctrl: ShootControls | None = None, sign: int = 1) -> BranchPoint:
    """The decaying solution with ``k`` zeros for the configured ``alpha``.

    ``q`` is bracketed on a geometric grid and refined by bisection of the
    label change along ``a = beta_alpha(lam) q``.  For ``k = 0``, ``lam`` must
    exceed ``lambda_alpha``; the returned ground state has ``q > 0`` unless
    ``sign = -1``.  If several separators with ``k`` zeros exist, the one with
    the smallest ``|q|`` is returned.
    """
    ctrl = ctrl or ShootControls()
    _check_alpha_params(params, k)
    trans, scanned = fixed_alpha_separators(params, ctrl, sign, k)
    hits = [t for t in trans if min(t[2][0], t[3][0]) == k]
    if not hits:
        raise BranchNotFound(f"no separator with {k} zeros for alpha = {params.alpha}", scanned)
    t = hits[0]
    q = sign * math.exp(0.5 * (t[0] + t[1]))
    return _make_point(params, q, beta(params) * q, t[2], t[3], ctrl, alpha=params.alpha)


def positive_separators(params: Params, ctrl: ShootControls | None = None) -> list[tuple[float, float]]:
    """Brackets in ``log q`` of the decaying separators with no zeros and ``q > 0``."""
    trans, _ = fixed_alpha_separators(params, ctrl, 1, 0)
    return [(t[0], t[1]) for t in trans if min(t[2][0], t[3][0]) == 0]


def ground_state_shoot(params: Params, ctrl: ShootControls | None = None) -> BranchPoint:
    """Positive, radially decreasing solution with ``q > 0``, certified on the grid."""
    if params.sigma != 1:
        raise ParameterError("ground states are computed for the source case sigma = +1")
    bp = solve_fixed_alpha(params, 0, ctrl)
    prof = bp.profile
    live = prof.r <= prof.integrals["r_end"]
    positive = bool(np.all(prof.u > 0))
    decreasing = bool(np.all(np.diff(prof.u[live]) < 0)) and bool(np.all(prof.du[live] < 0))
    norm = math.sqrt(max(prof.integrals["quadratic"] + beta(bp.params) * bp.q**2, 0.0))
    singular = abs(bp.q) > 1e-8 * norm
    res = dict(bp.residuals, positive=positive, decreasing=decreasing, singular=singular)
    ok = positive and decreasing and singular
    return replace(bp, residuals=res, flagged=bp.flagged or not ok)


@dataclass(frozen=True)
class BranchRow:
    q: float
    a: float | None
    f0: float | None
    alpha: float | Alpha | None
    action: float | None
    sheet: int = 0
    error: str | None = None


def branch_scan(params: Params, q_values, k: int, ctrl: ShootControls | None = None) -> list[BranchRow]:
    """Separators with ``k`` zeros for each ``q``.

    At a fixed ``q`` the branch may pass more than once (it folds); every
    passage is a row, numbered by ``sheet`` in order of ``a q``.  A ``q``
    without a hit gives a row with ``error`` set and the scan continues.
    """
    ctrl = ctrl or ShootControls()
    if params.regime is not Regime.STRONG:
        raise ParameterError("branch scans need the strong regime")
    rows = []
    for q in q_values:
        q = float(q)
        if q == 0:
            raise ParameterError("the q grid must exclude 0")
        try:
            pts = [bp for bp in match_decay(params, q, replace(ctrl, max_branch=k)) if bp.zero_count == k]
        except Exception as exc:  # per-q failures are recorded, not fatal
            rows.append(BranchRow(q, None, None, None, None, 0, str(exc)))
            continue
        if not pts:
            rows.append(BranchRow(q, None, None, None, None, 0, "no separator"))
            continue
        pts.sort(key=lambda bp: bp.a * math.copysign(1.0, q))
        for i, bp in enumerate(pts):
            rows.append(BranchRow(q, bp.a, bp.f0, bp.alpha, bp.action, i))
    return rows


def write_branch_csv(rows: list[BranchRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q", "sheet", "a", "f0", "alpha", "action", "error"])
        for r in rows:
            fmt = lambda x: "" if x is None else (x.value if isinstance(x, Alpha) else f"{x:.17g}")  # noqa: E731
            w.writerow([f"{r.q:.17g}", r.sheet, fmt(r.a), fmt(r.f0), fmt(r.alpha), fmt(r.action), r.error or ""])
