"""Discretized action on decomposed radial states ``u = f + q G``.

``f`` is continuous piecewise linear on a graded grid ``r_1 < ... < r_N``
with ``f(r_N) = 0`` and ``f = f(r_1)`` on the innermost cell ``(0, r_1)``.
The quadratic part

    D(f, q) = int (|f'|^2 + lam f^2) dmu + beta q^2

is computed exactly for P1 functions; the nonlinear part uses Gauss-Legendre
points in ``log r`` per cell plus a Gauss-Laguerre rule on ``(0, r_1)``, with
``G`` evaluated exactly at every point.  Both parts are homogeneous in
``(f, q)``, so the Nehari pairing ``<S'(u), u> = D - N`` holds to round-off.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .greens import green, green_norm
from .model import Params, ParameterError, Regime, beta, lambda_alpha
from .quadrature import graded_grid, laguerre_rule, legendre_rule, sphere_area


class NotConverged(RuntimeError):
    def __init__(self, message, state, report, trace):
        super().__init__(message)
        self.state = state
        self.report = report
        self.trace = trace


def _require(params: Params):
    if params.regime is not Regime.STRONG:
        raise ParameterError(
            "the action needs G in L^{p+1}, which fails for d = 3, p >= 2"
        )
    lam_a = lambda_alpha(params)
    if not params.lam > lam_a:
        raise ParameterError(
            f"lambda = {params.lam} must exceed lambda_alpha = {lam_a:.12g} for a positive quadratic form"
        )


@dataclass(frozen=True)
class Discretization:
    """Grid and quadrature data shared by every state on it."""

    params: Params
    nodes: np.ndarray
    stiff: np.ndarray  # per cell: measure / h^2
    mass_diag: np.ndarray
    mass_off: np.ndarray
    qp_left: np.ndarray  # quadrature points: left node index
    qp_theta: np.ndarray  # weight of the right node
    qp_w: np.ndarray  # measure weights
    qp_g: np.ndarray  # G at the points
    beta: float

    @property
    def n(self) -> int:
        return len(self.nodes)

    def matvec(self, f):
        """``(K + lam M) f`` for the f-block."""
        lam = self.params.lam
        df = np.diff(f)
        out = lam * (self.mass_diag * f)
        out[:-1] += lam * self.mass_off * f[1:]
        out[1:] += lam * self.mass_off * f[:-1]
        out[:-1] -= self.stiff * df
        out[1:] += self.stiff * df
        return out

    def solve(self, rhs):
        """Inverse of the f-block with the Dirichlet node ``r_N`` removed."""
        lam = self.params.lam
        diag = lam * self.mass_diag.copy()
        diag[:-1] += self.stiff
        diag[1:] += self.stiff
        off = lam * self.mass_off - self.stiff
        m = self.n - 1
        ab = np.zeros((3, m))
        ab[0, 1:] = off[: m - 1]
        ab[1] = diag[:m]
        ab[2, :-1] = off[: m - 1]
        x = np.zeros(self.n)
        x[:m] = solve_banded((1, 1), ab, rhs[:m])
        return x

    def values(self, f, q):
        """``u`` at the quadrature points."""
        i = self.qp_left
        t = self.qp_theta
        right = np.minimum(i + 1, self.n - 1)
        return (1 - t) * f[i] + t * f[right] + q * self.qp_g

    def scatter(self, w):
        """Transpose of :meth:`values` in the f-block."""
        i = self.qp_left
        t = self.qp_theta
        right = np.minimum(i + 1, self.n - 1)
        out = np.bincount(i, (1 - t) * w, minlength=self.n)
        out += np.bincount(right, t * w, minlength=self.n)
        return out


def discretize(params: Params, resolution: float = 1.0, r_max: float | None = None, n_gauss: int = 4) -> Discretization:
    """Graded grid from ``1e-6/sqrt(lam)`` to ``r_max`` (default ``40/sqrt(lam)``).

    ``resolution`` scales the number of cells: ratio ``1 + 0.02/resolution``
    in the geometric part, spacing ``0.01/(resolution sqrt(lam))`` in the tail.
    """
    _require(params)
    d, lam = params.d, params.lam
    s = math.sqrt(lam)
    r_max = 40.0 / s if r_max is None else r_max
    nodes = graded_grid(1e-6 / s, r_max, 1.0 + 0.02 / resolution, h_max=0.01 / (resolution * s))
    area = sphere_area(d)
    lo, hi = nodes[:-1], nodes[1:]
    h = hi - lo
    meas = area * (hi**d - lo**d) / d
    stiff = meas / h**2

    # consistent P1 mass with weight |S| r^{d-1}: 3-point Gauss is exact
    x3, w3 = legendre_rule(3)
    rr = 0.5 * (lo + hi)[:, None] + 0.5 * h[:, None] * x3[None, :]
    ww = 0.5 * h[:, None] * w3[None, :] * area * rr ** (d - 1)
    th = (rr - lo[:, None]) / h[:, None]
    m_ll = np.sum(ww * (1 - th) ** 2, axis=1)
    m_rr = np.sum(ww * th**2, axis=1)
    m_lr = np.sum(ww * th * (1 - th), axis=1)
    mass_diag = np.zeros(len(nodes))
    mass_diag[:-1] += m_ll
    mass_diag[1:] += m_rr
    mass_diag[0] += area * nodes[0] ** d / d  # f constant on (0, r_1)

    # nonlinear quadrature: Gauss-Legendre in log r per cell
    xg, wg = legendre_rule(n_gauss)
    tl, th_ = np.log(lo)[:, None], np.log(hi)[:, None]
    t = 0.5 * (tl + th_) + 0.5 * (th_ - tl) * xg[None, :]
    rq = np.exp(t)
    wq = 0.5 * (th_ - tl) * wg[None, :] * area * rq**d
    theta = (rq - lo[:, None]) / h[:, None]
    left = np.repeat(np.arange(len(nodes) - 1), n_gauss)

    # innermost cell: r = r_1 exp(-x/kappa), Laguerre weight exp(-x)
    xl, wl = laguerre_rule(16)
    kappa = 2.0 if d == 2 else 3.0 - (params.p + 1)
    r1 = nodes[0]
    rs = r1 * np.exp(-xl / kappa)
    ws = area * r1 / kappa * wl * np.exp((kappa - 1) * xl / kappa) * rs ** (d - 1)

    qp_r = np.concatenate([rs, rq.ravel()])
    return Discretization(
        params,
        nodes,
        stiff,
        mass_diag,
        m_lr,
        np.concatenate([np.zeros(len(rs), dtype=np.int64), left]),
        np.concatenate([np.zeros(len(rs)), theta.ravel()]),
        np.concatenate([ws, wq.ravel()]),
        np.asarray(green(d, lam, qp_r)),
        beta(params),
    )


@dataclass(frozen=True)
class DiscreteState:
    disc: Discretization
    f: np.ndarray
    q: float

    def __post_init__(self):
        f = np.array(self.f, dtype=float)
        if f.shape != (self.disc.n,):
            raise ParameterError("f must have one value per node")
        if not np.all(np.isfinite(f)) or not math.isfinite(self.q):
            raise ParameterError("state values must be finite")
        f[-1] = 0.0
        f.setflags(write=False)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "q", float(self.q))

    @property
    def r(self):
        return self.disc.nodes

    @property
    def u(self):
        return self.f + self.q * np.asarray(green(self.disc.params.d, self.disc.params.lam, self.r))

    def scaled(self, c: float) -> "DiscreteState":
        return DiscreteState(self.disc, c * self.f, c * self.q)

    def __neg__(self):
        return self.scaled(-1.0)

    def __add__(self, other: "DiscreteState") -> "DiscreteState":
        return DiscreteState(self.disc, self.f + other.f, self.q + other.q)

    def __sub__(self, other: "DiscreteState") -> "DiscreteState":
        return DiscreteState(self.disc, self.f - other.f, self.q - other.q)

    def dot(self, other: "DiscreteState") -> float:
        """Euclidean pairing of nodal coordinates (cotangent with tangent)."""
        return float(self.f @ other.f + self.q * other.q)

    def to_csv(self, path) -> None:
        import csv

        dg = np.gradient(self.u, self.r)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "u", "du", "f"])
            for row in zip(self.r, self.u, dg, self.f):
                w.writerow([f"{x:.17g}" for x in row])


def zero_state(disc: Discretization) -> DiscreteState:
    return DiscreteState(disc, np.zeros(disc.n), 0.0)


def from_profile(disc: Discretization, r, f, q: float) -> DiscreteState:
    """Interpolate a regular part sampled on ``r`` onto the nodes."""
    vals = np.interp(disc.nodes, r, f, right=0.0)
    return DiscreteState(disc, vals, q)


def quadratic(state: DiscreteState) -> float:
    """``||u||_D^2``."""
    disc = state.disc
    return float(state.f @ disc.matvec(state.f) + disc.beta * state.q**2)


def nonlinear(state: DiscreteState, sigma_on: bool = True) -> float:
    """``||u||_{p+1}^{p+1}``; zero when ``sigma_on`` is false (diagnostic)."""
    if not sigma_on:
        return 0.0
    disc = state.disc
    u = disc.values(state.f, state.q)
    return float(np.sum(disc.qp_w * np.abs(u) ** (disc.params.p + 1)))


def l2_norm_sq(state: DiscreteState) -> float:
    disc = state.disc
    u = disc.values(state.f, state.q)
    return float(np.sum(disc.qp_w * u**2))


def action(params: Params, state: DiscreteState, sigma_on: bool = True) -> float:
    """``D/2 - N/(p+1)``; ``sigma_on=False`` drops the nonlinear term."""
    _check_params(params, state)
    return 0.5 * quadratic(state) - nonlinear(state, sigma_on) / (params.p + 1)


def _check_params(params, state):
    _require(params)
    if params != state.disc.params:
        raise ParameterError("state was discretized for different parameters")


def action_gradient(params: Params, state: DiscreteState) -> DiscreteState:
    """Exact gradient of :func:`action` in the nodal coordinates ``(f_1..f_N, q)``.

    The Dirichlet node carries a zero component.
    """
    _check_params(params, state)
    disc = state.disc
    u = disc.values(state.f, state.q)
    g = disc.qp_w * np.abs(u) ** (params.p - 1) * u
    gf = disc.matvec(state.f) - disc.scatter(g)
    gf[-1] = 0.0
    gq = disc.beta * state.q - float(np.sum(g * disc.qp_g))
    return DiscreteState(disc, gf, gq)


def riesz(grad: DiscreteState) -> DiscreteState:
    """Sobolev gradient: the D-inner-product representative of a cotangent."""
    disc = grad.disc
    return DiscreteState(disc, disc.solve(np.asarray(grad.f)), grad.q / disc.beta)


def nehari_factor(state: DiscreteState) -> float:
    n = nonlinear(state)
    if not n > 0:
        raise ParameterError("Nehari projection needs a nonzero state")
    return (quadratic(state) / n) ** (1.0 / (state.disc.params.p - 1))


def nehari_project(params: Params, state: DiscreteState) -> DiscreteState:
    _check_params(params, state)
    return state.scaled(nehari_factor(state))


@dataclass
class FunctionalReport:
    action: float
    d_norm: float
    lp_norm: float
    gradient_norm: float
    nehari_residual: float

    def to_dict(self):
        return dict(self.__dict__)


def report(params: Params, state: DiscreteState) -> FunctionalReport:
    dq = quadratic(state)
    nl = nonlinear(state)
    g = action_gradient(params, state)
    gnorm = math.sqrt(max(g.dot(riesz(g)), 0.0))
    return FunctionalReport(
        0.5 * dq - nl / (params.p + 1),
        math.sqrt(max(dq, 0.0)),
        nl ** (1.0 / (params.p + 1)),
        gnorm,
        abs(dq - nl) / dq if dq > 0 else math.inf,
    )


@dataclass(frozen=True)
class MinimizeOptions:
    gtol: float = 1e-9
    max_iter: int = 2000
    step0: float = 1.0
    backtrack: float = 0.5
    max_backtrack: int = 40
    slack: float = 1e-13


def minimize_ground_state(params: Params, init: DiscreteState, opts: MinimizeOptions | None = None):
    """Projected Sobolev-gradient descent on the Nehari manifold.

    The search direction is the Riesz representative of the gradient in the
    ``D`` inner product; the step is seeded with the Barzilai-Borwein ratio
    and backtracked until the projected action decreases.  Returns
    ``(state, FunctionalReport, trace)`` with ``trace`` a list of
    ``(action, gradient norm)``; raises :class:`NotConverged` at the cap.
    """
    opts = opts or MinimizeOptions()
    x = nehari_project(params, init)
    s = action(params, x)
    g = action_gradient(params, x)
    dvec = riesz(g)
    gnorm = math.sqrt(max(g.dot(dvec), 0.0))
    trace = [(s, gnorm)]
    tau = opts.step0
    for _ in range(opts.max_iter):
        norm = math.sqrt(quadratic(x))
        if gnorm <= opts.gtol * norm:
            return x, report(params, x), trace
        for _bt in range(opts.max_backtrack):
            y = nehari_project(params, x - dvec.scaled(tau))
            s_new = action(params, y)
            # near convergence the decrease is below the resolution of S
            if s_new <= s + opts.slack * abs(s):
                break
            tau *= opts.backtrack
        else:
            break
        g_new = action_gradient(params, y)
        d_new = riesz(g_new)
        # BB step in the D metric
        sx = y - x
        sg = d_new - dvec
        denom = quadratic_pair(sx, sg)
        tau = quadratic_pair(sx, sx) / denom if denom > 0 else opts.step0
        x, s, g, dvec = y, s_new, g_new, d_new
        gnorm = math.sqrt(max(g.dot(dvec), 0.0))
        trace.append((s, gnorm))
    rep = report(params, x)
    raise NotConverged(f"no convergence after {len(trace) - 1} iterations", x, rep, trace)


def quadratic_pair(a: DiscreteState, b: DiscreteState) -> float:
    """D inner product of two states."""
    disc = a.disc
    return float(a.f @ disc.matvec(b.f) + disc.beta * a.q * b.q)


def d_normalize(state: DiscreteState) -> DiscreteState:
    n = math.sqrt(quadratic(state))
    if not n > 0:
        raise ParameterError("cannot normalize the zero state")
    return state.scaled(1.0 / n)


def random_directions(disc: Discretization, count: int, seed: int) -> list[DiscreteState]:
    """Smooth random radial states, D-normalized.

    ``f`` is a random combination of Gaussian bumps and the charge is drawn
    from a standard normal.
    """
    rng = np.random.default_rng(seed)
    s = math.sqrt(disc.params.lam)
    r = disc.nodes
    out = []
    for _ in range(count):
        centers = rng.uniform(0.0, 4.0 / s, size=3)
        widths = rng.uniform(0.3, 2.0, size=3) / s
        amps = rng.normal(size=3)
        f = sum(a * np.exp(-(((r - c) / w) ** 2)) for a, c, w in zip(amps, centers, widths))
        out.append(d_normalize(DiscreteState(disc, f, rng.normal())))
    return out


@dataclass
class GeometryReport:
    radii: list
    min_action: list
    rho_star: float | None
    r_star: list
    r_star_exact: list
    mountain_pass_level: float
    best_direction: int
    all_negative: bool
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.__dict__, fh, indent=2, sort_keys=True)


def mountain_pass_probe(params: Params, directions, radii, seed: int | None = None) -> GeometryReport:
    """Small-sphere positivity and ray negativity along D-normalized directions.

    For each radius the minimum of ``S(rho g)`` over the directions is
    reported; ``rho_star`` is the largest listed radius up to which every
    minimum is positive.  Along each ray the first ``R`` with ``S(R g) < 0``
    is located by doubling and bisection; ``r_star_exact`` is the closed form
    ``((p+1)/(2 N(g)))^{1/(p-1)}`` for comparison.  The mountain-pass level is
    the maximum of ``S`` on the segment ``[0, R* g]`` for the direction with
    the lowest such maximum.
    """
    p = params.p
    for g in directions:
        _check_params(params, g)
        if abs(quadratic(g) - 1.0) > 1e-10:
            raise ParameterError("directions must be D-normalized")
    radii = sorted(float(x) for x in radii)
    mins = [min(action(params, g.scaled(rho)) for g in directions) for rho in radii]
    rho_star = None
    for rho, m in zip(radii, mins):
        if m > 0 and rho > 0:
            rho_star = rho
        elif rho > 0:
            break
    r_star = []
    exact = []
    levels = []
    for g in directions:
        nl = nonlinear(g)
        exact.append(((p + 1) / (2 * nl)) ** (1 / (p - 1)))
        lo, hi = 0.0, 1.0
        while action(params, g.scaled(hi)) >= 0:
            lo, hi = hi, 2 * hi
            if hi > 1e12:
                hi = math.inf
                break
        if math.isfinite(hi):
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if action(params, g.scaled(mid)) < 0:
                    hi = mid
                else:
                    lo = mid
        r_star.append(hi)
        ts = np.linspace(0.0, hi if math.isfinite(hi) else 1.0, 401)
        levels.append(max(action(params, g.scaled(t)) for t in ts))
    best = int(np.argmin(levels))
    return GeometryReport(
        radii, mins, rho_star, r_star, exact, float(levels[best]), best,
        all(math.isfinite(x) for x in r_star), seed,
    )


def l2_control_bound(params: Params, state: DiscreteState) -> tuple[float, float]:
    """``(||u||_2^2, (2/lam + 2 ||G||_2^2 / beta) ||u||_D^2)``."""
    g2 = green_norm(params.d, params.lam, 2.0) ** 2
    dq = quadratic(state)
    return l2_norm_sq(state), (2.0 / params.lam + 2.0 * g2 / state.disc.beta) * dq
