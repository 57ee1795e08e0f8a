"""Problem parameters and the scalar quantities attached to a point interaction.

The point-interaction Laplacian ``-Delta_alpha`` in dimension 2 or 3 is fixed
by the extension parameter ``alpha``; ``alpha = FREE`` is the ordinary
Laplacian.  Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

#: Euler-Mascheroni constant to 20 digits.
EULER_GAMMA = 0.57721566490153286061


class ParameterError(ValueError):
    """Raised for parameters outside the admissible range of an operation."""


class Alpha(enum.Enum):
    """Distinguished non-numeric values of the extension parameter."""

    FREE = "free"  # alpha = infinity, the free Laplacian
    UNCONSTRAINED = "unconstrained"  # weak regime: every real alpha fits

    def __repr__(self) -> str:
        return f"Alpha.{self.name}"


FREE = Alpha.FREE
UNCONSTRAINED = Alpha.UNCONSTRAINED


class Regime(enum.Enum):
    STRONG = "strong"
    WEAK = "weak"
    OUT_OF_RANGE = "out_of_range"


def is_finite_alpha(alpha) -> bool:
    return not isinstance(alpha, Alpha)


@dataclass(frozen=True)
class Params:
    """Data of ``(-Delta_alpha + lam) u = sigma |u|^(p-1) u``.

    ``sigma = 0`` switches the nonlinearity off; it is only meant for
    diagnostics of the linear problem.
    """

    d: int
    sigma: int
    p: float
    lam: float
    alpha: float | Alpha = FREE

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ParameterError(f"dimension must be 2 or 3, got {self.d}")
        if self.sigma not in (-1, 0, 1):
            raise ParameterError(f"sigma must be -1, 0 or +1, got {self.sigma}")
        if not self.p > 1:
            raise ParameterError(f"p must exceed 1, got {self.p}")
        if not self.lam > 0:
            raise ParameterError(f"lambda must be positive, got {self.lam}")
        if is_finite_alpha(self.alpha):
            if not math.isfinite(self.alpha):
                raise ParameterError("alpha must be finite or FREE")
            object.__setattr__(self, "alpha", float(self.alpha))
        elif self.alpha is not FREE:
            raise ParameterError("alpha must be a real number or FREE")

    @property
    def regime(self) -> Regime:
        return regime_classify(self.d, self.p)

    @property
    def sqrt_lam(self) -> float:
        return math.sqrt(self.lam)

    def replace(self, **changes) -> "Params":
        fields = dict(d=self.d, sigma=self.sigma, p=self.p, lam=self.lam, alpha=self.alpha)
        fields.update(changes)
        return Params(**fields)

    def require_solvable(self) -> None:
        """Check the range in which the solvers operate (``p < 3`` for d = 3)."""
        if self.regime is Regime.OUT_OF_RANGE:
            raise ParameterError(f"d=3 requires p < 3, got p={self.p}")

    def to_record(self) -> dict[str, str]:
        alpha = "free" if self.alpha is FREE else repr(self.alpha)
        return {
            "d": str(self.d),
            "sigma": str(self.sigma),
            "p": repr(float(self.p)),
            "lambda": repr(float(self.lam)),
            "alpha": alpha,
        }

    @classmethod
    def from_record(cls, record: Mapping[str, str]) -> "Params":
        missing = {"d", "sigma", "p", "lambda"} - set(record)
        if missing:
            raise ParameterError(f"missing keys: {sorted(missing)}")
        raw_alpha = str(record.get("alpha", "free")).strip()
        alpha = FREE if raw_alpha.lower() in ("free", "inf", "infinity") else float(raw_alpha)
        try:
            return cls(
                d=int(record["d"]),
                sigma=int(record["sigma"]),
                p=float(record["p"]),
                lam=float(record["lambda"]),
                alpha=alpha,
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ParameterError):
                raise
            raise ParameterError(str(exc)) from exc


@dataclass(frozen=True)
class RegularityRange:
    """Range of Sobolev indices ``s`` with ``f`` in ``H^s``."""

    s_low: float
    s_high: float
    low_open: bool
    high_open: bool

    @property
    def is_point(self) -> bool:
        return self.s_low == self.s_high

    def __contains__(self, s: float) -> bool:
        above = s > self.s_low if self.low_open else s >= self.s_low
        below = s < self.s_high if self.high_open else s <= self.s_high
        return above and below


def _beta_shift(d: int, lam: float) -> float:
    # beta_alpha(lam) - alpha
    if d == 2:
        return EULER_GAMMA / (2 * math.pi) + math.log(math.sqrt(lam) / 2) / (2 * math.pi)
    return math.sqrt(lam) / (4 * math.pi)


def beta(params: Params, lam: float | None = None) -> float:
    """``beta_alpha(lam)``; ``lam`` defaults to ``params.lam``."""
    if params.alpha is FREE:
        raise ParameterError("beta is undefined for alpha = FREE (free Laplacian)")
    lam = params.lam if lam is None else lam
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    return params.alpha + _beta_shift(params.d, lam)


def lambda_alpha(params: Params) -> float:
    """Positive root of ``beta_alpha``, or 0 where no bound state exists."""
    alpha = params.alpha
    if alpha is FREE:
        return 0.0
    if params.d == 2:
        return 4.0 * math.exp(-4.0 * math.pi * alpha - 2.0 * EULER_GAMMA)
    if alpha < 0:
        return 16.0 * math.pi**2 * alpha**2
    return 0.0


def regime_classify(d: int, p: float) -> Regime:
    if d == 2 or p < 2:
        return Regime.STRONG
    if p < 3:
        return Regime.WEAK
    return Regime.OUT_OF_RANGE


def sobolev_regularity(d: int, p: float) -> RegularityRange:
    """Best Sobolev regularity of the regular part ``f`` of a singular solution."""
    regime = regime_classify(d, p)
    if regime is Regime.OUT_OF_RANGE:
        raise ParameterError(f"no regularity statement for d={d}, p={p}")
    if d == 2 or p < 1.5:
        return RegularityRange(2.0, 2.0, False, False)
    if regime is Regime.STRONG:
        return RegularityRange(1.5, 3.5 - p, True, True)
    return RegularityRange(0.5, 3.5 - p, True, True)


def bootstrap_ladder(p: float, eps: float = 0.01, theta0_inv: float | None = None):
    """Integrability ladder ``1/theta_k = 1/theta_0 + k (p - 3)/3``.

    The sequence runs up to and including its first negative entry; ``K`` is
    that index.  Arithmetic is exact (``Fraction``) so the steps are exactly
    ``(p - 3)/3``.  ``theta0_inv`` defaults to ``1/3 - eps``.

    Returns
    -------
    ladder : list of Fraction
    K : int
    """
    if not 1 < p < 3:
        raise ParameterError(f"the ladder descends only for 1 < p < 3, got {p}")
    if theta0_inv is None:
        if not eps > 0:
            raise ParameterError("eps must be positive")
        theta0_inv = 1.0 / 3.0 - eps
    if not 0 < theta0_inv < 0.5:
        raise ParameterError("1/theta_0 must lie in (0, 1/2)")
    start = Fraction(theta0_inv)
    step = (Fraction(p) - 3) / 3
    ladder = [start]
    while ladder[-1] >= 0:
        ladder.append(ladder[-1] + step)
    return ladder, len(ladder) - 1


def alpha_from_charge(q: float, f0: float, lam: float, d: int) -> float | Alpha:
    """The unique ``alpha`` with ``beta_alpha(lam) q = f0``; FREE when ``q = 0``."""
    if q == 0:
        return FREE
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    if d not in (2, 3):
        raise ParameterError(f"dimension must be 2 or 3, got {d}")
    return f0 / q - _beta_shift(d, lam)
