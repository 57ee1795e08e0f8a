"""Radial solutions of the nonlinear Schroedinger equation with a point interaction in d = 2, 3."""

__version__ = "0.1.0"

from .model import FREE, UNCONSTRAINED, Params, ParameterError, Regime, beta, lambda_alpha  # noqa: E402

__all__ = ["FREE", "UNCONSTRAINED", "Params", "ParameterError", "Regime", "beta", "lambda_alpha", "__version__"]
