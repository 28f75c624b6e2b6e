"""Thin adaptive-quadrature layer used by the closed-form engine.

Wraps QUADPACK (scipy.integrate.quad) behind the toolkit's tolerance config.
Integrands here are piecewise smooth with kinks at analytically known radii
(clamp points of the effective-angle helpers, corner crossings of the
orientation CDF); callers pass those as breakpoints so the subdivision does
not have to hunt for them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, value, error_estimate):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 200

    def __post_init__(self):
        if self.abs_tol <= 0.0 or self.rel_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 10:
            raise ValueError("need at least 10 subdivisions")

    def halved(self):
        return QuadratureConfig(self.abs_tol / 2.0, self.rel_tol / 2.0, self.max_subdivisions)


def integrate_adaptive(f, a, b, config, breakpoints=()):
    """Integral of f over [a, b] with an error estimate; raises on non-convergence.

    ``breakpoints`` are pre-split locations (values outside (a, b) are dropped).
    Returns (value, error_estimate).
    """
    if b <= a:
        return 0.0, 0.0
    pts = np.asarray([p for p in breakpoints if a < p < b], float)
    pts = np.unique(pts) if pts.size else None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(
                f, a, b,
                epsabs=config.abs_tol,
                epsrel=config.rel_tol,
                limit=config.max_subdivisions,
                points=pts,
            )
        except integrate.IntegrationWarning as warn:
            # retry once without erroring to recover the achieved estimate
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            value, err = integrate.quad(
                f, a, b,
                epsabs=config.abs_tol,
                epsrel=config.rel_tol,
                limit=config.max_subdivisions,
                points=pts,
            )
            bound = max(config.abs_tol, config.rel_tol * abs(value))
            if err > max(bound * 100.0, 1e-7):
                raise QuadratureError(
                    f"quadrature did not converge: estimate {err:.3e} for value {value:.6e} ({warn})",
                    value,
                    err,
                ) from warn
    return value, err
