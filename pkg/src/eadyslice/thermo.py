"""Exner pressure closure and its partial derivatives.

The only place the equation of state appears. Pi is the nondimensional
pressure (p/p0)^(R/cp); with the ideal-gas law p = D R theta_s Pi it
closes to Pi = (D R theta_s / p0)^(R/cv).
"""

from __future__ import annotations

import numpy as np

from .domain import PhysicalConstants


class ThermoDomainError(ValueError):
    """Non-physical density or temperature handed to the equation of state."""


def _check_positive(D, theta_s):
    if np.any(np.asarray(D) <= 0):
        raise ThermoDomainError("density must be positive")
    if np.any(np.asarray(theta_s) <= 0):
        raise ThermoDomainError("potential temperature must be positive")


def exner(D, theta_s, c: PhysicalConstants):
    """Exner pressure Pi = (D R theta_s / p0)^(R/cv). Scalar or array."""
    _check_positive(D, theta_s)
    return (np.asarray(D) * c.R * np.asarray(theta_s) / c.p0) ** (c.R / c.cv)


def exner_partials(D, theta_s, c: PhysicalConstants):
    """(dPi/dD, dPi/dtheta_s) = (R/(cv D), R/(cv theta_s)) * Pi."""
    pi = exner(D, theta_s, c)
    k = c.R / c.cv
    return k * pi / np.asarray(D), k * pi / np.asarray(theta_s)


def density_from_exner(pi, theta_s, c: PhysicalConstants):
    """Invert the closure: D = p0 Pi^(cv/R) / (R theta_s)."""
    if np.any(np.asarray(pi) <= 0):
        raise ThermoDomainError("Exner pressure must be positive")
    if np.any(np.asarray(theta_s) <= 0):
        raise ThermoDomainError("potential temperature must be positive")
    return c.p0 * np.asarray(pi) ** (c.cv / c.R) / (c.R * np.asarray(theta_s))
