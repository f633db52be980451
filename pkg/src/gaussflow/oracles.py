"""Closed-form reference solutions used by the convergence test and the test suite."""

from __future__ import annotations

import numpy as np


def spheroid_support(theta, a: float, c: float):
    return np.sqrt(a * a * np.sin(theta) ** 2 + c * c * np.cos(theta) ** 2)


def spheroid_radii(theta, a: float, c: float):
    """Principal radii (meridian, parallel) at the point with normal colatitude theta."""
    u = spheroid_support(theta, a, c)
    return a * a * c * c / u**3, a * a / u


def spheroid_gauss_curvature(theta, a: float, c: float):
    return spheroid_support(theta, a, c) ** 4 / (a**4 * c * c)


def sphere_radius(t, r0: float, alpha: float = 1.0, n: int = 2):
    """Radius of a sphere shrinking with speed K**alpha: dr/dt = -r**(-n alpha)."""
    p = n * alpha + 1.0
    return np.maximum(r0**p - p * np.asarray(t, dtype=float), 0.0) ** (1.0 / p)


def sphere_extinction_time(r0: float, alpha: float = 1.0, n: int = 2) -> float:
    p = n * alpha + 1.0
    return r0**p / p
