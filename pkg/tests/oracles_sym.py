"""Symbolic brute-force oracle: differentiate the spheroid support function exactly."""

import numpy as np
import sympy as sp

_t, _a, _c = sp.symbols("t a c", positive=True)
_u = sp.sqrt(_a**2 * sp.sin(_t) ** 2 + _c**2 * sp.cos(_t) ** 2)
_l1 = sp.diff(_u, _t, 2) + _u
_l2 = sp.diff(_u, _t) * sp.cos(_t) / sp.sin(_t) + _u
_radii = sp.lambdify((_t, _a, _c), (_l1, _l2), "numpy")


def spheroid_radii_symbolic(theta, a, c):
    l1, l2 = _radii(np.asarray(theta, dtype=float), a, c)
    return np.broadcast_to(l1, np.shape(theta)), np.broadcast_to(l2, np.shape(theta))


def spheroid_K_symbolic(theta, a, c):
    l1, l2 = spheroid_radii_symbolic(theta, a, c)
    return 1.0 / (l1 * l2)
