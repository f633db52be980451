"""Latitude-longitude discretization of the unit sphere S^2.

Nodes are cell centered in colatitude so no node sits on a pole; pole
symmetry is handled by reflecting the field across the pole (shifting
longitude by pi in the full mode). Derivatives use five-point centered
stencils whose normalizations are chosen so that constants and first
spherical harmonics (cos, sin in each coordinate) are differentiated
exactly. The stencils are fourth-order accurate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

AXISYMMETRIC = "axisymmetric"
FULL = "full"
MODES = (AXISYMMETRIC, FULL)
MIN_RESOLUTION = 8


class ResolutionError(ValueError):
    """Raised when a grid is requested with too few nodes."""


@dataclass(frozen=True, eq=False)
class Grid:
    mode: str
    N: int
    theta: np.ndarray
    phi: np.ndarray | None
    weights: np.ndarray
    dtheta: float
    dphi: float = field(default=2.0 * np.pi)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.weights.shape

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def axisymmetric(self) -> bool:
        return self.mode == AXISYMMETRIC

    @cached_property
    def angles(self) -> tuple[np.ndarray, np.ndarray]:
        """Node colatitude and longitude broadcast to the field shape.

        In axisymmetric mode the longitude is 0 (the x-z meridian).
        """
        if self.axisymmetric:
            return self.theta, np.zeros_like(self.theta)
        return np.meshgrid(self.theta, self.phi, indexing="ij")

    @cached_property
    def normals(self) -> np.ndarray:
        """Unit outward normals x in R^3, shape ``grid.shape + (3,)``."""
        th, ph = self.angles
        st = np.sin(th)
        return np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=-1)

    @cached_property
    def frame(self) -> tuple[np.ndarray, np.ndarray]:
        """Orthonormal tangent frame (e_theta, e_phi) at every node."""
        th, ph = self.angles
        e_theta = np.stack(
            [np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], axis=-1
        )
        e_phi = np.stack([-np.sin(ph), np.cos(ph), np.zeros_like(th)], axis=-1)
        return e_theta, e_phi

    @cached_property
    def spacing(self) -> np.ndarray:
        """Local angular node spacing (the smaller of the two directions)."""
        th, _ = self.angles
        if self.axisymmetric:
            return np.full(self.shape, self.dtheta)
        return np.minimum(self.dtheta, np.sin(th) * self.dphi)


def build_grid(mode: str, N: int) -> Grid:
    """Build a cell-centered grid on S^2.

    ``axisymmetric`` gives N colatitude nodes theta_j = (j + 1/2) pi / N;
    ``full`` gives N colatitudes times 2N longitudes phi_k = k pi / N.
    Weights are exact cell areas and sum to 4 pi.
    """
    if mode not in MODES:
        raise ValueError(f"unknown grid mode {mode!r}; expected one of {MODES}")
    if int(N) != N or N < MIN_RESOLUTION:
        raise ResolutionError(f"grid resolution N={N} too coarse (need N >= {MIN_RESOLUTION})")
    N = int(N)
    dtheta = np.pi / N
    theta = (np.arange(N) + 0.5) * dtheta
    edges = np.arange(N + 1) * dtheta
    band = 2.0 * np.pi * (np.cos(edges[:-1]) - np.cos(edges[1:]))
    if mode == AXISYMMETRIC:
        return Grid(mode, N, theta, None, band, dtheta)
    M = 2 * N
    dphi = 2.0 * np.pi / M
    phi = np.arange(M) * dphi
    weights = np.repeat(band[:, None] / M, M, axis=1)
    return Grid(mode, N, theta, phi, weights, dtheta, dphi)


@dataclass(frozen=True, eq=False)
class DerivativeBundle:
    """Covariant derivatives in the (e_theta, e_phi) frame.

    ``grad`` has shape ``grid.shape + (2,)`` and ``hess`` has shape
    ``grid.shape + (2, 2)``; ``hess`` is symmetric.
    """

    grad: np.ndarray
    hess: np.ndarray


def _shift(p: np.ndarray, k: int, axis: int) -> np.ndarray:
    # p carries two ghost layers on both sides along `axis`
    sl = [slice(None)] * p.ndim
    sl[axis] = slice(2 + k, p.shape[axis] - 2 + k)
    return p[tuple(sl)]


def _d1(p: np.ndarray, h: float, axis: int) -> np.ndarray:
    norm = 16.0 * np.sin(h) - 2.0 * np.sin(2.0 * h)
    s = lambda k: _shift(p, k, axis)  # noqa: E731
    return (s(-2) - 8.0 * s(-1) + 8.0 * s(1) - s(2)) / norm


def _d2(p: np.ndarray, h: float, axis: int) -> np.ndarray:
    norm = 30.0 - 32.0 * np.cos(h) + 2.0 * np.cos(2.0 * h)
    s = lambda k: _shift(p, k, axis)  # noqa: E731
    return (-s(-2) + 16.0 * s(-1) - 30.0 * s(0) + 16.0 * s(1) - s(2)) / norm


def _pad_theta(u: np.ndarray, full: bool) -> np.ndarray:
    if not full:
        return np.concatenate([u[1::-1], u, u[:-3:-1]])
    half = u.shape[1] // 2
    north = np.roll(u[1::-1], half, axis=1)
    south = np.roll(u[:-3:-1], half, axis=1)
    return np.concatenate([north, u, south], axis=0)


def differentiate(u, grid: Grid) -> DerivativeBundle:
    """Gradient and Hessian of a scalar field on the unit sphere.

    Accepts a raw array or anything with a ``values`` attribute. The
    axisymmetric Hessian is diag(u_tt, u_t cot t).
    """
    u = np.asarray(getattr(u, "values", u), dtype=float)
    if u.shape != grid.shape:
        raise ValueError(f"field shape {u.shape} does not match grid shape {grid.shape}")
    h = grid.dtheta
    th, _ = grid.angles
    cot = np.cos(th) / np.sin(th)

    if grid.axisymmetric:
        p = _pad_theta(u, full=False)
        u_t = _d1(p, h, 0)
        u_tt = _d2(p, h, 0)
        grad = np.stack([u_t, np.zeros_like(u)], axis=-1)
        hess = np.zeros(u.shape + (2, 2))
        hess[..., 0, 0] = u_tt
        hess[..., 1, 1] = u_t * cot
        return DerivativeBundle(grad, hess)

    st = np.sin(th)
    hp = grid.dphi
    p = _pad_theta(u, full=True)
    u_t = _d1(p, h, 0)
    u_tt = _d2(p, h, 0)
    pp = np.pad(p, ((0, 0), (2, 2)), mode="wrap")
    p_phi = _d1(pp, hp, 1)  # u_phi on the theta-padded rows
    u_p = p_phi[2:-2]
    u_pp = _d2(np.pad(u, ((0, 0), (2, 2)), mode="wrap"), hp, 1)
    u_tp = _d1(p_phi, h, 0)

    hess = np.empty(u.shape + (2, 2))
    hess[..., 0, 0] = u_tt
    hess[..., 1, 1] = u_pp / st**2 + cot * u_t
    off = (u_tp - cot * u_p) / st
    hess[..., 0, 1] = off
    hess[..., 1, 0] = off
    grad = np.stack([u_t, u_p / st], axis=-1)
    return DerivativeBundle(grad, hess)


def integrate(field, grid: Grid) -> float:
    """Area-weighted sum over the sphere."""
    f = np.asarray(getattr(field, "values", field), dtype=float)
    return float(np.sum(np.broadcast_to(f, grid.shape) * grid.weights))
