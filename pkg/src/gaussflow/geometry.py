"""Curvature and shape diagnostics of a convex body given by its support function."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .grid import Grid, differentiate, integrate

# eigenvalues of the radii matrix below this count as loss of convexity
CONVEXITY_EPS = 1e-10


class ConvexityLostError(RuntimeError):
    def __init__(self, node, lambda_min: float):
        self.node = node
        self.lambda_min = lambda_min
        super().__init__(f"convexity lost at node {node}: smallest principal radius {lambda_min:.6g}")


class InvalidCenterError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SupportField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(f"support values have shape {vals.shape}, grid expects {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("support function must be finite at every node")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid, func: Callable[[np.ndarray], np.ndarray]) -> "SupportField":
        """Sample ``func`` at the grid normals (array of shape ``(..., 3)``)."""
        return cls(grid, func(grid.normals))

    @classmethod
    def sphere(cls, grid: Grid, radius: float = 1.0) -> "SupportField":
        return cls(grid, np.full(grid.shape, float(radius)))

    @classmethod
    def ellipsoid(cls, grid: Grid, a: float, c: float) -> "SupportField":
        """Spheroid with equatorial semi-axis ``a`` and polar semi-axis ``c``."""
        return cls.from_function(
            grid, lambda x: np.sqrt(a * a * (x[..., 0] ** 2 + x[..., 1] ** 2) + c * c * x[..., 2] ** 2)
        )

    def translated(self, v) -> "SupportField":
        """Support function of the body shifted by the vector ``v``."""
        return SupportField(self.grid, self.values + self.grid.normals @ np.asarray(v, dtype=float))

    def scaled(self, c: float) -> "SupportField":
        return SupportField(self.grid, c * self.values)

    def is_positive(self) -> bool:
        return bool(np.all(self.values > 0))


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Per-node curvature data; ``radii`` are sorted ascending."""

    W: np.ndarray
    radii: np.ndarray
    kappa: np.ndarray
    K: np.ndarray
    H: np.ndarray
    A2: np.ndarray
    pinch: np.ndarray
    n: int = 2

    @property
    def lambda_min(self) -> float:
        return float(self.radii[..., 0].min())


def _sym2_eigvals(W: np.ndarray) -> np.ndarray:
    a, b, d = W[..., 0, 0], W[..., 0, 1], W[..., 1, 1]
    mean = 0.5 * (a + d)
    disc = np.hypot(0.5 * (a - d), b)
    return np.stack([mean - disc, mean + disc], axis=-1)


def radii_matrix(u: SupportField) -> np.ndarray:
    """W = Hess u + u I in the orthonormal frame."""
    W = differentiate(u.values, u.grid).hess.copy()
    W[..., 0, 0] += u.values
    W[..., 1, 1] += u.values
    return W


def curvature_field(u: SupportField) -> CurvatureField:
    W = radii_matrix(u)
    lam = _sym2_eigvals(W)
    lo = lam[..., 0]
    if not np.all(lo > CONVEXITY_EPS):
        # NaN radii count as a failure too
        idx = np.unravel_index(np.argmin(np.where(np.isnan(lo), -np.inf, lo)), lo.shape)
        node = idx[0] if len(idx) == 1 else idx
        raise ConvexityLostError(node, float(lo[idx]))
    kappa = 1.0 / lam
    K = 1.0 / (lam[..., 0] * lam[..., 1])
    H = kappa.sum(axis=-1)
    A2 = (kappa**2).sum(axis=-1)
    return CurvatureField(W=W, radii=lam, kappa=kappa, K=K, H=H, A2=A2, pinch=K / H**2)


def embed_surface(u: SupportField, check: bool = True) -> np.ndarray:
    """Surface points F = grad u + u x, shape ``grid.shape + (3,)``.

    Axisymmetric grids return the profile on the x-z meridian.
    """
    if check:
        curvature_field(u)
    grid = u.grid
    d = differentiate(u.values, grid)
    e_t, e_p = grid.frame
    return d.grad[..., :1] * e_t + d.grad[..., 1:] * e_p + u.values[..., None] * grid.normals


def _moment_matrix(grid: Grid) -> np.ndarray:
    x = grid.normals
    if grid.axisymmetric:
        # longitude integrated analytically: <x1^2> = <x2^2> = sin^2/2
        s2 = integrate(0.5 * x[..., 0] ** 2, grid)
        return np.diag([s2, s2, integrate(x[..., 2] ** 2, grid)])
    x = x.reshape(-1, 3)
    return (x * grid.weights.reshape(-1, 1)).T @ x


def steiner_point(u: SupportField) -> np.ndarray:
    """First moment of u normalized by the discrete moment matrix.

    The normalization (3 / 4 pi in the continuum) is taken from the
    quadrature itself so that translating the body moves the point by
    exactly the same vector.
    """
    grid = u.grid
    x = grid.normals
    M = _moment_matrix(grid)
    if grid.axisymmetric:
        return np.array([0.0, 0.0, integrate(x[..., 2] * u.values, grid) / M[2, 2]])
    m = x.reshape(-1, 3).T @ (u.values * grid.weights).ravel()
    return np.linalg.solve(M, m)


def radii_about(u: SupportField, center) -> tuple[float, float]:
    """Min and max of u(x) - center . x over the grid (centered in/out radii)."""
    c = np.asarray(center, dtype=float)
    grid = u.grid
    x = grid.normals
    if grid.axisymmetric:
        # exact extremes over longitude for an off-axis center
        rho = float(np.hypot(c[0], c[1]))
        base = u.values - c[2] * x[..., 2]
        lateral = rho * np.sin(grid.theta)
        lo, hi = base - lateral, base + lateral
    else:
        lo = hi = u.values - x @ c
    r_in, R_out = float(lo.min()), float(hi.max())
    if r_in <= 0:
        raise InvalidCenterError(f"center {c.tolist()} is not strictly inside the body (min support {r_in:.6g})")
    return r_in, R_out


@dataclass(frozen=True, eq=False)
class DeficitField:
    g: np.ndarray
    g_sigma: np.ndarray
    sigma: float


def deficits(cf: CurvatureField, sigma: float = 0.0) -> DeficitField:
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    g = 1.0 / cf.n**cf.n - cf.pinch
    g_sigma = g if sigma == 0 else cf.H**sigma * g
    return DeficitField(g=g, g_sigma=g_sigma, sigma=float(sigma))


def volume_proxy(u: SupportField, cf: CurvatureField | None = None) -> float:
    """Enclosed volume (1/3) int u dS, with dS = (product of radii) dx."""
    cf = curvature_field(u) if cf is None else cf
    return integrate(u.values * cf.radii[..., 0] * cf.radii[..., 1], u.grid) / 3.0


def lemma_ratios(cf: CurvatureField) -> dict:
    """Empirical minima of kappa_min / H and (n|A|^2 - H^2) / (H^2 g).

    These only describe the sampled surface; they are not bounds.
    """
    H2 = cf.H**2
    g = 1.0 / cf.n**cf.n - cf.pinch
    gap = (cf.n * cf.A2 - H2) / H2
    mask = g > 1e-12
    return {
        "kappa_min_over_H": float((cf.kappa.min(axis=-1) / cf.H).min()),
        "gap_over_deficit": float((gap[mask] / g[mask]).min()) if mask.any() else float("nan"),
    }


def write_obj(u: SupportField, path, longitudes: int | None = None) -> Path:
    """Write the embedded surface as a Wavefront OBJ mesh.

    Axisymmetric profiles are revolved about the z axis with ``longitudes``
    copies (default 2N). Pole caps are single polygons.
    """
    grid = u.grid
    pts = embed_surface(u)
    if grid.axisymmetric:
        M = longitudes or 2 * grid.N
        ph = np.arange(M) * 2.0 * np.pi / M
        r, z = pts[:, 0], pts[:, 2]
        pts = np.stack(
            [r[:, None] * np.cos(ph), r[:, None] * np.sin(ph), np.repeat(z[:, None], M, axis=1)], axis=-1
        )
    nt, M = pts.shape[:2]
    idx = np.arange(nt * M).reshape(nt, M) + 1
    lines = [f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}" for p in pts.reshape(-1, 3)]
    lines.append("f " + " ".join(str(i) for i in idx[0][::-1]))
    for j in range(nt - 1):
        for k in range(M):
            k1 = (k + 1) % M
            lines.append(f"f {idx[j, k]} {idx[j + 1, k]} {idx[j + 1, k1]} {idx[j, k1]}")
    lines.append("f " + " ".join(str(i) for i in idx[-1]))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path
