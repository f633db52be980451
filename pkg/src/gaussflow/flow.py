"""Explicit time stepping of the support function under du/dt = -f(K)."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import (
    ConvexityLostError,
    CurvatureField,
    SupportField,
    curvature_field,
    radii_about,
    steiner_point,
    volume_proxy,
)
from .grid import build_grid
from .monitors import MonitorSeries, record_row
from .speeds import SpeedSpec

log = logging.getLogger(__name__)

RUNNING = "running"
EXTINCT = "extinct"
CONVEXITY_LOST = "convexity_lost"
COMPLETED = "completed"


@dataclass(frozen=True)
class FlowState:
    t: float
    u: SupportField
    steps: int = 0
    dt: float = 0.0
    status: str = RUNNING


@dataclass
class RunConfig:
    """Everything needed for one run.

    ``shape`` is a dict: {"kind": "sphere", "radius": r},
    {"kind": "ellipsoid", "a": a, "c": c} or {"kind": "custom", "values": [...]}.
    """

    shape: dict
    speed: SpeedSpec
    mode: str = "axisymmetric"
    N: int = 64
    theta: float = 1.0
    t_max: float = 1.0
    c_cfl: float = 0.2
    r_min: float = 0.05
    sigmas: tuple = (0.1,)
    record_stride: int = 100
    max_steps: int | None = None
    scheme: str = "ssp_rk2"
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("initial scale theta must be positive")
        if not 0 < self.c_cfl <= 1:
            raise ValueError("c_cfl must lie in (0, 1]")
        if not self.r_min > 0:
            raise ValueError("r_min must be positive")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    def describe(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k not in ("speed", "extras")}
        d["sigmas"] = list(self.sigmas)
        d["speed"] = self.speed.describe()
        return d

    def digest(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def initial_support(config: RunConfig) -> SupportField:
    grid = build_grid(config.mode, config.N)
    shape = config.shape
    kind = shape.get("kind")
    if kind == "sphere":
        u = SupportField.sphere(grid, shape.get("radius", 1.0))
    elif kind == "ellipsoid":
        u = SupportField.ellipsoid(grid, shape["a"], shape["c"])
    elif kind == "custom":
        u = SupportField(grid, np.asarray(shape["values"], dtype=float).reshape(grid.shape))
    else:
        raise ValueError(f"unknown shape kind {kind!r}")
    return u.scaled(config.theta)


def stable_dt(state: FlowState, spec: SpeedSpec, c_cfl: float = 0.2, t_max: float | None = None,
              cf: CurvatureField | None = None) -> float:
    """Explicit-Euler step from the linearized diffusion f'(K) K W^-1.

    dt = c_cfl * min(dx^2 / (2 n D_max)) with dx the local angular spacing
    and D_max = f'(K) K / lambda_min; capped at 1e-2 * t_max.
    """
    cf = curvature_field(state.u) if cf is None else cf
    _, df, _ = spec.evaluator(cf.K)
    D = df * cf.K / cf.radii[..., 0]
    dx = state.u.grid.spacing
    with np.errstate(divide="ignore"):
        local = np.where(D > 0, dx**2 / (2 * cf.n * D), np.inf)
    dt = c_cfl * float(local.min())
    if t_max is not None:
        dt = min(dt, 1e-2 * t_max)
    if not math.isfinite(dt):
        raise ValueError("no finite stable step: the speed has no diffusion here and no t_max cap was given")
    return dt


EULER = "euler"
SSP_RK2 = "ssp_rk2"
SCHEMES = (EULER, SSP_RK2)


def _advance(state, spec, c_cfl, t_max, cf, scheme=SSP_RK2):
    if scheme not in SCHEMES:
        raise ValueError(f"unknown time scheme {scheme!r}")
    dt = stable_dt(state, spec, c_cfl, t_max, cf)
    if t_max is not None:
        dt = min(dt, t_max - state.t)
    grid, u = state.u.grid, state.u.values
    try:
        speed = spec.evaluator(cf.K)[0]
        u_new = SupportField(grid, u - dt * speed)
        cf_new = curvature_field(u_new)
        if scheme == SSP_RK2:
            # average of two Euler stages (Heun / Shu-Osher form)
            speed = 0.5 * (speed + spec.evaluator(cf_new.K)[0])
            u_new = SupportField(grid, u - dt * speed)
            cf_new = curvature_field(u_new)
    except ConvexityLostError:
        return replace(state, status=CONVEXITY_LOST), cf
    t_new = t_max if t_max is not None and dt == t_max - state.t else state.t + dt
    return FlowState(t_new, u_new, state.steps + 1, dt, RUNNING), cf_new


def step(state: FlowState, spec: SpeedSpec, c_cfl: float = 0.2, t_max: float | None = None,
         scheme: str = SSP_RK2) -> FlowState:
    """Advance by one stable step.

    ``euler`` is u <- u - dt f(K(u)); ``ssp_rk2`` averages the speeds of
    two such stages. Raises ConvexityLostError when the input is not
    convex; if the update loses convexity the returned state keeps the
    previous u and has status ``convexity_lost``.
    """
    if state.status != RUNNING:
        raise ValueError(f"cannot step a state with status {state.status!r}")
    new, _ = _advance(state, spec, c_cfl, t_max, curvature_field(state.u), scheme)
    return new


def run(config: RunConfig) -> tuple[MonitorSeries, FlowState]:
    """Integrate until t_max, extinction (r_in < r_min) or loss of convexity."""
    spec = config.speed
    u0 = initial_support(config)
    cf = curvature_field(u0)  # raises on non-convex initial data
    state = FlowState(0.0, u0)
    series = MonitorSeries(metadata={"config_hash": config.digest(), "speed": spec.describe()})
    series.append(record_row(state, config.sigmas))
    last_recorded = 0
    while True:
        if state.t >= config.t_max:
            state = replace(state, status=COMPLETED)
            break
        if config.max_steps is not None and state.steps >= config.max_steps:
            break
        new, cf = _advance(state, spec, config.c_cfl, config.t_max, cf, config.scheme)
        if new.status == CONVEXITY_LOST:
            log.warning("convexity lost at t=%g after %d steps", state.t, state.steps)
            state = new
            break
        state = new
        r_in, _ = radii_about(state.u, steiner_point(state.u))
        if r_in < config.r_min:
            state = replace(state, status=EXTINCT)
            break
        if state.steps % config.record_stride == 0:
            series.append(record_row(state, config.sigmas))
            last_recorded = state.steps
    if state.steps != last_recorded:
        series.append(record_row(state, config.sigmas))
    series.metadata.update(status=state.status, steps=state.steps, t_final=state.t)
    return series, state


INNER_RADIUS = "inner_radius"
VOLUME_PROXY = "volume_proxy"


def rescale(state: FlowState, mode: str = INNER_RADIUS) -> FlowState:
    """Recenter at the Steiner point and normalize the size to 1."""
    u = state.u
    zeta = steiner_point(u)
    centered = u.translated(-zeta)
    if mode == INNER_RADIUS:
        scale, _ = radii_about(centered, np.zeros(3))
    elif mode == VOLUME_PROXY:
        radii_about(centered, np.zeros(3))
        scale = (3.0 * volume_proxy(centered) / (4.0 * math.pi)) ** (1.0 / 3.0)
    else:
        raise ValueError(f"unknown rescale mode {mode!r}")
    return replace(state, u=centered.scaled(1.0 / scale))


def roundness(u: SupportField) -> float:
    r_in, R_out = radii_about(u, steiner_point(u))
    return R_out / r_in - 1.0


@dataclass
class ScanRow:
    theta: float
    extinction_time: float | None
    censored: bool
    terminal_roundness: float | None
    terminal_min_pinch: float | None
    status: str
    steps: int = 0
    error: str | None = None


def _scan_one(config: RunConfig, theta: float) -> ScanRow:
    try:
        series, state = run(replace(config, theta=theta))
        last = rescale(state)
        extinct = state.status == EXTINCT
        return ScanRow(
            theta=theta,
            extinction_time=state.t if extinct else None,
            censored=not extinct,
            terminal_roundness=roundness(last.u),
            terminal_min_pinch=series.rows[-1].pinch_min,
            status=state.status,
            steps=state.steps,
        )
    except Exception as exc:  # per-row failures are recorded, the scan goes on
        return ScanRow(theta, None, True, None, None, "error", error=f"{type(exc).__name__}: {exc}")


def theta_scan(config: RunConfig, theta_values, max_workers: int = 1) -> list[ScanRow]:
    """One run per initial scale; rows come back in input order."""
    thetas = [float(v) for v in theta_values]
    if any(v <= 0 for v in thetas):
        raise ValueError("theta values must be positive")
    if any(b <= a for a, b in zip(thetas, thetas[1:])):
        raise ValueError("theta values must be strictly ascending")
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            return list(pool.map(lambda th: _scan_one(config, th), thetas))
    return [_scan_one(config, th) for th in thetas]
