"""Per-time diagnostics, monotonicity verdicts and the sphere evolution identity."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import curvature_field, deficits, radii_about, steiner_point
from .speeds import SpeedSpec

NON_DECREASING = "non_decreasing"
NON_INCREASING = "non_increasing"
STEPWISE = "stepwise"
INITIAL_BOUND = "initial_bound"


def sigma_column(sigma: float) -> str:
    return f"g_sigma_max_{sigma:g}"


@dataclass
class MonitorRow:
    t: float
    K_min: float
    K_max: float
    pinch_min: float
    g_max: float
    g_sigma_max: dict
    H_min: float
    H_max: float
    r_in: float
    R_out: float
    roundness: float
    steiner: tuple
    lambda_min: float
    cs_gap_min: float  # min of (n|A|^2 - H^2) / H^2, nonnegative on any surface

    def as_dict(self) -> dict:
        d = {
            "t": self.t,
            "K_min": self.K_min,
            "K_max": self.K_max,
            "pinch_min": self.pinch_min,
            "g_max": self.g_max,
        }
        for s, v in self.g_sigma_max.items():
            d[sigma_column(s)] = v
        d.update(
            H_min=self.H_min,
            H_max=self.H_max,
            r_in=self.r_in,
            R_out=self.R_out,
            roundness=self.roundness,
            steiner_x=self.steiner[0],
            steiner_y=self.steiner[1],
            steiner_z=self.steiner[2],
            lambda_min=self.lambda_min,
            cs_gap_min=self.cs_gap_min,
        )
        return d


def record_row(state, sigmas=(0.1,)) -> MonitorRow:
    """Collect every scalar diagnostic of ``state`` (anything with ``t`` and ``u``)."""
    u = state.u
    cf = curvature_field(u)
    zeta = steiner_point(u)
    r_in, R_out = radii_about(u, zeta)
    g = deficits(cf, 0.0).g
    gs = {float(s): float(deficits(cf, s).g_sigma.max()) for s in sigmas}
    H2 = cf.H**2
    return MonitorRow(
        t=float(state.t),
        K_min=float(cf.K.min()),
        K_max=float(cf.K.max()),
        pinch_min=float(cf.pinch.min()),
        g_max=float(g.max()),
        g_sigma_max=gs,
        H_min=float(cf.H.min()),
        H_max=float(cf.H.max()),
        r_in=r_in,
        R_out=R_out,
        roundness=R_out / r_in - 1.0,
        steiner=tuple(float(v) for v in zeta),
        lambda_min=cf.lambda_min,
        cs_gap_min=float(((cf.n * cf.A2 - H2) / H2).min()),
    )


@dataclass
class MonitorSeries:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def append(self, row: MonitorRow):
        if self.rows and not row.t > self.rows[-1].t:
            raise ValueError(f"monitor rows must have increasing t ({row.t} after {self.rows[-1].t})")
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    @property
    def columns(self) -> list:
        return list(self.rows[0].as_dict()) if self.rows else []

    def column(self, key: str) -> np.ndarray:
        if key not in self.columns:
            raise KeyError(f"unknown monitor column {key!r}")
        return np.array([r.as_dict()[key] for r in self.rows])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = self.columns
        w.writerow(cols)
        for r in self.rows:
            d = r.as_dict()
            w.writerow([f"{d[c]:.17g}" for c in cols])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


@dataclass
class MonotoneVerdict:
    passed: bool
    key: str
    direction: str
    mode: str
    worst_index: int | None
    worst_t: float | None
    worst_delta: float
    total_excursion: float
    per_step_tol: float
    total_tol: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def verify_monotone(
    series: MonitorSeries,
    key: str,
    direction: str = NON_DECREASING,
    per_step_tol: float = 1e-8,
    total_tol: float = 1e-6,
    mode: str = STEPWISE,
) -> MonotoneVerdict:
    """Check a monitor column for monotone behavior.

    ``stepwise``: each consecutive change against ``direction`` must stay
    within ``per_step_tol`` and their sum within ``total_tol``.
    ``initial_bound``: every row must stay on the right side of row 0
    within ``total_tol`` (e.g. max g_sigma never above its initial value).
    Tolerances are scaled by max(1, |value|) of the row they apply to.
    """
    if direction not in (NON_DECREASING, NON_INCREASING):
        raise ValueError(f"unknown direction {direction!r}")
    if mode not in (STEPWISE, INITIAL_BOUND):
        raise ValueError(f"unknown mode {mode!r}")
    if len(series) < 2:
        raise ValueError("need at least two rows")
    vals = series.column(key)
    ts = series.column("t")
    sign = 1.0 if direction == NON_DECREASING else -1.0

    if mode == STEPWISE:
        delta = np.diff(vals)
        against = np.minimum(sign * delta, 0.0)  # <= 0 where the column moves the wrong way
        scale = np.maximum(1.0, np.abs(vals[:-1]))
        i = int(np.argmin(against / scale))
        total = float(-against.sum())
        ok = bool(np.all(-against <= per_step_tol * scale)) and total <= total_tol * max(1.0, abs(vals[0]))
        worst_delta = float(delta[i])
        idx = i + 1
    else:
        excess = np.maximum(sign * (vals[0] - vals[1:]), 0.0)
        i = int(np.argmax(excess))
        total = float(excess[i])
        ok = total <= total_tol * max(1.0, abs(vals[0]))
        worst_delta = float(vals[i + 1] - vals[0])
        idx = i + 1
    return MonotoneVerdict(
        passed=ok,
        key=key,
        direction=direction,
        mode=mode,
        worst_index=idx,
        worst_t=float(ts[idx]),
        worst_delta=worst_delta,
        total_excursion=total,
        per_step_tol=per_step_tol,
        total_tol=total_tol,
    )


def sphere_residual(r: float, spec: SpeedSpec, n: int = 2) -> float:
    """|dK/dt - f K H| on the exact shrinking sphere of radius r.

    dK/dt uses a complex-step derivative of r -> r**-n times dr/dt = -f;
    the right side is the general curvature evolution with all gradient
    terms dropped.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    K = r ** (-n)
    f, _, _ = spec.evaluator(K)
    h = 1e-30 * r
    dK_dr = ((r + 1j * h) ** (-n)).imag / h
    lhs = dK_dr * (-f)
    H = n / r
    rhs = f * K * H
    return float(abs(lhs - rhs))
