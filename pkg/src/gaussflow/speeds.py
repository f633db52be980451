"""Speed functions f(K) and a sampled checker for their structural conditions.

The checker covers five conditions on f:

  (i)   f'(K) > 0
  (ii)  alpha1 <= (n K f' - f) / f <= alpha2 with 0 < alpha1, alpha2 <= n - 1
  (iii) 0 < K f'' / f' + 1 - 1/n <= beta
  (iv)  K / f(K)**gamma >= gamma_hat for large K
  (v)   f is convex as a function of the principal radii

Every verdict comes from sampling, not from a proof.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Callable

import numpy as np

PASS, FAIL, INDETERMINATE = "pass", "fail", "indeterminate"


class SpeedDomainError(ValueError):
    """Speed evaluated at a non-positive curvature."""


class SpeedEvaluationError(ArithmeticError):
    def __init__(self, K, what="f"):
        self.K = K
        super().__init__(f"speed evaluator returned a non-finite {what} at K={K!r}")


def _power(K, alpha):
    return K**alpha, alpha * K ** (alpha - 1), alpha * (alpha - 1) * K ** (alpha - 2)


def _log_power(K, n, K0):
    p = 1.0 / n
    Kh = K + K0
    L = np.log(Kh)
    f = K**p * L
    df = p * K ** (p - 1) * L + K**p / Kh
    d2f = p * (p - 1) * K ** (p - 2) * L + 2 * p * K ** (p - 1) / Kh - K**p / Kh**2
    return f, df, d2f


@dataclass(frozen=True)
class SpeedSpec:
    """A speed f(K) together with closed-form f' and f''.

    ``evaluator`` maps K (scalar or array) to the triple (f, f', f'').
    """

    kind: str
    params: dict
    evaluator: Callable = field(repr=False, compare=False)

    def describe(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{self.kind}({args})"

    def __call__(self, K):
        return self.evaluator(K)[0]


def power(alpha: float) -> SpeedSpec:
    """f(K) = K**alpha."""
    return SpeedSpec("power", {"alpha": float(alpha)}, partial(_power, alpha=float(alpha)))


def log_power(n: int = 2, K0: float | None = None) -> SpeedSpec:
    """f(K) = K**(1/n) * ln(K + K0); K0 defaults to exp(n / (n - 1))."""
    if n < 2:
        raise ValueError("log_power needs n >= 2")
    K0 = math.exp(n / (n - 1)) if K0 is None else float(K0)
    return SpeedSpec("log_power", {"n": int(n), "K0": K0}, partial(_log_power, n=int(n), K0=K0))


def custom(f, df, d2f, name: str = "custom", **params) -> SpeedSpec:
    """Wrap user-supplied analytic f, f', f''."""

    def ev(K):
        return f(K), df(K), d2f(K)

    return SpeedSpec("custom", {"name": name, **params}, ev)


def eval_speed(spec: SpeedSpec, K):
    """Return (f, f', f'') at K > 0."""
    Ka = np.asarray(K, dtype=float)
    if not np.all(Ka > 0):
        raise SpeedDomainError(f"speed is defined for K > 0 only, got {K!r}")
    out = spec.evaluator(Ka)
    if Ka.ndim == 0:
        return tuple(float(v) for v in out)
    return tuple(np.asarray(v, dtype=float) for v in out)


@dataclass
class ConditionReport:
    verdicts: dict
    constants: dict
    observed: dict
    K_range: tuple
    n: int
    samples: int
    K_threshold_iv: float
    radii_box: tuple | None
    radii_samples: int
    speed: str
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v == PASS for v in self.verdicts.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, **kw)


def _checked(spec, K):
    f, df, d2f = spec.evaluator(K)
    for name, arr in (("f", f), ("f'", df), ("f''", d2f)):
        arr = np.broadcast_to(np.asarray(arr, dtype=float), np.shape(K))
        bad = ~np.isfinite(arr)
        if bad.any():
            raise SpeedEvaluationError(float(np.asarray(K).flat[np.argmax(bad)]), name)
    return (np.broadcast_to(np.asarray(v, dtype=float), np.shape(K)) for v in (f, df, d2f))


def _radii_function(spec):
    return lambda l1, l2: spec.evaluator(1.0 / (l1 * l2))[0]


def radii_hessian_fd(spec: SpeedSpec, l1, l2, rel_step: float = 1e-3) -> np.ndarray:
    """Central-difference Hessian of (l1, l2) -> f(1 / (l1 l2))."""
    F = _radii_function(spec)
    l1 = np.asarray(l1, dtype=float)
    l2 = np.asarray(l2, dtype=float)
    h1, h2 = rel_step * l1, rel_step * l2
    f0 = F(l1, l2)
    f11 = (F(l1 + h1, l2) - 2 * f0 + F(l1 - h1, l2)) / h1**2
    f22 = (F(l1, l2 + h2) - 2 * f0 + F(l1, l2 - h2)) / h2**2
    f12 = (F(l1 + h1, l2 + h2) - F(l1 + h1, l2 - h2) - F(l1 - h1, l2 + h2) + F(l1 - h1, l2 - h2)) / (4 * h1 * h2)
    return np.stack([np.stack([f11, f12], -1), np.stack([f12, f22], -1)], -2)


def check_conditions(
    spec: SpeedSpec,
    K_range=(0.1, 100.0),
    n: int = 2,
    samples: int = 1000,
    radii_box=None,
    gamma: float | None = None,
    gamma_hat: float | None = None,
    radii_samples: int = 25,
    hessian_tol: float = 1e-8,
) -> ConditionReport:
    """Sample the five conditions on a log-spaced K grid.

    Condition (iv) is tested on the top decade of ``K_range``. When
    ``gamma`` is omitted the largest gamma in (0, 1] for which K / f**gamma
    is non-decreasing there is chosen; an omitted ``gamma_hat`` becomes
    the sampled minimum. Condition (v) is only sampled for n = 2, over
    ``radii_box`` (default: radii of umbilic points with K in range).
    """
    K_lo, K_hi = (float(v) for v in K_range)
    if not 0 < K_lo < K_hi:
        raise ValueError("need 0 < K_lo < K_hi")
    if samples < 100:
        raise ValueError("need at least 100 samples")

    K = np.geomspace(K_lo, K_hi, samples)
    f, df, d2f = _checked(spec, K)
    verdicts, constants, observed, notes = {}, {}, {}, []

    verdicts["i"] = PASS if df.min() > 0 else FAIL
    observed["min_df"] = float(df.min())

    rho = (n * K * df - f) / f
    a1, a2 = float(rho.min()), float(rho.max())
    observed["rho_range"] = [a1, a2]
    ok = a1 > 0 and a2 <= (n - 1) * (1 + 1e-12)
    verdicts["ii"] = PASS if ok else FAIL
    constants["alpha1"], constants["alpha2"] = (a1, a2) if ok else (None, None)

    with np.errstate(divide="ignore", invalid="ignore"):
        tau = K * d2f / df + 1.0 - 1.0 / n
    t_lo, t_hi = float(tau.min()), float(tau.max())
    observed["tau_range"] = [t_lo, t_hi]
    ok = bool(np.all(np.isfinite(tau))) and t_lo > 0
    verdicts["iii"] = PASS if ok else FAIL
    constants["beta"] = t_hi if ok else None

    K_top = max(K_lo, K_hi / 10.0)
    Kt = np.geomspace(K_top, K_hi, samples)
    ft, _, _ = _checked(spec, Kt)
    if np.any(ft <= 0):
        verdicts["iv"] = FAIL
        constants["gamma"] = constants["gamma_hat"] = None
    else:
        if gamma is None:
            for g in np.linspace(1.0, 0.01, 100):
                ratio = Kt / ft**g
                if np.all(np.diff(ratio) >= -1e-12 * ratio[:-1]):
                    gamma = float(g)
                    break
            notes.append("gamma searched on the top decade" if gamma is not None else "no gamma in (0, 1] found")
        if gamma is None:
            verdicts["iv"] = FAIL
            constants["gamma"] = constants["gamma_hat"] = None
        else:
            ratio_min = float((Kt / ft**gamma).min())
            observed["iv_ratio_min"] = ratio_min
            if gamma_hat is None:
                gamma_hat = ratio_min
            ok = 0 < gamma <= 1 and gamma_hat > 0 and ratio_min >= gamma_hat
            verdicts["iv"] = PASS if ok else FAIL
            constants["gamma"], constants["gamma_hat"] = (float(gamma), float(gamma_hat)) if ok else (None, None)

    if radii_box is None:
        radii_box = (K_hi ** (-1.0 / n), K_lo ** (-1.0 / n))
    radii_box = tuple(float(v) for v in radii_box)
    if n == 2:
        if radii_box[0] <= 0:
            raise ValueError("radii box must be positive")
        lam = np.geomspace(radii_box[0], radii_box[1], radii_samples)
        L1, L2 = np.meshgrid(lam, lam, indexing="ij")
        Hs = radii_hessian_fd(spec, L1, L2)
        if not np.all(np.isfinite(Hs)):
            raise SpeedEvaluationError(float("nan"), "radii Hessian")
        eig = np.linalg.eigvalsh(Hs)
        scale = np.maximum(1.0, np.abs(eig).max(axis=-1))
        worst = eig[..., 0] / scale
        observed["hessian_min_eig"] = float(eig[..., 0].min())
        ok = float(worst.min()) >= -hessian_tol
        verdicts["v"] = PASS if ok else FAIL
        constants["hessian_min_eig"] = float(eig[..., 0].min()) if ok else None
        notes.append("condition (v) checked by sampled finite differences, not proven")
    else:
        verdicts["v"] = INDETERMINATE
        constants["hessian_min_eig"] = None
        notes.append("condition (v) is only sampled for n = 2")

    return ConditionReport(
        verdicts=verdicts,
        constants=constants,
        observed=observed,
        K_range=(K_lo, K_hi),
        n=int(n),
        samples=int(samples),
        K_threshold_iv=K_top,
        radii_box=radii_box,
        radii_samples=int(radii_samples),
        speed=spec.describe(),
        notes=notes,
    )
