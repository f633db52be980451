"""Command line front end.

    gaussflow run              --config cfg.json --out DIR [--set key=value ...]
    gaussflow check-speed      --config cfg.json --out DIR
    gaussflow theta-scan       --config cfg.json --out DIR
    gaussflow convergence-test --config cfg.json --out DIR

Exit status: 0 success, 1 physics failure (convexity lost), 2 config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, build_run_config, build_speed, load_config
from .flow import CONVEXITY_LOST, initial_support, run, theta_scan
from .geometry import ConvexityLostError, InvalidCenterError, SupportField, curvature_field, write_obj
from .grid import build_grid
from .monitors import INITIAL_BOUND, NON_DECREASING, NON_INCREASING, STEPWISE, sigma_column, verify_monotone
from .oracles import spheroid_gauss_curvature
from .speeds import SpeedEvaluationError, check_conditions

log = logging.getLogger("gaussflow")

COMMANDS = ("run", "check-speed", "theta-scan", "convergence-test")
EXIT_OK, EXIT_PHYSICS, EXIT_CONFIG = 0, 1, 2


@dataclass
class CommandSpec:
    command: str
    config: Path
    out: Path
    overrides: list = field(default_factory=list)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _dump(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n")


def _cmd_run(cfg, out: Path) -> int:
    rc = build_run_config(cfg)
    initial_support(rc)
    series, state = run(rc)
    mon = cfg["monitors"]
    tols = dict(per_step_tol=mon["per_step_tol"], total_tol=mon["total_tol"])
    verdicts = {}
    if len(series) >= 2:
        verdicts["pinch_min"] = verify_monotone(series, "pinch_min", NON_DECREASING, **tols).to_dict()
        verdicts["K_min"] = verify_monotone(series, "K_min", NON_DECREASING, **tols).to_dict()
        for s in rc.sigmas:
            col = sigma_column(s)
            verdicts[col] = verify_monotone(series, col, NON_INCREASING, mode=INITIAL_BOUND, **tols).to_dict()
        verdicts["roundness"] = verify_monotone(series, "roundness", NON_INCREASING, mode=STEPWISE, **tols).to_dict()
    out.mkdir(parents=True, exist_ok=True)
    series.to_csv(out / "series.csv")
    if cfg["output"].get("write_obj", True):
        write_obj(state.u, out / "final_state.obj", cfg["output"].get("obj_longitudes"))
    _dump(
        out / "report.json",
        {
            "config": cfg,
            "config_hash": rc.digest(),
            "speed": rc.speed.describe(),
            "status": state.status,
            "t_final": state.t,
            "steps": state.steps,
            "final_row": series.rows[-1].as_dict(),
            "verdicts": verdicts,
        },
    )
    return EXIT_PHYSICS if state.status == CONVEXITY_LOST else EXIT_OK


def _cmd_check_speed(cfg, out: Path) -> int:
    chk = dict(cfg["speed"].get("check") or {})
    if "K_range" in chk:
        chk["K_range"] = tuple(chk["K_range"])
    if chk.get("radii_box") is not None:
        chk["radii_box"] = tuple(chk["radii_box"])
    try:
        report = check_conditions(build_speed(cfg), **chk)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"speed.check: {exc}") from None
    out.mkdir(parents=True, exist_ok=True)
    doc = report.to_dict()
    doc["config"] = cfg
    _dump(out / "condition_report.json", doc)
    return EXIT_OK


def _cmd_theta_scan(cfg, out: Path) -> int:
    values = cfg["flow"].get("theta_values")
    if not values:
        raise ConfigError("flow.theta_values is required for theta-scan")
    if any(v <= 0 for v in values) or any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError("flow.theta_values must be positive and strictly ascending")
    rc = build_run_config(cfg)
    rows = theta_scan(rc, values, max_workers=cfg["flow"].get("max_workers") or 1)
    out.mkdir(parents=True, exist_ok=True)
    cols = ["theta", "extinction_time", "censored", "terminal_roundness", "terminal_min_pinch", "status", "steps", "error"]
    with open(out / "scan.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in cols])
    return EXIT_OK


def convergence_table(a: float, c: float, Ns, mode: str = "axisymmetric") -> list[dict]:
    """Max relative error of K against the closed-form spheroid curvature."""
    rows = []
    for N in Ns:
        grid = build_grid(mode, N)
        cf = curvature_field(SupportField.ellipsoid(grid, a, c))
        th, _ = grid.angles
        err = np.abs(cf.K / spheroid_gauss_curvature(th, a, c) - 1.0)
        inner = (th >= np.pi / 8) & (th <= 7 * np.pi / 8)
        row = {"N": N, "max_rel_err_K": float(err.max()), "max_rel_err_K_interior": float(err[inner].max()), "order": None}
        if rows:
            prev = rows[-1]
            row["order"] = float(np.log(prev["max_rel_err_K"] / row["max_rel_err_K"]) / np.log(N / prev["N"]))
        rows.append(row)
    return rows


def _cmd_convergence(cfg, out: Path) -> int:
    shape = cfg["shape"]
    if shape["kind"] != "ellipsoid":
        raise ConfigError("convergence-test needs shape.kind = ellipsoid")
    Ns = cfg["grid"]["refine"]
    if not Ns or any(not isinstance(n, int) or n < 8 for n in Ns):
        raise ConfigError("grid.refine must list integer resolutions >= 8")
    rows = convergence_table(shape["a"], shape["c"], Ns, cfg["grid"]["mode"])
    out.mkdir(parents=True, exist_ok=True)
    cols = ["N", "max_rel_err_K", "max_rel_err_K_interior", "order"]
    with open(out / "convergence.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in cols])
    return EXIT_OK


HANDLERS = {
    "run": _cmd_run,
    "check-speed": _cmd_check_speed,
    "theta-scan": _cmd_theta_scan,
    "convergence-test": _cmd_convergence,
}


def execute_command(cmd: CommandSpec) -> int:
    if cmd.command not in HANDLERS:
        print(f"error: unknown command {cmd.command!r}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(cmd.config, cmd.overrides)
        return HANDLERS[cmd.command](cfg, Path(cmd.out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvexityLostError, InvalidCenterError, SpeedEvaluationError) as exc:
        print(f"physics failure: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gaussflow", description="Gauss curvature flow experiments")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out", required=True, type=Path)
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return execute_command(CommandSpec(args.command, args.config, args.out, args.overrides))


if __name__ == "__main__":
    sys.exit(main())
