"""Command-line driver.

    flatcrane <plan|ff|simulate|check|export-plot> --config PATH [--out DIR] [--variant printed|lagrange]

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error. Failures print a JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .beam_model import hold_input
from .config import ExperimentConfig, load_config
from .errors import ConfigError, FlatCraneError, NumericalError
from .flat_param import FlatReference, check_submersivity, crane_ltv_provider, SHIFT
from .ltv_canonical import check_regularity
from .planner import boundary_forces, feedforward, plan_reference, rollout

log = logging.getLogger("flatcrane")

SUBCOMMANDS = ("plan", "ff", "simulate", "check", "export-plot")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

TRAJECTORY_COLUMNS = ["k", "t", "x1", "x2", "x3", "x4", "x5", "x6", "u1", "u2", "ubar1", "ubar2"]
REFERENCE_COLUMNS = ["k", "y1", "y2"]
SIMULATION_COLUMNS = ["k", "t", "x1", "x2", "x3", "x4", "x5", "x6"]
PLOT_COLUMNS = ["k", "t", "series", "value"]


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([cell if isinstance(cell, str) else (str(cell) if isinstance(cell, (int, np.integer)) else fmt(cell)) for cell in row])


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def reference_rows(ref: FlatReference):
    for k, y1 in enumerate(ref.y1):
        yield [k, y1, ref.y2[k] if k < len(ref.y2) else ""]


def trajectory_rows(res, T_s: float):
    u = np.vstack([res.u_d, res.u_final])
    ubar = np.vstack([res.ubar_d, res.ubar_final])
    for k, x in enumerate(res.x_d):
        yield [k, k * T_s, *x, *u[k], *ubar[k]]


def read_inputs(path: Path) -> np.ndarray:
    """``u1, u2`` columns of a CSV written by ``ff`` (or any CSV with those columns)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"u1", "u2"} <= set(reader.fieldnames):
            raise ConfigError(f"{path}: expected columns u1,u2", path=str(path))
        return np.array([[float(r["u1"]), float(r["u2"])] for r in reader]).reshape(-1, 2)


def _plan(cfg: ExperimentConfig, variant: str):
    params = cfg.physical_params()
    return params, plan_reference(params, cfg.plan_spec(), variant)


def _diagnostics(cfg: ExperimentConfig, params, res) -> dict:
    spec = cfg.plan_spec()
    failures = [k for k, r in enumerate(res.sv_ratio) if r < cfg.tolerances.rank_ratio]
    d = dict(res.diagnostics)
    d.update(
        max_open_loop_dev=res.diagnostics["max_open_loop_dev"],
        min_sv_Mk=res.diagnostics["min_sv_Mk"],
        rank_failures=failures,
        boundary_force_dev=boundary_forces(params, res, spec.head_len, spec.tail_len),
        config_echo=cfg.model_dump(mode="json"),
    )
    return d


def cmd_plan(cfg, out: Path, variant: str) -> dict:
    _, ref = _plan(cfg, variant)
    _write_csv(out / "reference.csv", REFERENCE_COLUMNS, reference_rows(ref))
    return {"reference": str(out / "reference.csv"), "N": ref.N}


def cmd_ff(cfg, out: Path, variant: str) -> dict:
    params, ref = _plan(cfg, variant)
    res = feedforward(params, ref, variant)
    _write_csv(out / "reference.csv", REFERENCE_COLUMNS, reference_rows(ref))
    _write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, trajectory_rows(res, params.T_s))
    diag = _diagnostics(cfg, params, res)
    _write_json(out / "diagnostics.json", diag)
    limit = cfg.tolerances.open_loop_rel * res.diagnostics["state_scale"]
    if diag["max_open_loop_dev"] > limit:
        log.warning("open-loop deviation %.3g exceeds %.3g", diag["max_open_loop_dev"], limit)
    return {"trajectory": str(out / "trajectory.csv"), "max_open_loop_dev": diag["max_open_loop_dev"]}


def cmd_simulate(cfg, out: Path, variant: str, u_csv: str | None) -> dict:
    params = cfg.physical_params()
    source = Path(u_csv or cfg.simulate.u_csv or out / "trajectory.csv")
    u = read_inputs(source)
    spec = cfg.plan_spec()
    x0 = np.asarray(cfg.simulate.x0, dtype=float) if cfg.simulate.x0 is not None else spec.start.state()
    xs = rollout(params, x0, u, variant)
    _write_csv(
        out / "simulation.csv",
        SIMULATION_COLUMNS,
        ([k, k * params.T_s, *x] for k, x in enumerate(xs)),
    )
    goal_dev = float(np.max(np.abs(xs[-1] - spec.goal.state())))
    summary = {
        "input_csv": str(source),
        "steps": len(u),
        "final_state": xs[-1].tolist(),
        "goal_deviation": goal_dev,
        "goal_reached": goal_dev <= cfg.tolerances.final_state,
    }
    _write_json(out / "simulation.json", summary)
    return summary


def cmd_check(cfg, out: Path, variant: str) -> dict:
    params, ref = _plan(cfg, variant)
    provider = crane_ltv_provider(params, ref.y1, variant, k_min=-SHIFT)
    reg = check_regularity(provider, range(0, ref.N + SHIFT + 1), rtol=cfg.tolerances.rank_ratio)
    res = feedforward(params, ref, variant, verify=False)
    u = np.vstack([res.u_d, res.u_final])
    sub_ranks = [check_submersivity(params, x, uk, variant).rank for x, uk in zip(res.x_d, u)]
    report = {
        "regular": reg.full_rank,
        "rank_failures": reg.failures,
        "min_sv_Mk": reg.min_sv,
        "min_sv_ratio_Mk": reg.min_ratio,
        "checked_steps": [reg.ks[0], reg.ks[-1]],
        "submersive": all(r == 6 for r in sub_ranks),
        "submersivity_min_rank": min(sub_ranks),
        "hold_input": hold_input(params).tolist(),
    }
    _write_json(out / "check.json", report)
    return report


def cmd_export_plot(cfg, out: Path, variant: str) -> dict:
    params, ref = _plan(cfg, variant)
    res = feedforward(params, ref, variant, verify=False)
    T_s = params.T_s

    def rows():
        for row in trajectory_rows(res, T_s):
            k, t = row[0], row[1]
            for name, value in zip(TRAJECTORY_COLUMNS[2:], row[2:]):
                yield [k, t, name, value]
        for k, y1 in enumerate(ref.y1):
            yield [k, k * T_s, "y1", y1]
        for k, y2 in enumerate(ref.y2):
            yield [k, k * T_s, "y2", y2]

    _write_csv(out / "plot.csv", PLOT_COLUMNS, rows())
    return {"plot": str(out / "plot.csv")}


def run_subcommand(name: str, cfg: ExperimentConfig, out: str | Path | None = None,
                   variant: str | None = None, u_csv: str | None = None) -> dict:
    """Run one subcommand and return its summary; errors propagate."""
    out = Path(out if out is not None else cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    variant = variant or cfg.variant
    if name == "plan":
        return cmd_plan(cfg, out, variant)
    if name == "ff":
        return cmd_ff(cfg, out, variant)
    if name == "simulate":
        return cmd_simulate(cfg, out, variant, u_csv)
    if name == "check":
        return cmd_check(cfg, out, variant)
    if name == "export-plot":
        return cmd_export_plot(cfg, out, variant)
    raise ValueError(f"unknown subcommand {name!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flatcrane", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="experiment JSON file")
    parser.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    parser.add_argument("--variant", choices=("printed", "lagrange"), default=None)
    parser.add_argument("--u-csv", default=None, help="input CSV for simulate (default: <out>/trajectory.csv)")
    return parser


def _fail(code: int, payload: dict) -> int:
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = os.environ.get("FLATCRANE_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        summary = run_subcommand(args.command, cfg, args.out, args.variant, args.u_csv)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc.to_dict())
    except NumericalError as exc:
        return _fail(EXIT_NUMERIC, exc.to_dict())
    except FlatCraneError as exc:
        return _fail(EXIT_NUMERIC, exc.to_dict())
    except OSError as exc:
        return _fail(EXIT_IO, {"error": type(exc).__name__, "message": str(exc)})
    log.info("%s finished", args.command)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
