"""Command-line experiment runner: ``run``, ``batch`` and ``compare``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .analysis import relative_error
from .config import ConfigError, ExperimentConfig, load_config
from .integrate import Trajectory, rk4_nonlinear_solve
from .problems import get_problem
from .solvers import ace_run, gce_run, pce_run, sce_run

CL_FILE = "cl.csv"
CE_FILE = "ce.csv"
ERROR_FILE = "error.csv"
REPORT_FILE = "report.json"
FLOAT_FMT = "%.17g"


def solve(cfg: ExperimentConfig) -> Trajectory:
    problem = get_problem(cfg.problem, **cfg.params)
    args = (cfg.X0,)
    if cfg.solver == "sce":
        return sce_run(problem, *args, cfg.P, cfg.t_max, cfg.dt, center=cfg.center)
    if cfg.solver == "pce":
        return pce_run(problem, *args, cfg.xi, cfg.P, cfg.t_max, cfg.dt)
    if cfg.solver == "ace":
        return ace_run(problem, *args, cfg.ace, cfg.P, cfg.t_max, cfg.dt)
    return gce_run(problem, *args, cfg.grid, cfg.P, cfg.t_max, cfg.dt)


def _header(n: int, extra=()) -> str:
    return ",".join(["t"] + [f"X_{i}" for i in range(n)] + list(extra))


def write_trajectory_csv(path, traj: Trajectory) -> None:
    """``t, X_0..X_{n-1}``, one row per step."""
    data = np.column_stack([traj.times, traj.states])
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",", header=_header(traj.n), comments="")


def write_embedding_csv(path, traj: Trajectory) -> None:
    """Trajectory columns plus ``xi, chart_id, unstable``.

    ``unstable`` is 1 from the first step whose lifted state left the unit
    box onward, else 0.
    """
    k = len(traj)
    unstable = np.zeros(k, dtype=int)
    if traj.unstable_at is not None:
        unstable[traj.unstable_at:] = 1
    xi = traj.xi if traj.xi is not None else np.full(k, np.nan)
    ids = traj.chart_id if traj.chart_id is not None else np.zeros(k, dtype=int)
    with open(path, "w") as fh:
        fh.write(_header(traj.n, ("xi", "chart_id", "unstable")) + "\n")
        for i in range(k):
            vals = [FLOAT_FMT % traj.times[i]] + [FLOAT_FMT % v for v in traj.states[i]]
            vals += [FLOAT_FMT % xi[i], str(int(ids[i])), str(int(unstable[i]))]
            fh.write(",".join(vals) + "\n")


def write_error_csv(path, series, n: int) -> None:
    """``t, eps_X_0..eps_X_{n-1}, eps_max, eps_running``."""
    cols = ["t"] + [f"eps_X_{i}" for i in range(n)] + ["eps_max", "eps_running"]
    data = np.column_stack([series.times, series.eps_num, series.eps_max, series.eps_running])
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",", header=",".join(cols), comments="")


def _json_float(x):
    return None if x is None or not np.isfinite(x) else float(x)


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run reference and embedded solves, write CSVs and a JSON report.

    Solver failures are captured in the report under ``status`` and any
    outputs produced before the failure are kept.
    """
    out = cfg.run_dir
    out.mkdir(parents=True, exist_ok=True)
    report = {"config": cfg.to_dict(), "status": "ok"}
    t0 = time.perf_counter()
    problem = get_problem(cfg.problem, **cfg.params)
    cl = rk4_nonlinear_solve(problem, cfg.X0, cfg.t_max, cfg.dt)
    write_trajectory_csv(out / CL_FILE, cl)
    try:
        ce = solve(cfg)
    except Exception as exc:  # noqa: BLE001 - reported, not raised
        report["status"] = f"error: {type(exc).__name__}: {exc}"
        report["wall_time"] = time.perf_counter() - t0
        _write_report(out, report)
        return report
    write_embedding_csv(out / CE_FILE, ce)
    err = relative_error(cl, ce, truncate=True)
    write_error_csv(out / ERROR_FILE, err, ce.n)
    finite_xi = ce.xi[np.isfinite(ce.xi)] if ce.xi is not None else np.array([])
    report.update({
        "steps": len(ce) - 1,
        "completed": len(ce) == len(cl),
        "final_error": _json_float(err.final_error),
        "max_error": _json_float(err.max_error),
        "transitions": ce.transitions,
        "unstable": ce.unstable_at is not None,
        "unstable_at": ce.unstable_at,
        "unstable_time": None if ce.unstable_at is None else ce.unstable_at * cfg.dt,
        "blew_up": ce.blew_up,
        "xi_min": _json_float(finite_xi.min()) if finite_xi.size else None,
        "xi_max": _json_float(finite_xi.max()) if finite_xi.size else None,
        "final_state": ce.states[-1].tolist(),
        "wall_time": time.perf_counter() - t0,
    })
    _write_report(out, report)
    return report


def _write_report(out: Path, report: dict) -> None:
    (out / REPORT_FILE).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def _run_file(args):
    path, output, overrides = args
    cfg = load_config(path, overrides)
    if output is not None:
        cfg = replace(cfg, output=str(output))
    return cfg.label, run_experiment(cfg)


def run_batch(directory, output=None, overrides=(), jobs: int = 1) -> dict:
    """Run every ``*.yaml`` file in ``directory``; labels must be unique."""
    files = sorted(Path(directory).glob("*.yaml")) + sorted(Path(directory).glob("*.yml"))
    if not files:
        raise FileNotFoundError(f"no experiment files in {directory}")
    cfgs = [load_config(f, overrides) for f in files]
    labels = [c.label for c in cfgs]
    dup = {lab for lab in labels if labels.count(lab) > 1}
    if dup:
        raise ConfigError("label", f"duplicate labels in batch: {sorted(dup)}")
    tasks = [(f, output, tuple(overrides)) for f in files]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_file, tasks))
    else:
        results = [_run_file(t) for t in tasks]
    return dict(results)


COMPARE_COLUMNS = ("max_error", "final_error", "transitions", "unstable_at", "xi_min", "xi_max", "wall_time")


def compare_runs(labels, root="runs") -> list[dict]:
    """One row per label with the headline report fields."""
    rows = []
    for label in labels:
        path = Path(root) / label / REPORT_FILE
        if not path.exists():
            raise FileNotFoundError(f"no report for run {label!r} at {path}")
        rep = json.loads(path.read_text())
        rows.append({"label": label, **{c: rep.get(c) for c in COMPARE_COLUMNS}})
    return rows


def format_table(rows) -> str:
    cols = ("label",) + COMPARE_COLUMNS

    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.3e}"
        return str(v)

    body = [[cell(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(b[i]) for b in body)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines)


def _summary(label: str, rep: dict) -> str:
    if rep["status"] != "ok":
        return f"{label}: {rep['status']}"
    return (f"{label}: max_error={rep['max_error']:.3e} transitions={rep['transitions']} "
            f"unstable_at={rep['unstable_at']}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="carleman", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field, e.g. solver.xi=0.2 (repeatable)")
        p.add_argument("-o", "--output", default=None, help="output root (default: the config's output)")

    p_run = sub.add_parser("run", help="run one experiment file")
    p_run.add_argument("config")
    add_common(p_run)

    p_batch = sub.add_parser("batch", help="run every experiment file in a directory")
    p_batch.add_argument("directory")
    p_batch.add_argument("-j", "--jobs", type=int, default=1)
    add_common(p_batch)

    p_cmp = sub.add_parser("compare", help="tabulate finished runs")
    p_cmp.add_argument("labels", nargs="+")
    p_cmp.add_argument("-o", "--output", default="runs", help="output root holding the run folders")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            label, rep = _run_file((args.config, args.output, tuple(args.overrides)))
            print(_summary(label, rep))
            return 0 if rep["status"] == "ok" else 2
        if args.command == "batch":
            reports = run_batch(args.directory, args.output, args.overrides, args.jobs)
            for label, rep in reports.items():
                print(_summary(label, rep))
            return 0 if all(r["status"] == "ok" for r in reports.values()) else 2
        print(format_table(compare_runs(args.labels, args.output)))
        return 0
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
