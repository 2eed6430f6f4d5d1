"""Command-line front end: ``llosim {simulate,covariance,accuracy,sweep,optimize}``.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import platform
import sys

import numpy as np

from . import __version__, kernels
from .config import ENV_PREFIX, FORMATS, RunConfig, env_overrides, load_config
from .control import accuracy_from_trace, plan, simulate
from .controllers import controller_label
from .errors import ConfigurationError, EstimatorError
from .estimator import (
    MAX_CONDITION,
    accuracy_analytic,
    accuracy_of_coefficients,
    build_sigma,
    correlation_condition,
    predictor_coeffs_mmse,
    predictor_coeffs_paper,
)
from .metrics import curve_stats
from .optimize import AXES, OBJECTIVES, SimplexOptions, SweepSpec, optimize_ramsey_durations, sweep
from .ramsey import Cycle, CycleSchedule, MeasurementWindow, build_schedule
from .xfer import CovarianceTable

log = logging.getLogger("llosim")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2
MANIFEST = "manifest.json"


# -- output helpers ---------------------------------------------------------------


class Writer:
    """Writes result files and the manifest that every file refers to."""

    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.dir = cfg.output.directory
        self.files: list[str] = []

    def _ref(self) -> str:
        return f"{MANIFEST} config_sha256={self.cfg.digest} seed={self.cfg.seed}"

    def table(self, stem: str, header: list[str], rows: list[list]) -> None:
        if self.cfg.output.format == "json":
            self.json(stem, {"columns": header, "rows": rows})
            return
        p = self.cfg.output.precision
        buf = io.StringIO()
        buf.write(f"# manifest: {self._ref()}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format(v, f".{p}g") if isinstance(v, float) else v for v in row])
        self._write(f"{stem}.csv", buf.getvalue())

    def json(self, stem: str, payload: dict) -> None:
        doc = {"manifest": self._ref(), **payload}
        self._write(f"{stem}.json", json.dumps(_plain(doc), indent=2, sort_keys=False) + "\n")

    def _write(self, name: str, text: str) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / name).write_text(text)
        self.files.append(name)

    def manifest(self) -> None:
        doc = {
            "command": self.command,
            "config_sha256": self.cfg.digest,
            "seed": self.cfg.seed,
            "ensemble_size": self.cfg.ensemble_size,
            "versions": {
                "llosim": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
                "kernel_backend": kernels.BACKEND,
            },
            "files": sorted(self.files),
        }
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / MANIFEST).write_text(json.dumps(doc, indent=2) + "\n")


def _plain(x):
    """JSON-safe copy: arrays to lists, non-finite floats to strings."""
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if np.isfinite(v) else str(v)
    if isinstance(x, np.integer):
        return int(x)
    return x


def _stat(s) -> dict:
    return {"mean": s.mean, "std_error": s.std_error, "n_realizations": s.n_realizations}


# -- subcommands ----------------------------------------------------------------


def cmd_simulate(cfg: RunConfig, out: Writer) -> None:
    schedule = cfg.schedule()
    plans = [plan(schedule, c, cfg.spectrum) for c in cfg.controllers]
    traces = simulate(cfg.spectrum, schedule, cfg.controllers, cfg.ensemble_size, cfg.seed, cfg.grid_points, plans=plans)
    for c, tr in zip(cfg.controllers, traces):
        label = controller_label(c)
        stats = curve_stats(tr)
        out.table(
            f"curve_{label}",
            ["N", "mean", "std_error"],
            [[i + 2, s.mean, s.std_error] for i, s in enumerate(stats)],
        )
        if cfg.output.traces:
            rows = []
            for r in range(min(cfg.output.traces, tr.size)):
                rows += [[r, *row] for row in tr.rows_csv(r)]
            out.table(
                f"trace_{label}",
                ["realization", "cycle", "t_c", "raw_sample", "llo_sample", "correction", "true_offset"],
                rows,
            )


def _windows_section(cfg: RunConfig, name: str):
    sec = cfg.sections.get(name, {})
    if "windows" in sec:
        try:
            wins = [MeasurementWindow(float(a), float(b)) for a, b in sec["windows"]]
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"{name}.windows must be [start, end] pairs", field=f"{name}.windows") from exc
        if "t_c" not in sec:
            raise ConfigurationError(f"missing {name}.t_c", field=f"{name}.t_c")
        return wins, float(sec["t_c"])
    if "durations" in sec:
        s = build_schedule(1, sec["durations"], float(sec.get("dead_time", 0.0)))
        return s.windows, float(s.end)
    raise ConfigurationError(f"[{name}] needs windows + t_c or durations + dead_time", field=name)


def _blocks_report(cfg: RunConfig, windows, t_c, w: float) -> dict:
    blocks = build_sigma(cfg.spectrum, windows, t_c, CovarianceTable(cfg.spectrum))
    b = blocks.normalized()
    cond = float(np.linalg.cond(b.M))
    report = {
        "windows": [[x.t_start, x.t_end] for x in windows],
        "t_c": t_c,
        "M": blocks.M,
        "F": blocks.F,
        "sigma_cc": blocks.sigma_cc,
        "condition_number": cond,
        "min_eigenvalue": blocks.min_eigenvalue,
        "ridge_applied": bool(not np.isfinite(cond) or cond > MAX_CONDITION),
        "correlation_condition": correlation_condition(blocks, w),
    }
    try:
        cp = predictor_coeffs_paper(blocks, w)
        report["coefficients_paper"] = cp
        report["accuracy_analytic"] = accuracy_analytic(blocks, w)
        report["accuracy_exact_paper"] = accuracy_of_coefficients(b, cp)
    except EstimatorError as exc:
        report["coefficients_paper"] = None
        report["paper_form_error"] = str(exc)
    cm = w * predictor_coeffs_mmse(blocks, allow_ridge=True)
    report["coefficients_mmse"] = cm
    report["accuracy_exact_mmse"] = accuracy_of_coefficients(b, cm)
    return report


def cmd_covariance(cfg: RunConfig, out: Writer) -> None:
    windows, t_c = _windows_section(cfg, "covariance")
    w = float(cfg.sections.get("covariance", {}).get("gain", 1.0))
    out.json("covariance", _blocks_report(cfg, windows, t_c, w))


def cmd_accuracy(cfg: RunConfig, out: Writer) -> None:
    windows, t_c = _windows_section(cfg, "accuracy")
    w = float(cfg.sections.get("accuracy", {}).get("gain", 1.0))
    report = _blocks_report(cfg, windows, t_c, w)
    schedule = CycleSchedule((Cycle(tuple(windows), t_c),))
    traces = simulate(cfg.spectrum, schedule, cfg.controllers, cfg.ensemble_size, cfg.seed, cfg.grid_points)
    report["monte_carlo"] = {
        controller_label(c): _stat(accuracy_from_trace(tr)) for c, tr in zip(cfg.controllers, traces)
    }
    out.json("accuracy", report)


def _values(sec: dict) -> list[float]:
    if "values" in sec:
        vals = sec["values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigurationError("sweep.values must be a non-empty list", field="sweep.values")
        return [float(v) for v in vals]
    raise ConfigurationError("missing sweep.values", field="sweep.values")


def cmd_sweep(cfg: RunConfig, out: Writer) -> None:
    sec = cfg.sections.get("sweep", {})
    axis = sec.get("axis")
    if axis not in AXES:
        raise ConfigurationError(f"unknown sweep axis {axis!r}; valid axes: {', '.join(AXES)}", field="sweep.axis")
    sched = cfg.schedule_section
    spec = SweepSpec(
        spectrum=cfg.spectrum,
        controllers=cfg.controllers,
        axis=axis,
        n_cycles=int(sec.get("n", sched.get("n_cycles", 20))),
        cycle_time=float(sched.get("cycle_time", 1.0)),
        duty_factor=float(sched.get("duty_factor", 1.0)),
        t_min=float(sec.get("t_min", 1.0)),
        dead_time=float(sec.get("dead_time", 1.0)),
        ensemble_size=cfg.ensemble_size,
        seed=cfg.seed,
        grid_points=cfg.grid_points,
        method=sec.get("method", "mc"),
    )
    rows = sweep(spec, _values(sec), workers=cfg.workers)
    dicts = [r.as_dict() for r in rows]
    header = list(dicts[0])
    out.table(f"sweep_{axis}", header, [[d[h] for h in header] for d in dicts])


def cmd_optimize(cfg: RunConfig, out: Writer) -> None:
    sec = cfg.sections.get("optimize", {})
    objective = sec.get("objective", "accuracy_analytic")
    if objective not in OBJECTIVES:
        raise ConfigurationError(
            f"unknown objective {objective!r}; valid: {', '.join(OBJECTIVES)}", field="optimize.objective"
        )
    res = optimize_ramsey_durations(
        cfg.spectrum,
        n=int(sec.get("n", 2)),
        t_min=float(sec.get("t_min", 1.0)),
        dead_time=float(sec.get("dead_time", 1.0)),
        total_budget=sec.get("total_budget"),
        objective=objective,
        coeff_mode=sec.get("coeff_mode", "mmse"),
        ensemble_size=cfg.ensemble_size,
        seed=cfg.seed,
        grid_points=cfg.grid_points,
        opts=SimplexOptions(
            max_iters=int(sec.get("max_iters", 200)),
            x_tolerance=float(sec.get("x_tolerance", 1e-4)),
            f_tolerance=float(sec.get("f_tolerance", 1e-7)),
        ),
    )
    fb = res.feedback_accuracy.mean
    header = ["name", "ratio", "durations", "accuracy", "std_error", "vs_feedback"]
    rows = [
        ["optimized", res.ratio, " ".join(f"{d:.6g}" for d in res.durations), res.accuracy.mean, res.accuracy.std_error, res.accuracy.mean / fb],
        ["equal", 1.0, " ".join(f"{res.t_min:.6g}" for _ in res.durations), res.equal_accuracy.mean, res.equal_accuracy.std_error, res.equal_accuracy.mean / fb],
        ["feedback", float("nan"), f"{res.t_min:.6g}", fb, res.feedback_accuracy.std_error, 1.0],
    ]
    if cfg.output.format == "json":
        out.json(
            "optimize",
            {
                "durations": res.durations,
                "ratio": res.ratio,
                "accuracy": _stat(res.accuracy),
                "equal_accuracy": _stat(res.equal_accuracy),
                "feedback_accuracy": _stat(res.feedback_accuracy),
                "iterations": res.iterations,
                "converged": res.converged,
                "flat_landscape": res.flat,
            },
        )
    else:
        out.table("optimize", header, rows)
    if res.flat:
        log.warning("objective landscape is flat within 0.1%%")


COMMANDS = {
    "simulate": cmd_simulate,
    "covariance": cmd_covariance,
    "accuracy": cmd_accuracy,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="llosim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help=f"TOML config (env {ENV_PREFIX}CONFIG)")
        p.add_argument("--seed", type=int, help="master seed, overrides the config")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, help="worker processes (default: CPU count)")
        p.add_argument("--format", choices=FORMATS, help="table format")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    env = env_overrides()
    try:
        path = args.config or env.get("config")
        if not path:
            raise ConfigurationError(f"no config given (--config or {ENV_PREFIX}CONFIG)", field="config")
        cfg = load_config(
            path,
            seed=args.seed if args.seed is not None else env.get("seed"),
            out=args.out or env.get("out"),
            workers=args.workers if args.workers is not None else env.get("workers"),
            fmt=args.format or env.get("format"),
        )
        writer = Writer(cfg, args.command)
        COMMANDS[args.command](cfg, writer)
        writer.manifest()
    except ConfigurationError as exc:
        where = f" [{exc.field}]" if exc.field else ""
        print(f"llosim: configuration error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - every runtime failure maps to exit 1
        log.debug("runtime failure", exc_info=True)
        print(f"llosim: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
