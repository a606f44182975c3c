"""Experiment command line: solve runs, convergence tables, stability scans.

Subcommands
-----------
``solve``      single run, field snapshots, errors when an exact solution exists
``converge``   space-time or time-only refinement study (mode from the config)
``stability``  amplification-factor scans and |r| = 1 boundaries
``table``      global-relative-error table against the published comparisons

Each subcommand takes ``--config <path>`` (flat JSON), inline overrides
``--set key=value`` and ``--out <dir>``.  Exit codes: 0 success, 2 config
error, 3 numerical instability, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from . import analysis, stepper
from .analysis import ErrorReport
from .compact_fd import BoundaryScheme
from .problems import ProblemSpec, make_problem
from .stepper import InstabilityError

# Published GRE values for problem 1 (N = 200, k = 0.01) from the septic
# B-spline collocation, quintic B-spline collocation and lattice-Boltzmann
# comparison schemes.  Literature reference values only, never recomputed.
LITERATURE_GRE = {
    "sbsc": {6.0: 1.625e-07, 8.0: 1.940e-07, 10.0: 2.229e-07, 12.0: 5.314e-07},
    "qbsc": {6.0: 6.509e-06, 8.0: 7.132e-06, 10.0: 7.310e-06, 12.0: 8.776e-06},
    "lbm": {6.0: 7.881e-06, 8.0: 9.532e-06, 10.0: 1.089e-05, 12.0: 1.179e-05},
}

MODES = ("solve", "converge-space-time", "converge-time", "stability", "gre-table")

_KEY_TO_FIELD = {
    "mode": "mode",
    "problem": "problem",
    "N": "n_points",
    "h": "h",
    "k": "k",
    "T": "t_final",
    "snapshots": "snapshots",
    "times": "times",
    "beta": "beta",
    "y": "y",
    "window": "window",
    "resolution": "resolution",
}
_FIELD_TO_KEY = {v: k for k, v in _KEY_TO_FIELD.items()}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _near_multiple(value: float, unit: float) -> bool:
    ratio = value / unit
    return abs(ratio - round(ratio)) <= 1e-9 * max(1.0, abs(ratio))


def _is_halving(seq) -> bool:
    return all(abs(b - a / 2.0) <= 1e-12 * abs(a) for a, b in zip(seq, seq[1:]))


def parse_y_value(raw) -> complex:
    """Accept plain numbers or strings like '-2', '5i', '-20i'."""
    if isinstance(raw, (int, float)):
        return complex(float(raw), 0.0)
    text = str(raw).strip().replace(" ", "")
    if text.endswith(("i", "j")):
        body = text[:-1]
        if body in ("", "+", "-"):
            body += "1"
        return complex(0.0, float(body))
    return complex(float(text), 0.0)


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    problem: Optional[int] = None
    n_points: Optional[int] = None
    h: Optional[Tuple[float, ...] | float] = None
    k: Optional[Tuple[float, ...] | float] = None
    t_final: Optional[float] = None
    snapshots: Tuple[float, ...] = ()
    times: Tuple[float, ...] = ()
    beta: Optional[float] = None
    y: Tuple[str, ...] = ()
    window: Optional[Tuple[float, float, float, float]] = None
    resolution: int = 512

    def y_values(self) -> Tuple[complex, ...]:
        return tuple(parse_y_value(label) for label in self.y)

    def k_list(self) -> Tuple[float, ...]:
        return self.k if isinstance(self.k, tuple) else (self.k,)

    def h_list(self) -> Tuple[float, ...]:
        return self.h if isinstance(self.h, tuple) else (self.h,)


def _coerce(key: str, value):
    if key == "mode":
        return str(value)
    if key == "problem":
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"problem must be an integer, got {value!r}")
        return value
    if key == "N":
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"N must be an integer, got {value!r}")
        return value
    if key == "resolution":
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"resolution must be an integer, got {value!r}")
        return value
    if key in ("h", "k"):
        if isinstance(value, (list, tuple)):
            return tuple(float(v) for v in value)
        return float(value)
    if key in ("T", "beta"):
        return float(value)
    if key in ("snapshots", "times"):
        if not isinstance(value, (list, tuple)):
            value = [value]
        return tuple(float(v) for v in value)
    if key == "y":
        if not isinstance(value, (list, tuple)):
            value = [value]
        labels = tuple(str(v) for v in value)
        for label in labels:
            parse_y_value(label)  # fail fast on malformed entries
        return labels
    if key == "window":
        if not (isinstance(value, (list, tuple)) and len(value) == 4):
            raise ConfigError("window must be [re_min, re_max, im_min, im_max]")
        return tuple(float(v) for v in value)
    raise ConfigError(f"unknown config key {key!r}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a flat JSON configuration document."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object of flat keys")
    return config_from_dict(data)


def config_from_dict(data: dict) -> ExperimentConfig:
    kwargs = {}
    for key, value in data.items():
        if key not in _KEY_TO_FIELD:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            kwargs[_KEY_TO_FIELD[key]] = _coerce(key, value)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"bad value for {key!r}: {err}") from err
    cfg = ExperimentConfig(**kwargs) if "mode" in kwargs else None
    if cfg is None:
        raise ConfigError("config requires a mode")
    validate_config(cfg)
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config` (round-trips exactly)."""
    data = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if f.name in ("snapshots", "times", "y") and len(value) == 0:
            continue
        if f.name == "resolution" and cfg.mode != "stability":
            continue
        if isinstance(value, tuple):
            value = list(value)
        data[_FIELD_TO_KEY[f.name]] = value
    return json.dumps(data, indent=2) + "\n"


def apply_overrides(data: dict, pairs) -> dict:
    """Fold --set key=value pairs into a raw config dictionary."""
    out = dict(data)
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, raw = pair.split("=", 1)
        key = key.strip()
        raw = raw.strip()
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            if "," in raw:
                value = []
                for item in raw.split(","):
                    try:
                        value.append(json.loads(item))
                    except json.JSONDecodeError:
                        value.append(item.strip())
            else:
                value = raw
        out[key] = value
    return out


def _require(cfg: ExperimentConfig, names, forbid):
    for name in names:
        value = getattr(cfg, name)
        if value is None or (isinstance(value, tuple) and len(value) == 0):
            raise ConfigError(f"mode {cfg.mode!r} requires {_FIELD_TO_KEY[name]!r}")
    for name in forbid:
        value = getattr(cfg, name)
        if value is not None and not (isinstance(value, tuple) and len(value) == 0):
            raise ConfigError(f"mode {cfg.mode!r} does not accept {_FIELD_TO_KEY[name]!r}")


def validate_config(cfg: ExperimentConfig):
    if cfg.mode not in MODES:
        raise ConfigError(f"unknown mode {cfg.mode!r}; expected one of {MODES}")

    if cfg.mode == "stability":
        _require(cfg, ["y"], ["problem", "n_points", "h", "k", "t_final",
                              "snapshots", "times", "beta"])
        if cfg.resolution < 16:
            raise ConfigError("stability resolution must be at least 16")
        if cfg.window is not None:
            re_min, re_max, im_min, im_max = cfg.window
            if not (re_max > re_min and im_max > im_min):
                raise ConfigError("window must satisfy re_min < re_max and im_min < im_max")
        return

    if cfg.problem not in (1, 2, 3, 4):
        raise ConfigError(f"problem must be 1..4, got {cfg.problem}")
    if cfg.beta is not None and cfg.problem != 4:
        raise ConfigError("beta override is only available for problem 4")
    if cfg.window is not None or cfg.y:
        raise ConfigError(f"mode {cfg.mode!r} does not accept stability keys")

    if cfg.mode == "solve":
        _require(cfg, ["k", "t_final"], ["times"])
        if isinstance(cfg.k, tuple):
            raise ConfigError("solve takes a single time step")
        if (cfg.n_points is None) == (cfg.h is None):
            raise ConfigError("solve requires exactly one of N or h")
        if cfg.h is not None and isinstance(cfg.h, tuple):
            raise ConfigError("solve takes a single spacing h")
        if cfg.k <= 0 or cfg.t_final <= 0:
            raise ConfigError("k and T must be positive")
        if not _near_multiple(cfg.t_final, cfg.k):
            raise ConfigError(f"T = {cfg.t_final} is not an integer multiple of k = {cfg.k}")
        for t_snap in cfg.snapshots:
            if t_snap < 0 or t_snap > cfg.t_final or not _near_multiple(t_snap, cfg.k):
                raise ConfigError(f"snapshot time {t_snap} is not a step multiple within [0, T]")
        return

    if cfg.mode == "converge-space-time":
        _require(cfg, ["h", "k", "t_final"], ["n_points", "snapshots", "times"])
        if cfg.problem != 1:
            raise ConfigError("space-time convergence requires the problem with an exact solution")
        h_seq, k_seq = cfg.h, cfg.k
        if not (isinstance(h_seq, tuple) and isinstance(k_seq, tuple)):
            raise ConfigError("converge-space-time requires h and k lists")
        if len(h_seq) != len(k_seq) or len(h_seq) < 2:
            raise ConfigError("h and k lists must have equal length >= 2")
        if not (_is_halving(h_seq) and _is_halving(k_seq)):
            raise ConfigError("refinement lists must halve at every level")
        for k_val in k_seq:
            if not _near_multiple(cfg.t_final, k_val):
                raise ConfigError(f"T = {cfg.t_final} is not an integer multiple of k = {k_val}")
        return

    if cfg.mode == "converge-time":
        _require(cfg, ["n_points", "k", "t_final"], ["h", "snapshots", "times"])
        k_seq = cfg.k
        if not isinstance(k_seq, tuple) or len(k_seq) < 2:
            raise ConfigError("converge-time requires a k list of length >= 2")
        if not _is_halving(k_seq):
            raise ConfigError("k list must halve at every level")
        for k_val in (2.0 * k_seq[0],) + k_seq:
            if not _near_multiple(cfg.t_final, k_val):
                raise ConfigError(f"T = {cfg.t_final} is not an integer multiple of k = {k_val}")
        return

    # gre-table
    _require(cfg, ["n_points", "k", "times"], ["h", "snapshots"])
    if cfg.problem != 1:
        raise ConfigError("the GRE table requires the problem with an exact solution")
    if isinstance(cfg.k, tuple):
        raise ConfigError("gre-table takes a single time step")
    if list(cfg.times) != sorted(cfg.times) or len(set(cfg.times)) != len(cfg.times):
        raise ConfigError("times must be strictly increasing")
    for t_val in cfg.times:
        if t_val <= 0 or not _near_multiple(t_val, cfg.k):
            raise ConfigError(f"time {t_val} is not a positive step multiple")
    if cfg.t_final is not None and cfg.t_final < max(cfg.times):
        raise ConfigError("T must cover the last requested time")


def _points_from_spacing(spec: ProblemSpec, h: float) -> int:
    length = spec.domain[1] - spec.domain[0]
    intervals = length / h
    if not _near_multiple(length, h):
        raise ConfigError(f"h = {h} does not divide the domain length {length}")
    n_intervals = int(round(intervals))
    if spec.scheme is BoundaryScheme.PERIODIC:
        return n_intervals
    return n_intervals + 1


def _resolve_points(cfg: ExperimentConfig, spec: ProblemSpec, h=None) -> int:
    if h is not None:
        return _points_from_spacing(spec, h)
    if cfg.n_points is not None:
        return cfg.n_points
    return _points_from_spacing(spec, cfg.h)


def _timed_run(spec: ProblemSpec, n_points: int, k: float, t_final: float, observer=None):
    """Integrate one configuration; returns (system, final state, timings)."""
    t0 = time.perf_counter()
    sys_ = spec.build_system(n_points)
    u0 = spec.initial_state(sys_)
    ws = stepper.prepare(sys_, k)
    t_setup = time.perf_counter() - t0
    t1 = time.perf_counter()
    u_final = stepper.integrate(sys_, u0, k, t_final, observer=observer, workspace=ws)
    t_loop = time.perf_counter() - t1
    return sys_, u_final, {"cpu_loop_seconds": t_loop, "cpu_total_seconds": t_setup + t_loop}


def _fmt(value) -> str:
    return "" if value is None else f"{value:.3E}"


def _write_table(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_field(path: Path, x: np.ndarray, u: np.ndarray):
    np.savetxt(path, np.column_stack([x, u]), delimiter=",", fmt="%.17e",
               header="x,u", comments="")


def _time_label(t_val: float) -> str:
    return f"{t_val:g}"


def _sanitize_label(label: str) -> str:
    return "".join(ch if (ch.isalnum() or ch in "+-.") else "_" for ch in label)


def run(cfg: ExperimentConfig, out_dir) -> dict:
    """Execute the experiment and write report.json plus CSV outputs.

    On numerical instability the partial report is still written before the
    error propagates.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "config": json.loads(serialize_config(cfg)),
        "mode": cfg.mode,
        "rows": [],
        "outputs": [],
    }
    try:
        if cfg.mode == "solve":
            _run_solve(cfg, out, report)
        elif cfg.mode == "converge-space-time":
            _run_converge_space_time(cfg, out, report)
        elif cfg.mode == "converge-time":
            _run_converge_time(cfg, out, report)
        elif cfg.mode == "gre-table":
            _run_gre_table(cfg, out, report)
        else:
            _run_stability(cfg, out, report)
    except InstabilityError as err:
        report["instability"] = {
            "message": str(err),
            "step_index": err.step_index,
            "time": err.time,
            "max_abs": err.max_abs,
        }
        _write_report(out, report)
        raise
    _write_report(out, report)
    return report


def _write_report(out: Path, report: dict):
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")


def _run_solve(cfg: ExperimentConfig, out: Path, report: dict):
    spec = make_problem(cfg.problem, beta=cfg.beta)
    n_points = _resolve_points(cfg, spec)
    snapshots = cfg.snapshots or (cfg.t_final,)
    wanted = {round(t_val / cfg.k): t_val for t_val in snapshots}
    captured = {}

    def observer(t_now, u_now):
        idx = round(t_now / cfg.k)
        if idx in wanted:
            captured[wanted[idx]] = np.array(u_now, copy=True)

    sys_, u_final, timings = _timed_run(spec, n_points, cfg.k, cfg.t_final, observer)
    x_full = sys_.grid.nodes()
    for t_snap in sorted(captured):
        name = f"field_t{_time_label(t_snap)}.csv"
        _write_field(out / name, x_full, sys_.full_state(captured[t_snap]))
        report["outputs"].append(name)
    row = {
        "n_points": n_points,
        "h": sys_.grid.h,
        "k": cfg.k,
        "T": cfg.t_final,
        **timings,
    }
    if spec.exact_solution is not None:
        exact = spec.exact_solution(sys_.active_nodes(), cfg.t_final)
        err = ErrorReport(
            max_norm=analysis.max_norm_error(exact, u_final),
            gre=analysis.gre(exact, u_final),
            cpu_seconds=timings["cpu_loop_seconds"],
        )
        row.update(err.to_dict())
    report["rows"].append(row)
    header = ["n_points", "h", "k", "T", "max_norm", "gre", "cpu_loop_s"]
    _write_table(out / "table.csv", header, [[
        str(n_points), f"{sys_.grid.h:g}", f"{cfg.k:g}", f"{cfg.t_final:g}",
        _fmt(row.get("max_norm")), _fmt(row.get("gre")), f"{timings['cpu_loop_seconds']:.4f}",
    ]])
    report["outputs"].append("table.csv")


def _run_converge_space_time(cfg: ExperimentConfig, out: Path, report: dict):
    spec = make_problem(cfg.problem, beta=cfg.beta)
    errors = []
    rows_csv = []
    for h_val, k_val in zip(cfg.h_list(), cfg.k_list()):
        n_points = _resolve_points(cfg, spec, h=h_val)
        sys_, u_final, timings = _timed_run(spec, n_points, k_val, cfg.t_final)
        exact = spec.exact_solution(sys_.active_nodes(), cfg.t_final)
        e_inf = analysis.max_norm_error(exact, u_final)
        order = analysis.observed_order(errors[-1], e_inf) if errors else None
        errors.append(e_inf)
        row = {
            "n_points": n_points, "h": h_val, "k": k_val, "T": cfg.t_final,
            "max_norm": e_inf, "gre": analysis.gre(exact, u_final),
            "observed_order": order, **timings,
        }
        report["rows"].append(row)
        rows_csv.append([
            str(n_points), f"{h_val:g}", f"{k_val:g}", f"{cfg.t_final:g}",
            _fmt(e_inf), "" if order is None else f"{order:.4f}",
            f"{timings['cpu_loop_seconds']:.4f}",
        ])
    _write_table(out / "table.csv",
                 ["n_points", "h", "k", "T", "max_norm", "order", "cpu_loop_s"], rows_csv)
    report["outputs"].append("table.csv")


def _run_converge_time(cfg: ExperimentConfig, out: Path, report: dict):
    spec = make_problem(cfg.problem, beta=cfg.beta)
    n_points = cfg.n_points
    k_seq = cfg.k_list()
    k_ref = 2.0 * k_seq[0]
    _, u_prev, timings_ref = _timed_run(spec, n_points, k_ref, cfg.t_final)
    report["reference_run"] = {"k": k_ref, **timings_ref}
    e_prev = None
    rows_csv = []
    grid_h = spec.grid(n_points).h
    for k_val in k_seq:
        sys_, u_final, timings = _timed_run(spec, n_points, k_val, cfg.t_final)
        e_k = analysis.self_difference_error(u_final, u_prev)
        order = analysis.observed_order(e_prev, e_k) if e_prev is not None else None
        row = {
            "n_points": n_points, "h": grid_h, "k": k_val, "T": cfg.t_final,
            "e_k": e_k, "observed_order": order, **timings,
        }
        report["rows"].append(row)
        rows_csv.append([
            str(n_points), f"{grid_h:g}", f"{k_val:g}", f"{cfg.t_final:g}",
            _fmt(e_k), "" if order is None else f"{order:.4f}",
            f"{timings['cpu_loop_seconds']:.4f}",
        ])
        u_prev, e_prev = u_final, e_k
    _write_table(out / "table.csv",
                 ["n_points", "h", "k", "T", "e_k", "order", "cpu_loop_s"], rows_csv)
    report["outputs"].append("table.csv")


def _run_gre_table(cfg: ExperimentConfig, out: Path, report: dict):
    spec = make_problem(cfg.problem)
    n_points = cfg.n_points
    t_final = cfg.t_final if cfg.t_final is not None else max(cfg.times)
    wanted = {round(t_val / cfg.k): t_val for t_val in cfg.times}
    captured = {}

    def observer(t_now, u_now):
        idx = round(t_now / cfg.k)
        if idx in wanted:
            captured[wanted[idx]] = np.array(u_now, copy=True)

    sys_, _, timings = _timed_run(spec, n_points, cfg.k, t_final, observer)
    x_active = sys_.active_nodes()
    rows_csv = []
    for t_val in cfg.times:
        exact = spec.exact_solution(x_active, t_val)
        gre_val = analysis.gre(exact, captured[t_val])
        row = {
            "n_points": n_points, "h": sys_.grid.h, "k": cfg.k, "time": t_val,
            "gre": gre_val,
            "literature": {name: table.get(t_val) for name, table in LITERATURE_GRE.items()},
        }
        report["rows"].append(row)
        rows_csv.append([
            str(n_points), f"{sys_.grid.h:g}", f"{cfg.k:g}", f"{t_val:g}", _fmt(gre_val),
            *(_fmt(LITERATURE_GRE[name].get(t_val)) for name in ("sbsc", "qbsc", "lbm")),
        ])
    report["timings"] = timings
    _write_table(out / "table.csv",
                 ["n_points", "h", "k", "time", "gre", "gre_sbsc_literature",
                  "gre_qbsc_literature", "gre_lbm_literature"], rows_csv)
    report["outputs"].append("table.csv")


def _run_stability(cfg: ExperimentConfig, out: Path, report: dict):
    window = cfg.window if cfg.window is not None else analysis.DEFAULT_WINDOW
    for label, y_val in zip(cfg.y, cfg.y_values()):
        t0 = time.perf_counter()
        field_ = analysis.stability_scan(y_val, window=window, resolution=cfg.resolution)
        elapsed = time.perf_counter() - t0
        tag = _sanitize_label(label)
        field_name = f"stability_y{tag}.csv"
        boundary_name = f"boundary_y{tag}.csv"
        analysis.write_field_csv(field_, out / field_name)
        analysis.write_boundary_csv(field_, out / boundary_name)
        report["rows"].append({
            "y": label,
            "window": list(window),
            "resolution": cfg.resolution,
            "area": field_.area(),
            "empty": field_.is_empty,
            "n_boundary_polylines": len(field_.boundary),
            "cpu_seconds": elapsed,
        })
        report["outputs"].extend([field_name, boundary_name])


_SUBCOMMAND_MODES = {
    "solve": ("solve",),
    "converge": ("converge-space-time", "converge-time"),
    "stability": ("stability",),
    "table": ("gre-table",),
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="imexks", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMAND_MODES:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="path to a JSON config")
        cmd.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                         help="override a config key")
        cmd.add_argument("--out", default="out", help="output directory")
    args = parser.parse_args(argv)

    try:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object of flat keys")
        raw = apply_overrides(raw, args.set)
        cfg = config_from_dict(raw)
        if cfg.mode not in _SUBCOMMAND_MODES[args.command]:
            raise ConfigError(
                f"subcommand {args.command!r} cannot run mode {cfg.mode!r}")
    except json.JSONDecodeError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 4

    try:
        report = run(cfg, args.out)
    except InstabilityError as err:
        print(f"numerical instability: {err} (step {err.step_index}, t = {err.time})",
              file=sys.stderr)
        return 3
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 4
    print(f"wrote {len(report['outputs']) + 1} files to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
