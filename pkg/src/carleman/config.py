"""Experiment configuration files (YAML) with load-time validation."""

from __future__ import annotations

import inspect
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .problems import PROBLEMS, get_problem
from .solvers import AceConfig, GridSpec

SOLVERS = ("sce", "pce", "ace", "gce")

# solver-section keys accepted for each solver, beyond the shared ``name`` and ``P``
_SOLVER_KEYS = {
    "sce": {"center"},
    "pce": {"xi"},
    "ace": {"eps_tol", "dxi", "xi_min", "xi_max", "xi_init"},
    "gce": {"grid_center", "xi_norm", "half_widths"},
}
_TOP_KEYS = {"label", "problem", "solver", "X0", "t_max", "dt", "output"}


class ConfigError(ValueError):
    """Invalid configuration; the message names the field and, when known, the line."""

    def __init__(self, field_name: str, message: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{field_name}{where}: {message}")
        self.field = field_name
        self.line = line


@dataclass(frozen=True)
class ExperimentConfig:
    label: str
    problem: str
    params: dict
    solver: str
    P: int = 6
    xi: float = 0.1
    center: tuple | None = None
    ace: AceConfig | None = None
    grid: GridSpec | None = None
    X0: tuple = ()
    t_max: float = 10.0
    dt: float = 1e-3
    output: str = "runs"
    source: str | None = field(default=None, compare=False)

    @property
    def run_dir(self) -> Path:
        return Path(self.output) / self.label

    def to_dict(self) -> dict:
        """Plain-data view suitable for a report."""
        out = {
            "label": self.label,
            "problem": {"name": self.problem, "params": dict(self.params)},
            "solver": {"name": self.solver, "P": self.P},
            "X0": list(self.X0),
            "t_max": self.t_max,
            "dt": self.dt,
        }
        s = out["solver"]
        if self.solver == "pce":
            s["xi"] = self.xi
        elif self.solver == "sce" and self.center is not None:
            s["center"] = list(self.center)
        elif self.solver == "ace":
            s.update(asdict(self.ace))
        elif self.solver == "gce":
            s["grid_center"] = self.grid.center.tolist()
            s["half_widths"] = self.grid.half_widths.tolist()
        return out


def _builder_params(name: str, given: dict) -> dict:
    """Builder keyword arguments with defaults filled in."""
    sig = inspect.signature(PROBLEMS[name])
    out = {k: float(p.default) for k, p in sig.parameters.items() if p.default is not inspect.Parameter.empty}
    out.update(given)
    return out


def _line_index(text: str) -> dict:
    """Map dotted key paths to 1-based source lines."""
    lines: dict[str, int] = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}.{k.value}" if prefix else str(k.value)
                lines[path] = k.start_mark.line + 1
                walk(v, path)

    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines
    walk(root, "")
    return lines


def _set_path(data: dict, path: str, value) -> None:
    keys = path.split(".")
    node = data
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            node[k] = {} if k not in node else {"name": node[k]}
        node = node[k]
    node[keys[-1]] = value


def parse_override(item: str) -> tuple[str, Any]:
    """``key.path=value`` with the value parsed as YAML."""
    if "=" not in item:
        raise ConfigError(item, "override must look like key=value")
    key, raw = item.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(key, f"cannot parse override value {raw!r}: {exc}") from None
    return key.strip(), value


def _number(val, name, line, *, integer=False):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(name, f"expected a number, got {val!r}", line)
    if integer:
        if int(val) != val:
            raise ConfigError(name, f"expected an integer, got {val!r}", line)
        return int(val)
    if not math.isfinite(val):
        raise ConfigError(name, f"must be finite, got {val!r}", line)
    return float(val)


def _vector(val, name, line, n=None):
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        val = [val]
    if not isinstance(val, (list, tuple)):
        raise ConfigError(name, f"expected a list of numbers, got {val!r}", line)
    out = tuple(_number(v, name, line) for v in val)
    if n is not None and len(out) != n:
        raise ConfigError(name, f"expected {n} components, got {len(out)}", line)
    return out


def build_config(data: dict, lines: dict | None = None, source: str | None = None) -> ExperimentConfig:
    """Validate raw mapping data and fill defaults from the problem definition."""
    lines = lines or {}
    line = lines.get
    if not isinstance(data, dict):
        raise ConfigError("<root>", "top level must be a mapping")
    for k in data:
        if k not in _TOP_KEYS:
            raise ConfigError(k, f"unknown field; expected one of {sorted(_TOP_KEYS)}", line(k))

    prob = data.get("problem")
    if isinstance(prob, str):
        prob = {"name": prob}
    if not isinstance(prob, dict) or "name" not in prob:
        raise ConfigError("problem", "must name a problem", line("problem"))
    pname = prob["name"]
    if pname not in PROBLEMS:
        raise ConfigError("problem.name", f"unknown problem {pname!r}; choose from {sorted(PROBLEMS)}",
                          line("problem.name") or line("problem"))
    for k in prob:
        if k not in ("name", "params"):
            raise ConfigError(f"problem.{k}", "unknown field; expected name or params", line(f"problem.{k}"))
    raw_params = prob.get("params") or {}
    if not isinstance(raw_params, dict):
        raise ConfigError("problem.params", "must be a mapping", line("problem.params"))
    params = {k: _number(v, f"problem.params.{k}", line(f"problem.params.{k}")) for k, v in raw_params.items()}
    try:
        spec = get_problem(pname, **params)
    except (TypeError, ValueError) as exc:
        raise ConfigError("problem.params", str(exc), line("problem.params") or line("problem")) from None

    solver = data.get("solver")
    if isinstance(solver, str):
        solver = {"name": solver}
    if not isinstance(solver, dict) or "name" not in solver:
        raise ConfigError("solver", "must name a solver", line("solver"))
    sname = solver["name"]
    if sname not in SOLVERS:
        raise ConfigError("solver.name", f"unknown solver {sname!r}; choose from {list(SOLVERS)}",
                          line("solver.name") or line("solver"))
    allowed = {"name", "P"} | _SOLVER_KEYS[sname]
    for k in solver:
        if k not in allowed:
            raise ConfigError(f"solver.{k}", f"not a {sname} setting; expected one of {sorted(allowed)}",
                              line(f"solver.{k}"))

    def sval(key, default, **kw):
        return _number(solver[key], f"solver.{key}", line(f"solver.{key}"), **kw) if key in solver else default

    P = sval("P", 6, integer=True)
    if P < spec.p:
        raise ConfigError("solver.P", f"truncation order must satisfy P >= {spec.p} (field order)",
                          line("solver.P"))

    xi, center, ace, grid = 0.1, None, None, None
    if sname == "pce":
        xi = sval("xi", 0.1)
        if not 0 < xi <= 1:
            raise ConfigError("solver.xi", f"chart radius must satisfy 0 < xi <= 1 (|x| <= xi <= 1), got {xi}",
                              line("solver.xi"))
    elif sname == "sce" and "center" in solver:
        center = _vector(solver["center"], "solver.center", line("solver.center"), spec.n)
    elif sname == "ace":
        kw = {k: sval(k, getattr(AceConfig, k)) for k in _SOLVER_KEYS["ace"]}
        try:
            ace = AceConfig(**kw)
        except ValueError as exc:
            raise ConfigError("solver", str(exc), line("solver")) from None
    elif sname == "gce":
        gc = _vector(solver.get("grid_center", [0.0] * spec.n), "solver.grid_center",
                     line("solver.grid_center"), spec.n)
        if "half_widths" in solver and "xi_norm" in solver:
            raise ConfigError("solver.half_widths", "give either half_widths or xi_norm, not both",
                              line("solver.half_widths"))
        try:
            if "half_widths" in solver:
                hw = _vector(solver["half_widths"], "solver.half_widths", line("solver.half_widths"), spec.n)
                grid = GridSpec(np.array(gc), np.array(hw))
            else:
                grid = GridSpec.uniform(gc, sval("xi_norm", 0.1))
        except ValueError as exc:
            key = "solver.half_widths" if "half_widths" in solver else "solver.xi_norm"
            raise ConfigError(key, f"{exc}; tiles need sqrt(sum xi_i^2) <= 1", line(key)) from None

    X0 = _vector(data["X0"], "X0", line("X0"), spec.n) if "X0" in data else tuple(spec.default_initial)
    t_max = _number(data["t_max"], "t_max", line("t_max")) if "t_max" in data else float(spec.default_t_max)
    if t_max <= 0:
        raise ConfigError("t_max", f"must be positive, got {t_max}", line("t_max"))
    dt = _number(data["dt"], "dt", line("dt")) if "dt" in data else 1e-3
    if dt <= 0:
        raise ConfigError("dt", f"must be positive, got {dt}", line("dt"))

    label = data.get("label") or (Path(source).stem if source else f"{pname}_{sname}")
    if not isinstance(label, str) or "/" in label:
        raise ConfigError("label", f"must be a plain name, got {label!r}", line("label"))
    output = str(data.get("output", "runs"))

    return ExperimentConfig(
        label=label, problem=pname, params=_builder_params(pname, params), solver=sname, P=P, xi=xi,
        center=center, ace=ace, grid=grid, X0=X0, t_max=t_max, dt=dt, output=output, source=source,
    )


def load_config(path, overrides=()) -> ExperimentConfig:
    """Read, override and validate one experiment file.

    ``overrides`` are ``key.path=value`` strings applied before validation.
    """
    path = Path(path)
    text = path.read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(str(path), f"parse error: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None) from None
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError(str(path), "top level must be a mapping", 1)
    for item in overrides:
        key, value = parse_override(item)
        _set_path(data, key, value)
    return build_config(data, _line_index(text), source=str(path))


def with_output(cfg: ExperimentConfig, output) -> ExperimentConfig:
    return replace(cfg, output=str(output))
