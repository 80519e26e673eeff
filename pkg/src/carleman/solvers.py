"""Single-chart and piecewise Carleman solvers.

All solvers advance the lifted state with fixed-step RK4 and report global
states ``X = Xi + x`` where ``Xi`` is the active chart center and ``x`` the
local state. Chart exits are checked once per step.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .core import CarlemanOperator, assemble_operator, encode
from .integrate import LinearStepper, Trajectory, n_steps
from .problems import ProblemSpec

__all__ = [
    "AceConfig", "Chart", "GridSpec", "Trajectory",
    "sce_run", "pce_run", "ace_run", "gce_run", "locate_tile",
]


@dataclass(frozen=True)
class AceConfig:
    eps_tol: float = 1e-10
    dxi: float = 0.02
    xi_min: float = 0.02
    xi_max: float = 1.0
    xi_init: float = 1.0

    def __post_init__(self):
        if not 0 < self.xi_min <= self.xi_init <= self.xi_max <= 1:
            raise ValueError(
                "need 0 < xi_min <= xi_init <= xi_max <= 1, got "
                f"{self.xi_min}, {self.xi_init}, {self.xi_max}"
            )
        if not self.dxi > 0:
            raise ValueError("dxi must be positive")
        if not self.eps_tol > 0:
            raise ValueError("eps_tol must be positive")


@dataclass(frozen=True)
class GridSpec:
    """Static tiling: tile ``L`` is centered at ``center + 2 * half_widths * L``."""

    center: np.ndarray
    half_widths: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        w = np.asarray(self.half_widths, dtype=float).reshape(-1)
        if w.size == 1 and c.size > 1:
            w = np.full(c.size, w[0])
        if c.shape != w.shape:
            raise ValueError("grid center and half widths differ in length")
        if np.any(w <= 0):
            raise ValueError("tile half widths must be positive")
        if np.sqrt(np.sum(w**2)) > 1 + 1e-12:
            raise ValueError(f"tile half widths have norm {np.sqrt(np.sum(w**2)):.6g} > 1")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_widths", w)

    @classmethod
    def uniform(cls, center, xi_norm: float) -> "GridSpec":
        """Equal half widths ``xi_norm / sqrt(n)`` on every axis."""
        c = np.asarray(center, dtype=float).reshape(-1)
        return cls(c, np.full(c.size, xi_norm / math.sqrt(c.size)))

    def tile_center(self, L) -> np.ndarray:
        return self.center + 2.0 * self.half_widths * np.asarray(L)


def locate_tile(grid: GridSpec, X) -> tuple[np.ndarray, np.ndarray]:
    """Index of the tile containing ``X`` and the local offset from its center."""
    X = np.asarray(X, dtype=float)
    L = np.floor((X - grid.center) / (2.0 * grid.half_widths) + 0.5).astype(int)
    return L, X - grid.tile_center(L)


@dataclass(eq=False)
class Chart:
    """One linearization region with its lifted state."""

    center: np.ndarray
    xi: object
    operator: CarlemanOperator
    stepper: LinearStepper
    u: np.ndarray
    tile_index: np.ndarray | None = None

    @property
    def x(self) -> np.ndarray:
        return self.u[: self.operator.n]

    def step(self) -> tuple[np.ndarray, bool]:
        """Advance one RK4 step; returns the local state and the instability flag."""
        self.u = u = self.stepper.step(self.u)
        peak = float(np.abs(u).max())
        if not peak < math.inf:
            raise FloatingPointError("non-finite lifted state")
        # same test as instability_flag, reusing the peak
        return u[: self.operator.n], peak > 1.0


class _Atlas:
    """Builds charts and caches their operators by center."""

    def __init__(self, problem: ProblemSpec, P: int, dt: float, cache_size: int = 512):
        if P < problem.p:
            raise ValueError(f"truncation order P={P} below problem order p={problem.p}")
        self.problem, self.P, self.dt = problem, P, dt
        self._cache: OrderedDict = OrderedDict()
        self._cache_size = cache_size
        self.builds = 0

    def stepper(self, center: np.ndarray) -> LinearStepper:
        key = center.tobytes()
        st = self._cache.get(key)
        if st is None:
            op = assemble_operator(self.problem.coeffs_at(center), self.P)
            st = LinearStepper(op, self.dt)
            self.builds += 1
            self._cache[key] = st
            if len(self._cache) > self._cache_size:
                self._cache.popitem(last=False)
        else:
            self._cache.move_to_end(key)
        return st

    def chart(self, center, x0=None, xi=None, tile_index=None) -> Chart:
        center = np.array(center, dtype=float)
        st = self.stepper(center)
        x0 = np.zeros(self.problem.n) if x0 is None else np.asarray(x0, dtype=float)
        return Chart(center, xi, st.op, st, encode(x0, self.P), tile_index)


def _check_run(problem, X0, t_max, dt):
    X0 = np.asarray(X0, dtype=float).reshape(problem.n)
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    if not dt > 0:
        raise ValueError("dt must be positive")
    return X0, n_steps(t_max, dt)


def _finish(states, xis, ids, events, unstable_at, dt, blew_up=False) -> Trajectory:
    k = len(states)
    return Trajectory(
        times=np.arange(k) * dt,
        states=np.array(states),
        xi=np.array(xis, dtype=float),
        chart_id=np.array(ids, dtype=int),
        chart_events=events,
        unstable_at=unstable_at,
        blew_up=blew_up,
    )


def _piecewise(problem, X0, xi, P, t_max, dt, center=None, stop_on_unstable=False):
    X0, steps = _check_run(problem, X0, t_max, dt)
    atlas = _Atlas(problem, P, dt)
    Xi = X0.copy() if center is None else np.asarray(center, dtype=float).reshape(problem.n)
    chart = atlas.chart(Xi, X0 - Xi, xi)
    xi_val = math.inf if xi is None else xi
    states, xis, ids, events = [Xi + chart.x], [xi_val], [0], []
    unstable_at, blew_up = None, False
    for i in range(1, steps + 1):
        try:
            x, unstable = chart.step()
        except FloatingPointError:
            blew_up = True
            break
        X = chart.center + x
        states.append(X)
        xis.append(xi_val)
        ids.append(len(events))
        if unstable and unstable_at is None:
            unstable_at = i
            if stop_on_unstable:
                break
        if xi is not None and math.sqrt(float(x @ x)) >= xi:
            chart = atlas.chart(X, None, xi)
            events.append((i, chart.center.copy(), xi))
    return _finish(states, xis, ids, events, unstable_at, dt, blew_up)


def sce_run(problem: ProblemSpec, X0, P: int, t_max: float, dt: float = 1e-3, center=None) -> Trajectory:
    """Standard embedding: one chart, centered at ``X0`` unless ``center`` is given.

    Stops at the first step where the lifted state leaves the unit box.
    """
    return _piecewise(problem, X0, None, P, t_max, dt, center=center, stop_on_unstable=True)


def pce_run(problem: ProblemSpec, X0, xi: float, P: int, t_max: float, dt: float = 1e-3) -> Trajectory:
    """Piecewise embedding with a fixed chart radius.

    A new chart is centered on the current state whenever the local state
    reaches ``|x| >= xi``.
    """
    if not 0 < xi <= 1:
        raise ValueError(f"chart radius must satisfy 0 < xi <= 1, got {xi}")
    return _piecewise(problem, X0, xi, P, t_max, dt)


class _AceRun:
    def __init__(self, problem, cfg: AceConfig, P, dt, steps):
        self.atlas = _Atlas(problem, P, dt)
        self.cfg, self.steps = cfg, steps
        self.unstable_at = None
        self.attempts = 0

    def _flag(self, i):
        if self.unstable_at is None:
            self.unstable_at = i

    def segment(self, i0: int, xi: float, Xi: np.ndarray, grow: bool):
        """Adaptation step starting at step index ``i0`` from the chart center ``Xi``.

        Returns the committed local states, their radii, the radius to keep
        and the next chart center.
        """
        cfg = self.cfg
        eps_tol = cfg.eps_tol
        while True:
            self.attempts += 1
            ref = self.atlas.chart(Xi)
            xs, radii = [], []
            i = i0
            reduced = xi - cfg.dxi
            if reduced >= cfg.xi_min - 1e-12:
                # inside the reduced radius both charts share the same trajectory
                x = ref.x
                while _norm(x) < reduced and i < self.steps:
                    x, _ = ref.step()
                    i += 1
                    xs.append(x.copy())
                    radii.append(xi)
                failed = False
                if _norm(x) < xi and i < self.steps:
                    cmp = self.atlas.chart(Xi + x)
                    while i < self.steps:
                        x, unstable = ref.step()
                        xc, _ = cmp.step()
                        i += 1
                        if _norm((Xi + x) - (cmp.center + xc)) >= eps_tol or unstable:
                            failed = True
                            break
                        xs.append(x.copy())
                        radii.append(xi)
                        if _norm(x) >= xi:
                            break
                        if _norm(xc) >= reduced:
                            cmp = self.atlas.chart(cmp.center + xc)
                if failed:
                    xi, grow = reduced, False
                    continue
            else:
                x = ref.x
                while _norm(x) < xi and i < self.steps:
                    x, unstable = ref.step()
                    i += 1
                    xs.append(x.copy())
                    radii.append(xi)
                    if unstable:
                        self._flag(i)
            break

        if grow and i < self.steps:
            larger = xi + cfg.dxi
            while larger <= cfg.xi_max + 1e-12 and i < self.steps:
                cmp = self.atlas.chart(Xi + x)
                failed = False
                while i < self.steps:
                    x_new, unstable = ref.step()
                    xc, _ = cmp.step()
                    if _norm((Xi + x_new) - (cmp.center + xc)) >= eps_tol or unstable:
                        failed = True
                        break
                    i += 1
                    x = x_new
                    xs.append(x.copy())
                    radii.append(larger)
                    if _norm(x) >= larger:
                        break
                    if _norm(xc) >= xi:
                        cmp = self.atlas.chart(cmp.center + xc)
                if failed:
                    break
                xi = larger
                larger = xi + cfg.dxi
        last = xs[-1] if xs else np.zeros_like(Xi)
        return xs, radii, xi, Xi + last


def _norm(v) -> float:
    return math.sqrt(float(v @ v))


def ace_run(problem: ProblemSpec, X0, config: AceConfig, P: int, t_max: float, dt: float = 1e-3) -> Trajectory:
    """Piecewise embedding with on-the-fly chart radius adaptation.

    Each segment first compares the reference chart against a chart of radius
    ``xi - dxi`` restarted at the point where the trajectory leaves the
    smaller disk; a mismatch above ``eps_tol`` shrinks the radius and redoes
    the segment. A passing segment then tries successively larger radii
    until a comparison fails or ``xi_max`` is reached.
    """
    X0, steps = _check_run(problem, X0, t_max, dt)
    run = _AceRun(problem, config, P, dt, steps)
    Xi = X0.copy()
    xi = config.xi_init
    states, xis, ids, events = [X0.copy()], [xi], [0], []
    i = 0
    blew_up = False
    while i < steps:
        try:
            xs, radii, xi, nxt = run.segment(i, xi, Xi, grow=True)
        except FloatingPointError:
            blew_up = True
            break
        if not xs:
            # the adaptation could not advance even one step; fall back to a plain step
            chart = run.atlas.chart(Xi)
            x, unstable = chart.step()
            xs, radii, nxt = [x.copy()], [xi], Xi + x
            if unstable:
                run._flag(i + 1)
        for x, r in zip(xs, radii):
            states.append(Xi + x)
            xis.append(r)
            ids.append(len(events))
        i += len(xs)
        Xi = nxt
        if i < steps:
            events.append((i, Xi.copy(), xi))
    traj = _finish(states, xis, ids, events, run.unstable_at, dt, blew_up)
    traj.attempts = run.attempts
    return traj


def gce_run(problem: ProblemSpec, X0, grid: GridSpec, P: int, t_max: float, dt: float = 1e-3) -> Trajectory:
    """Static grid embedding: tiles move by one index per violated axis."""
    X0, steps = _check_run(problem, X0, t_max, dt)
    if grid.center.size != problem.n:
        raise ValueError("grid dimension does not match the problem")
    atlas = _Atlas(problem, P, dt, cache_size=4096)
    w = grid.half_widths
    L, x0 = locate_tile(grid, X0)
    chart = atlas.chart(grid.tile_center(L), x0, w, L)
    states, xis, ids, events = [chart.center + chart.x], [_norm(w)], [0], []
    unstable_at, blew_up = None, False
    for i in range(1, steps + 1):
        try:
            x, unstable = chart.step()
        except FloatingPointError:
            blew_up = True
            break
        X = chart.center + x
        states.append(X)
        xis.append(_norm(w))
        ids.append(len(events))
        if unstable and unstable_at is None:
            unstable_at = i
        if np.any(np.abs(x) > w):
            L = chart.tile_index.copy()
            local = x.copy()
            for _ in range(64):
                out = np.abs(local) > w
                if not out.any():
                    break
                L[out] += np.sign(local[out]).astype(int)
                local = X - grid.tile_center(L)
            chart = atlas.chart(grid.tile_center(L), local, w, L)
            events.append((i, chart.center.copy(), w.copy()))
    return _finish(states, xis, ids, events, unstable_at, dt, blew_up)
