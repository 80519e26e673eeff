"""Fixed-step classical Runge-Kutta stepping for lifted and nonlinear systems."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DENSE_LIMIT, CarlemanOperator


class BlowUpError(FloatingPointError):
    """Raised when a step produces non-finite values."""


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    scheme: str = "rk4"

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be finite and positive, got {self.dt}")
        if self.scheme != "rk4":
            raise ValueError(f"unsupported scheme {self.scheme!r}")


def n_steps(t_max: float, dt: float) -> int:
    """Number of steps with ``k dt <= t_max``, tolerant of rounding in ``t_max / dt``."""
    return int(math.floor(t_max / dt + 1e-9))


def rk4_step(f, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_linear_step(op: CarlemanOperator, u: np.ndarray, dt: float) -> np.ndarray:
    """One classical RK4 step of ``du/dt = A u + B``."""
    u = np.asarray(u, dtype=float)
    if u.shape != (op.dim,):
        raise ValueError(f"lifted state has shape {u.shape}, operator expects ({op.dim},)")
    out = rk4_step(op.rhs, u, dt)
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite lifted state")
    return out


@dataclass(eq=False)
class LinearStepper:
    """Repeated RK4 steps of one lifted system.

    Small systems use the exact RK4 amplification matrix
    ``R = I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24`` so a step costs one
    dense mat-vec; larger ones fall back to the four-stage sparse update.
    """

    op: CarlemanOperator
    dt: float
    R: np.ndarray | None = field(init=False, default=None, repr=False)
    S: np.ndarray | None = field(init=False, default=None, repr=False)

    def __post_init__(self):
        if self.op.dim <= DENSE_LIMIT:
            h = self.dt
            hA = h * self.op.dense_A
            eye = np.eye(self.op.dim)
            # Horner form of the degree-4 Taylor polynomial
            poly = eye + hA / 4.0
            poly = eye + hA @ poly / 3.0
            poly = eye + hA @ poly / 2.0
            self.R = eye + hA @ poly
            # S = h (I + hA/2 + (hA)^2/6 + (hA)^3/24) B
            q = eye + hA / 4.0
            q = eye + hA @ q / 3.0
            q = eye + hA @ q / 2.0
            self.S = h * (q @ self.op.B)

    def step(self, u: np.ndarray) -> np.ndarray:
        if self.R is not None:
            return self.R @ u + self.S
        return rk4_step(self.op.rhs, u, self.dt)


@dataclass
class Trajectory:
    """Global states on a uniform time grid plus per-step chart metadata."""

    times: np.ndarray
    states: np.ndarray
    xi: np.ndarray | None = None
    chart_id: np.ndarray | None = None
    chart_events: list = field(default_factory=list)
    unstable_at: int | None = None
    blew_up: bool = False

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def transitions(self) -> int:
        return len(self.chart_events)

    def __len__(self) -> int:
        return len(self.times)


def rk4_nonlinear_states(rhs, X0, steps: int, dt: float) -> tuple[np.ndarray, int]:
    """RK4 states for ``steps`` steps; ``X0`` may carry a leading batch axis.

    Returns the state array and the index of the last finite step.
    """
    X = np.array(X0, dtype=float)
    states = np.empty((steps + 1,) + X.shape)
    states[0] = X
    for i in range(1, steps + 1):
        X = rk4_step(rhs, X, dt)
        if not np.isfinite(X).all():
            return states[:i], i - 1
        states[i] = X
    return states, steps


def rk4_nonlinear_solve(problem, X0, t_max: float, dt: float = 1e-3) -> Trajectory:
    """Direct RK4 integration of the problem's nonlinear right-hand side."""
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    cfg = IntegratorConfig(dt)
    X0 = np.asarray(X0, dtype=float).reshape(problem.n)
    steps = n_steps(t_max, cfg.dt)
    states, last = rk4_nonlinear_states(problem.rhs, X0, steps, cfg.dt)
    return Trajectory(times=np.arange(last + 1) * cfg.dt, states=states, blew_up=last < steps)


def rk4_nonlinear_batch(problem, X0s, t_max: float, dt: float = 1e-3) -> np.ndarray:
    """Reference states for many initial conditions at once, shape ``(steps + 1, m, n)``."""
    X0s = np.asarray(X0s, dtype=float).reshape(-1, problem.n)
    states, _ = rk4_nonlinear_states(problem.rhs, X0s, n_steps(t_max, dt), dt)
    return states
