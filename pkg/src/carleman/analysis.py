"""Error metrics, convergence detection and 1D analytic oracles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .integrate import Trajectory

# below this reference norm the error is reported in absolute terms
NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class ErrorSeries:
    """Per-step relative errors between a reference and an embedded run.

    ``eps_num`` has shape ``(steps, n)``; ``eps_max`` is its max over
    variables and ``eps_running`` the cumulative max of ``eps_max``.
    """

    times: np.ndarray
    eps_num: np.ndarray

    @property
    def eps_max(self) -> np.ndarray:
        return self.eps_num.max(axis=1)

    @property
    def eps_running(self) -> np.ndarray:
        return np.maximum.accumulate(self.eps_max)

    @property
    def max_error(self) -> float:
        return float(self.eps_max.max())

    @property
    def final_error(self) -> float:
        return float(self.eps_max[-1])

    def window(self, t_end: float) -> "ErrorSeries":
        """Restrict to ``t <= t_end``."""
        keep = self.times <= t_end + 1e-12
        return ErrorSeries(self.times[keep], self.eps_num[keep])


def relative_error(cl: Trajectory, ce: Trajectory, *, truncate: bool = False) -> ErrorSeries:
    """``|X_cl - X_ce| / |X_cl|`` per step and variable.

    The grids must coincide. With ``truncate=True`` a shorter embedded run
    (e.g. an SCE run halted at instability) is compared over its prefix.
    """
    a, b = np.asarray(cl.states, float), np.asarray(ce.states, float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"state arrays {a.shape} and {b.shape} are not comparable")
    k = min(len(a), len(b))
    if not truncate and len(a) != len(b):
        raise ValueError(f"trajectories have {len(a)} and {len(b)} steps")
    if not np.allclose(cl.times[:k], ce.times[:k], rtol=0, atol=1e-12):
        raise ValueError("time grids differ")
    a, b = a[:k], b[:k]
    norm = np.linalg.norm(a, axis=1)
    norm = np.where(norm < NORM_FLOOR, 1.0, norm)
    return ErrorSeries(np.asarray(cl.times[:k], float), np.abs(a - b) / norm[:, None])


def fixed_point_convergence(traj: Trajectory, fixed_points, tol: float, rhs=None) -> int | None:
    """Index of the fixed point the run settled on, or ``None``.

    Settled means the final state is within ``tol`` of the point and the final
    speed is below ``tol``. The speed comes from ``rhs`` when given, otherwise
    from the last finite difference of the states.
    """
    states = np.asarray(traj.states, float)
    if len(states) == 0 or not np.isfinite(states[-1]).all():
        return None
    final = states[-1]
    if rhs is not None:
        speed = float(np.linalg.norm(rhs(final)))
    elif len(states) > 1:
        dt = float(traj.times[-1] - traj.times[-2])
        speed = float(np.linalg.norm(states[-1] - states[-2])) / dt
    else:
        speed = 0.0
    if speed >= tol:
        return None
    pts = np.asarray(fixed_points, float).reshape(len(fixed_points), -1)
    dist = np.linalg.norm(pts - final, axis=1)
    best = int(np.argmin(dist))
    return best if dist[best] < tol else None


def partial_fraction_residues(roots, leading: float) -> np.ndarray:
    """Residues ``tau_j = 1 / V'(x_j)`` of ``1/V`` for ``V = leading * prod (x - x_j)``."""
    roots = np.asarray(roots, float).reshape(-1)
    if leading == 0:
        raise ValueError("leading coefficient must be nonzero")
    diffs = roots[:, None] - roots[None, :]
    np.fill_diagonal(diffs, 1.0)
    if np.any(np.abs(diffs) < 1e-14) or len(np.unique(roots)) != len(roots):
        raise ValueError("roots must be simple and distinct")
    return 1.0 / (leading * diffs.prod(axis=1))


def _interval(fixed_points: np.ndarray, x: float) -> int:
    return int(np.searchsorted(fixed_points, x))


def time_of_flight_1d(fixed_points, residues, x0: float, xt: float) -> float:
    """Elapsed time from ``x0`` to ``xt`` for ``dx/dt = V(x)`` with simple zeros.

    ``t = sum_j tau_j log|(xt - x_j) / (x0 - x_j)|``. Both points must lie in
    the same open interval between consecutive fixed points.
    """
    order = np.argsort(np.asarray(fixed_points, float))
    xs = np.asarray(fixed_points, float)[order]
    taus = np.asarray(residues, float)[order]
    if np.any(xs == x0) or np.any(xs == xt):
        raise ValueError("endpoints must not coincide with a fixed point")
    if _interval(xs, x0) != _interval(xs, xt):
        raise ValueError(f"x0={x0} and xt={xt} are separated by a fixed point")
    return float(np.sum(taus * np.log(np.abs((xt - xs) / (x0 - xs)))))


def arrival_time(traj: Trajectory, level: float, component: int = 0, rhs=None) -> float | None:
    """First time a component reaches ``level``.

    The crossing step is located on the grid and refined by linear
    interpolation, or by cubic Hermite interpolation when the vector field
    ``rhs`` is supplied (fourth-order accurate, which matches RK4).
    """
    X = np.asarray(traj.states, float)
    x = X[:, component] - level
    t = np.asarray(traj.times, float)
    if x[0] == 0:
        return float(t[0])
    hit = np.nonzero(np.sign(x[1:]) != np.sign(x[0]))[0]
    if hit.size == 0:
        return None
    i = int(hit[0])
    h = t[i + 1] - t[i]
    if rhs is None:
        return float(t[i] + h * x[i] / (x[i] - x[i + 1]))
    v0 = float(np.asarray(rhs(X[i]))[component]) * h
    v1 = float(np.asarray(rhs(X[i + 1]))[component]) * h
    y0, y1 = x[i], x[i + 1]

    def hermite(s):
        s2, s3 = s * s, s * s * s
        return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * v0
                + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * v1)

    if y1 == 0:
        return float(t[i + 1])
    return float(t[i] + h * brentq(hermite, 0.0, 1.0, xtol=1e-15))
