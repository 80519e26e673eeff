"""Built-in polynomial test systems.

Each builder returns a :class:`ProblemSpec` carrying the normalized
right-hand side and a generator for the Taylor data re-expanded about an
arbitrary chart center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import PolyVectorField, field_from_terms, shift_field


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    n: int
    p: int
    params: dict
    rhs: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    coeffs_at: Callable[[np.ndarray], PolyVectorField] = field(repr=False)
    fixed_points: tuple = ()
    default_initial: tuple = ()
    default_t_max: float = 10.0


def _vec(X, n):
    X = np.asarray(X, dtype=float).reshape(n)
    return X


def _split(X):
    """Components along the last axis, so right-hand sides broadcast over batches."""
    X = np.asarray(X, dtype=float)
    return tuple(X[..., i] for i in range(X.shape[-1]))


def cubic_1d(X_c1: float = -0.6, X_c2: float = -0.1, X_c3: float = 0.4) -> ProblemSpec:
    """``dX/dt = (X_c1 - X)(X_c2 - X)(X_c3 - X)``."""
    roots = (float(X_c1), float(X_c2), float(X_c3))

    def rhs(X):
        X = np.asarray(X, dtype=float)
        return (roots[0] - X) * (roots[1] - X) * (roots[2] - X)

    def coeffs_at(Xi):
        a1, a2, a3 = (r - _vec(Xi, 1)[0] for r in roots)
        return PolyVectorField((
            np.array([a1 * a2 * a3]),
            np.array([[-(a1 * a2 + a1 * a3 + a2 * a3)]]),
            np.array([[a1 + a2 + a3]]),
            np.array([[-1.0]]),
        ))

    return ProblemSpec(
        name="cubic1d", n=1, p=3,
        params={"X_c1": roots[0], "X_c2": roots[1], "X_c3": roots[2]},
        rhs=rhs, coeffs_at=coeffs_at,
        fixed_points=tuple(np.array([r]) for r in roots),
        default_initial=(0.2,), default_t_max=20.0,
    )


# parameter sets of the four one-dimensional cases
CUBIC_CASES = {
    "a": (-0.6, -0.1, 0.4),
    "b": (-2.2, 0.2, 1.6),
    "c": (0.8, 0.9, 1.6),
    "d": (0.1, 0.9, 1.6),
}


def van_der_pol(mu: float = 1.0) -> ProblemSpec:
    if mu <= 0:
        raise ValueError("mu must be positive")

    def rhs(X):
        x, y = _split(X)
        return np.stack([y, mu * (1 - x * x) * y - x], axis=-1)

    def coeffs_at(Xi):
        sx, sy = _vec(Xi, 2)
        return field_from_terms(2, 3, [
            (0, (), sy),
            (1, (), -sx + mu * sy - mu * sx**2 * sy),
            (0, (1,), 1.0),
            (1, (0,), -(1 + 2 * mu * sx * sy)),
            (1, (1,), mu * (1 - sx**2)),
            (1, (0, 0), -mu * sy),
            (1, (0, 1), -2 * sx * mu),
            (1, (0, 0, 1), -mu),
        ])

    return ProblemSpec(
        name="vdp", n=2, p=3, params={"mu": mu}, rhs=rhs, coeffs_at=coeffs_at,
        fixed_points=(np.zeros(2),), default_initial=(0.2, 0.0), default_t_max=7.0,
    )


def lotka_volterra_2d(alpha: float = 1.0, gamma: float = 1.0) -> ProblemSpec:
    """Predator-prey model with populations normalized to the coexistence point."""
    if alpha <= 0 or gamma <= 0:
        raise ValueError("alpha and gamma must be positive")

    def rhs(X):
        x, y = _split(X)
        return np.stack([alpha * x - alpha * x * y, -gamma * y + gamma * x * y], axis=-1)

    def coeffs_at(Xi):
        sx, sy = _vec(Xi, 2)
        return field_from_terms(2, 2, [
            (0, (), alpha * sx - alpha * sx * sy),
            (1, (), -gamma * sy + gamma * sx * sy),
            (0, (0,), alpha - alpha * sy),
            (1, (0,), gamma * sy),
            (0, (1,), -alpha * sx),
            (1, (1,), -gamma + gamma * sx),
            (0, (0, 1), -alpha),
            (1, (0, 1), gamma),
        ])

    return ProblemSpec(
        name="lv2d", n=2, p=2, params={"alpha": alpha, "gamma": gamma},
        rhs=rhs, coeffs_at=coeffs_at,
        fixed_points=(np.zeros(2), np.ones(2)),
        default_initial=(0.5, 0.5), default_t_max=15.0,
    )


def lotka_volterra_3d(alpha: float = 1.0, beta: float = 1.0, eps_sp: float = 1.0,
                      eta_sp: float = 1.0) -> ProblemSpec:
    """Superpredator-predator-prey model."""
    if min(alpha, beta, eps_sp, eta_sp) <= 0:
        raise ValueError("parameters must be positive")
    a, b, e, h = alpha, beta, eps_sp, eta_sp

    def rhs(X):
        x, y, z = _split(X)
        return np.stack([a * x - b * x * y, e * x * y - e * y * z, -h * z + h * y], axis=-1)

    def coeffs_at(Xi):
        sx, sy, sz = _vec(Xi, 3)
        return field_from_terms(3, 2, [
            (0, (), a * sx - b * sx * sy),
            (0, (0,), a - b * sy),
            (0, (1,), -b * sx),
            (0, (0, 1), -b),
            (1, (), e * sx * sy - e * sy * sz),
            (1, (0,), e * sy),
            (1, (1,), e * sx - e * sz),
            (1, (2,), -e * sy),
            (1, (0, 1), e),
            (1, (1, 2), -e),
            (2, (), -h * sz + h * sy),
            (2, (1,), h),
            (2, (2,), -h),
        ])

    fps = [np.zeros(3)]
    # coexistence point: y = z = alpha/beta, x = z
    fps.append(np.full(3, a / b))
    return ProblemSpec(
        name="lv3d", n=3, p=2, params={"alpha": a, "beta": b, "eps_sp": e, "eta_sp": h},
        rhs=rhs, coeffs_at=coeffs_at, fixed_points=tuple(fps),
        default_initial=(0.5, 0.5, 0.0), default_t_max=20.0,
    )


def rossler(sigma: float = 0.2, beta: float = 0.2, rho: float = 5.7,
            eta: float = 20.0 / 5.7) -> ProblemSpec:
    """Rössler system in the scaled form ``dZ/dt = beta/(eta rho) - rho Z + eta rho X Z``.

    The defaults are the classic ``a = b = 0.2, c = 5.7`` regime with all
    variables divided by 20.
    """
    if eta == 0 or rho == 0:
        raise ValueError("eta and rho must be nonzero")
    s, b, r, h = sigma, beta, rho, eta
    c0 = b / (h * r)

    def rhs(X):
        x, y, z = _split(X)
        return np.stack([-y - z, x + s * y, c0 - r * z + h * r * x * z], axis=-1)

    def coeffs_at(Xi):
        sx, sy, sz = _vec(Xi, 3)
        return field_from_terms(3, 2, [
            (0, (), -(sy + sz)),
            (0, (1,), -1.0),
            (0, (2,), -1.0),
            (1, (), sx + s * sy),
            (1, (0,), 1.0),
            (1, (1,), s),
            (2, (), c0 - r * sz + h * r * sx * sz),
            (2, (0,), h * r * sz),
            (2, (2,), h * r * sx - r),
            (2, (0, 2), h * r),
        ])

    fps = []
    # with x = -sigma y and z = -y the z equation is eta rho sigma y^2 + rho y + c0 = 0
    qa, qb, qc = h * r * s, r, c0
    disc = qb * qb - 4 * qa * qc
    if disc >= 0 and qa != 0:
        for y in ((-qb + math.sqrt(disc)) / (2 * qa), (-qb - math.sqrt(disc)) / (2 * qa)):
            fps.append(np.array([-s * y, y, -y]))
    return ProblemSpec(
        name="rossler", n=3, p=2, params={"sigma": s, "beta": b, "rho": r, "eta": h},
        rhs=rhs, coeffs_at=coeffs_at, fixed_points=tuple(fps),
        default_initial=(0.0, 0.4, 0.0), default_t_max=40.0,
    )


def lorenz(sigma: float = 10.0, rho: float = 28.0, beta: float = 8.0 / 3.0,
           c_x: float = 2.0, c_z: float = 4.0) -> ProblemSpec:
    """Lorenz system with ``X, Y`` scaled by ``c_x sqrt(beta (rho - 1))`` and ``Z`` by ``c_z (rho - 1)``."""
    if rho <= 1:
        raise ValueError("rho must exceed 1 for the normalization to be defined")
    if beta <= 0:
        raise ValueError("beta must be positive")
    eta_x = c_x * math.sqrt(beta * (rho - 1))
    eta_z = c_z * (rho - 1)
    eta = eta_x**2 / eta_z
    s, r, b = sigma, rho, beta

    def rhs(X):
        x, y, z = _split(X)
        return np.stack([s * (y - x), r * x - eta_z * x * z - y, eta * x * y - b * z], axis=-1)

    def coeffs_at(Xi):
        sx, sy, sz = _vec(Xi, 3)
        return field_from_terms(3, 2, [
            (0, (), s * (sy - sx)),
            (0, (0,), -s),
            (0, (1,), s),
            (1, (), r * sx - sy - eta_z * sx * sz),
            (1, (0,), r - eta_z * sz),
            (1, (1,), -1.0),
            (1, (2,), -eta_z * sx),
            (1, (0, 2), -eta_z),
            (2, (), eta * sx * sy - b * sz),
            (2, (0,), eta * sy),
            (2, (1,), eta * sx),
            (2, (2,), -b),
            (2, (0, 1), eta),
        ])

    w = math.sqrt(b * (r - 1))
    fps = (np.zeros(3), np.array([w / eta_x, w / eta_x, (r - 1) / eta_z]),
           np.array([-w / eta_x, -w / eta_x, (r - 1) / eta_z]))
    return ProblemSpec(
        name="lorenz", n=3, p=2,
        params={"sigma": s, "rho": r, "beta": b, "c_x": c_x, "c_z": c_z,
                "eta_x": eta_x, "eta_z": eta_z, "eta": eta},
        rhs=rhs, coeffs_at=coeffs_at, fixed_points=fps,
        default_initial=(0.2, 0.2, 0.2), default_t_max=20.0,
    )


def chen(sigma: float = 40.0, rho: float = 28.0, beta: float = 6.0) -> ProblemSpec:
    """Chen system with ``X, Y`` scaled by ``sqrt(beta (2 rho - sigma))`` and ``Z`` by ``2 rho - sigma``."""
    g = 2 * rho - sigma
    if g <= 0:
        raise ValueError("need 2*rho > sigma for the normalization to be defined")
    if beta <= 0:
        raise ValueError("beta must be positive")
    s, r, b = sigma, rho, beta

    def rhs(X):
        x, y, z = _split(X)
        return np.stack([s * (y - x), (r - s) * x - g * x * z + r * y, b * x * y - b * z], axis=-1)

    def coeffs_at(Xi):
        sx, sy, sz = _vec(Xi, 3)
        return field_from_terms(3, 2, [
            (0, (), s * (sy - sx)),
            (0, (0,), -s),
            (0, (1,), s),
            (1, (), (r - s) * sx + r * sy - g * sx * sz),
            (1, (0,), (r - s) - g * sz),
            (1, (1,), r),
            (1, (2,), -g * sx),
            (1, (0, 2), -g),
            (2, (), -b * sz + b * sx * sy),
            (2, (0,), b * sy),
            (2, (1,), b * sx),
            (2, (2,), -b),
            (2, (0, 1), b),
        ])

    # the scaling puts the nontrivial equilibria at (+-1, +-1, 1)
    fps = (np.zeros(3), np.array([1.0, 1.0, 1.0]), np.array([-1.0, -1.0, 1.0]))
    return ProblemSpec(
        name="chen", n=3, p=2,
        params={"sigma": s, "rho": r, "beta": b, "xy_scale": math.sqrt(b * g), "z_scale": g},
        rhs=rhs, coeffs_at=coeffs_at, fixed_points=fps,
        default_initial=(0.1, 0.0, 0.0), default_t_max=10.0,
    )


def duffing() -> ProblemSpec:
    """Unforced, undamped double-well oscillator ``x'' = x - x^3``."""

    def rhs(X):
        x, y = _split(X)
        return np.stack([y, x - x**3], axis=-1)

    def coeffs_at(Xi):
        sx, sy = _vec(Xi, 2)
        return field_from_terms(2, 3, [
            (0, (), sy),
            (0, (1,), 1.0),
            (1, (), sx - sx**3),
            (1, (0,), 1 - 3 * sx**2),
            (1, (0, 0), -3 * sx),
            (1, (0, 0, 0), -1.0),
        ])

    return ProblemSpec(
        name="duffing", n=2, p=3, params={}, rhs=rhs, coeffs_at=coeffs_at,
        fixed_points=(np.array([-1.0, 0.0]), np.zeros(2), np.array([1.0, 0.0])),
        default_initial=(0.5, 0.5), default_t_max=10.0,
    )


def from_field(f: PolyVectorField, name: str = "custom", initial=None, t_max: float = 10.0,
               fixed_points=()) -> ProblemSpec:
    """Wrap an explicit field given about the origin; shifts are re-expanded generically."""
    initial = tuple(np.zeros(f.n)) if initial is None else tuple(initial)
    return ProblemSpec(
        name=name, n=f.n, p=f.p, params={}, rhs=f, coeffs_at=lambda Xi: shift_field(f, Xi),
        fixed_points=tuple(np.asarray(fp, dtype=float) for fp in fixed_points),
        default_initial=initial, default_t_max=t_max,
    )


PROBLEMS = {
    "cubic1d": cubic_1d,
    "vdp": van_der_pol,
    "lv2d": lotka_volterra_2d,
    "lv3d": lotka_volterra_3d,
    "rossler": rossler,
    "lorenz": lorenz,
    "chen": chen,
    "duffing": duffing,
}


def get_problem(name: str, **params) -> ProblemSpec:
    try:
        builder = PROBLEMS[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
    return builder(**params)
