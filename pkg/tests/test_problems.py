import itertools
import math
import zlib
from collections import defaultdict

import numpy as np
import pytest
import sympy

from carleman.core import random_field, taylor_shift_check
from carleman.problems import CUBIC_CASES, PROBLEMS, from_field, get_problem


def _sym_cubic(v, X_c1=-0.6, X_c2=-0.1, X_c3=0.4):
    (X,) = v
    return [(X_c1 - X) * (X_c2 - X) * (X_c3 - X)]


def _sym_vdp(v, mu=1.0):
    X, Y = v
    return [Y, mu * (1 - X**2) * Y - X]


def _sym_lv2d(v, alpha=1.0, gamma=1.0):
    X, Y = v
    return [alpha * X * (1 - Y), gamma * Y * (X - 1)]


def _sym_lv3d(v, alpha=1.0, beta=1.0, eps_sp=1.0, eta_sp=1.0):
    X, Y, Z = v
    return [alpha * X - beta * X * Y, eps_sp * Y * (X - Z), eta_sp * (Y - Z)]


def _unscale(exprs, v, scales):
    """Rewrite ``dV/dt = g(V)`` for ``V = scale * v``."""
    sub = {s: k * s for s, k in zip(v, scales)}
    return [sympy.expand(e.subs(sub, simultaneous=True) / k) for e, k in zip(exprs, scales)]


def _sym_rossler(v, sigma=0.2, beta=0.2, rho=5.7, eta=20 / 5.7):
    X, Y, Z = v
    raw = [-Y - Z, X + sigma * Y, beta + Z * (X - rho)]
    k = eta * rho
    return _unscale(raw, v, [k, k, k])


def _sym_lorenz(v, sigma=10.0, rho=28.0, beta=8 / 3, c_x=2.0, c_z=4.0):
    X, Y, Z = v
    raw = [sigma * (Y - X), X * (rho - Z) - Y, X * Y - beta * Z]
    sx = c_x * math.sqrt(beta * (rho - 1))
    return _unscale(raw, v, [sx, sx, c_z * (rho - 1)])


def _sym_chen(v, sigma=40.0, rho=28.0, beta=6.0):
    X, Y, Z = v
    raw = [sigma * (Y - X), (rho - sigma) * X - X * Z + rho * Y, X * Y - beta * Z]
    g = 2 * rho - sigma
    return _unscale(raw, v, [math.sqrt(beta * g), math.sqrt(beta * g), g])


def _sym_duffing(v):
    X, Y = v
    return [Y, X - X**3]


ORACLES = {
    "cubic1d": _sym_cubic, "vdp": _sym_vdp, "lv2d": _sym_lv2d, "lv3d": _sym_lv3d,
    "rossler": _sym_rossler, "lorenz": _sym_lorenz, "chen": _sym_chen, "duffing": _sym_duffing,
}

PARAM_SETS = [
    ("cubic1d", {}),
    *[("cubic1d", dict(zip(["X_c1", "X_c2", "X_c3"], c))) for c in CUBIC_CASES.values()],
    ("vdp", {}), ("vdp", {"mu": 2.5}),
    ("lv2d", {}), ("lv2d", {"alpha": 0.7, "gamma": 1.3}),
    ("lv3d", {}), ("lv3d", {"alpha": 1.2, "beta": 0.8, "eps_sp": 0.5, "eta_sp": 2.0}),
    ("rossler", {}),
    ("lorenz", {}), ("lorenz", {"rho": 20.0, "c_x": 1.0}),
    ("chen", {}),
    ("duffing", {}),
]


def _monomials_from_field(f):
    n = f.n
    out = [defaultdict(float) for _ in range(n)]
    for i in range(n):
        out[i][(0,) * n] += f.F[0][i]
    for k in range(1, f.p + 1):
        for col, idx in enumerate(itertools.product(range(n), repeat=k)):
            exps = [0] * n
            for j in idx:
                exps[j] += 1
            for i in range(n):
                out[i][tuple(exps)] += f.F[k][i, col]
    return out


@pytest.mark.parametrize("name,params", PARAM_SETS, ids=[f"{n}-{i}" for i, (n, _) in enumerate(PARAM_SETS)])
def test_shifted_coefficients_match_symbolic_expansion(name, params):
    prob = get_problem(name, **params)
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    xs = sympy.symbols(f"x0:{prob.n}")
    Vs = sympy.symbols(f"V0:{prob.n}")
    raw = ORACLES[name](list(Vs), **params)
    for _ in range(3):
        Xi = rng.uniform(-1.5, 1.5, prob.n)
        shift = {V: sympy.Float(c) + x for V, c, x in zip(Vs, Xi, xs)}
        exprs = [e.subs(shift, simultaneous=True) for e in raw]
        got = _monomials_from_field(prob.coeffs_at(Xi))
        for i, e in enumerate(exprs):
            poly = sympy.Poly(sympy.expand(e), *xs)
            want = {m: float(c) for m, c in poly.terms()}
            for m in set(want) | set(got[i]):
                assert got[i].get(m, 0.0) == pytest.approx(want.get(m, 0.0), abs=1e-10, rel=1e-12), (i, m)


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_rhs_matches_shifted_field(name):
    prob = get_problem(name)
    rng = np.random.default_rng(1)
    for _ in range(5):
        Xi = rng.uniform(-2, 2, prob.n)
        assert taylor_shift_check(prob.coeffs_at(Xi), prob.rhs, Xi, rng=rng) < 1e-12


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_fixed_points_are_stationary(name):
    prob = get_problem(name)
    assert prob.fixed_points
    for fp in prob.fixed_points:
        assert np.abs(prob.rhs(fp)).max() < 1e-12


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_rhs_broadcasts_over_batch(name):
    prob = get_problem(name)
    X = np.random.default_rng(2).uniform(-1, 1, (4, prob.n))
    np.testing.assert_allclose(prob.rhs(X), np.array([prob.rhs(x) for x in X]), atol=1e-14)


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_defaults_have_right_dimension(name):
    prob = get_problem(name)
    assert len(prob.default_initial) == prob.n
    assert prob.coeffs_at(np.zeros(prob.n)).p == prob.p


def test_unknown_problem():
    with pytest.raises(KeyError, match="unknown problem"):
        get_problem("pendulum")


@pytest.mark.parametrize("name,params", [("lorenz", {"rho": 0.5}), ("chen", {"sigma": 60.0})])
def test_degenerate_normalizations_rejected(name, params):
    with pytest.raises(ValueError):
        get_problem(name, **params)


def test_from_field_shifts_generically():
    f = random_field(2, 3, np.random.default_rng(3))
    prob = from_field(f)
    Xi = np.array([0.4, -0.3])
    assert taylor_shift_check(prob.coeffs_at(Xi), f, Xi) < 1e-12
