import math

import numpy as np
import pytest
from scipy.linalg import expm

from carleman.core import PolyVectorField, assemble_operator, encode, random_field
from carleman.integrate import (
    BlowUpError,
    IntegratorConfig,
    LinearStepper,
    n_steps,
    rk4_linear_step,
    rk4_nonlinear_batch,
    rk4_nonlinear_solve,
    rk4_step,
)
from carleman.problems import cubic_1d, from_field, van_der_pol


def test_rk4_growth_factor():
    # one step of y' = y multiplies by the degree-4 Taylor polynomial of e^h
    h = 0.1
    got = rk4_step(lambda y: y, np.array([1.0]), h)[0]
    assert got == pytest.approx(1 + h + h**2 / 2 + h**3 / 6 + h**4 / 24, rel=1e-15)


def test_rk4_fourth_order_convergence():
    f = lambda y: np.array([y[1], -y[0]])  # noqa: E731
    errs = []
    for h in (0.1, 0.05):
        y = np.array([1.0, 0.0])
        for _ in range(round(1 / h)):
            y = rk4_step(f, y, h)
        errs.append(abs(y[0] - math.cos(1.0)))
    assert 14 < errs[0] / errs[1] < 18


def test_n_steps_tolerates_rounding():
    assert n_steps(7.0, 1e-3) == 7000
    assert n_steps(0.3, 0.1) == 3
    assert n_steps(0.35, 0.1) == 3


@pytest.mark.parametrize("kw", [{"dt": 0.0}, {"dt": -1.0}, {"dt": float("nan")}, {"scheme": "euler"}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        IntegratorConfig(**kw)


def test_linear_stepper_matches_four_stage_update():
    rng = np.random.default_rng(0)
    op = assemble_operator(random_field(2, 2, rng, scale=0.5), 4)
    st = LinearStepper(op, 1e-2)
    assert st.R is not None
    u = encode(rng.uniform(-0.3, 0.3, 2), 4)
    np.testing.assert_allclose(st.step(u), rk4_linear_step(op, u, 1e-2), rtol=1e-13, atol=1e-15)


def test_large_system_uses_sparse_path():
    op = assemble_operator(random_field(3, 2, np.random.default_rng(1)), 5)
    assert op.dim > 256
    st = LinearStepper(op, 1e-3)
    assert st.R is None
    u = encode([0.1, 0.2, -0.1], 5)
    np.testing.assert_array_equal(st.step(u), rk4_linear_step(op, u, 1e-3))


def test_linear_field_matches_matrix_exponential():
    F1 = np.array([[0.0, 1.0], [-1.0, -0.2]])
    op = assemble_operator(PolyVectorField((np.array([0.1, 0.0]), F1)), 1)
    st = LinearStepper(op, 1e-3)
    u = np.array([0.3, -0.1])
    for _ in range(1000):
        u = st.step(u)
    # affine solution via the augmented matrix
    aug = np.zeros((3, 3))
    aug[:2, :2], aug[:2, 2] = F1, [0.1, 0.0]
    want = (expm(aug) @ np.array([0.3, -0.1, 1.0]))[:2]
    np.testing.assert_allclose(u, want, atol=1e-12)


def test_linear_step_shape_and_blowup():
    op = assemble_operator(PolyVectorField((np.zeros(1), np.array([[1.0]]))), 2)
    with pytest.raises(ValueError, match="shape"):
        rk4_linear_step(op, np.zeros(3), 0.1)
    with pytest.raises(BlowUpError), np.errstate(invalid="ignore"):
        rk4_linear_step(op, np.array([np.inf, 0.0]), 0.1)


def test_nonlinear_solve_grid_and_batch():
    prob = van_der_pol()
    tr = rk4_nonlinear_solve(prob, [0.2, 0.0], 1.0, 1e-2)
    assert len(tr) == 101 and tr.times[-1] == pytest.approx(1.0)
    assert np.all(np.diff(tr.times) > 0)
    batch = rk4_nonlinear_batch(prob, [[0.2, 0.0], [0.5, 0.1]], 1.0, 1e-2)
    np.testing.assert_array_equal(batch[:, 0], tr.states)


def test_nonlinear_blowup_is_truncated():
    # x' = x^2 from 2 explodes at t = 0.5
    blow = from_field(PolyVectorField((np.zeros(1), np.zeros((1, 1)), np.array([[1.0]]))))
    with np.errstate(over="ignore", invalid="ignore"):
        tr = rk4_nonlinear_solve(blow, [2.0], 5.0, 1e-3)
    assert tr.blew_up and np.isfinite(tr.states).all()
    assert tr.times[-1] < 0.51
    assert not rk4_nonlinear_solve(cubic_1d(), [0.2], 1.0).blew_up


def test_nonpositive_horizon_rejected():
    with pytest.raises(ValueError):
        rk4_nonlinear_solve(van_der_pol(), [0.2, 0.0], 0.0)
