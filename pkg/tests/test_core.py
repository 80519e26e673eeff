import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from carleman.core import (
    PolyVectorField,
    assemble_operator,
    assemble_transfer_block,
    block_offsets,
    decode,
    encode,
    field_from_terms,
    instability_flag,
    lifted_dim,
    random_field,
    shift_field,
    taylor_shift_check,
)


def ball_point(rng, n, radius):
    v = rng.normal(size=n)
    return v * radius * rng.uniform() ** (1 / n) / np.linalg.norm(v)


class TestPolyVectorField:
    def test_shapes_validated(self):
        with pytest.raises(ValueError, match="F_1"):
            PolyVectorField((np.zeros(2), np.zeros((2, 3))))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            PolyVectorField((np.zeros(1), np.array([[np.nan]])))

    def test_needs_linear_term(self):
        with pytest.raises(ValueError):
            PolyVectorField((np.zeros(2),))

    def test_arrays_read_only(self):
        f = PolyVectorField.zeros(2, 2)
        with pytest.raises(ValueError):
            f.F[1][0, 0] = 1.0

    def test_evaluation_matches_monomials(self):
        # dx0 = 1 + 2 x1 + 3 x0 x1 ; dx1 = -x0^2 + x1^3
        f = field_from_terms(2, 3, [
            (0, (), 1.0), (0, (1,), 2.0), (0, (0, 1), 3.0), (1, (0, 0), -1.0), (1, (1, 1, 1), 1.0),
        ])
        x = np.array([0.3, -0.7])
        want = [1 + 2 * x[1] + 3 * x[0] * x[1], -x[0] ** 2 + x[1] ** 3]
        np.testing.assert_allclose(f(x), want, rtol=0, atol=1e-15)

    def test_batch_evaluation(self):
        rng = np.random.default_rng(0)
        f = random_field(3, 2, rng)
        X = rng.normal(size=(5, 3))
        np.testing.assert_allclose(f(X), np.array([f(x) for x in X]), atol=1e-14)


class TestShift:
    def test_shifted_field_is_translate(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            f = random_field(2, 3, rng)
            d = rng.normal(size=2)
            assert taylor_shift_check(shift_field(f, d), f, d, rng=rng) < 1e-12 * (1 + np.abs(d).max()) ** 3

    def test_group_property(self):
        rng = np.random.default_rng(2)
        f = random_field(2, 3, rng)
        a, b = rng.normal(size=2), rng.normal(size=2)
        g1 = shift_field(shift_field(f, a), b)
        g2 = shift_field(f, a + b)
        for A, B in zip(g1.F, g2.F):
            np.testing.assert_allclose(A, B, atol=1e-12)

    def test_zero_shift_identity(self):
        f = random_field(3, 2, np.random.default_rng(3))
        for A, B in zip(shift_field(f, np.zeros(3)).F, f.F):
            np.testing.assert_array_equal(A, B)

    def test_check_rejects_wrong_dimension(self):
        f = PolyVectorField.zeros(2, 2)
        with pytest.raises(ValueError, match="center"):
            taylor_shift_check(f, f, [0.0, 0.0, 0.0])


class TestOperator:
    def test_dimensions(self):
        assert lifted_dim(2, 3) == 2 + 4 + 8
        assert list(block_offsets(3, 2)) == [0, 3, 12]

    def test_P_below_p_rejected(self):
        with pytest.raises(ValueError, match="P=2"):
            assemble_operator(PolyVectorField.zeros(1, 3), 2)

    @pytest.mark.parametrize("n,p,P", [(1, 3, 6), (2, 2, 4), (2, 3, 5), (3, 2, 4), (3, 3, 3)])
    def test_blocks_match_kronecker_sums(self, n, p, P):
        f = random_field(n, p, np.random.default_rng(n * 10 + p))
        op = assemble_operator(f, P)
        for j in range(1, P + 1):
            for k in range(1, P + 1):
                q = k - j
                got = op.block(j, k).toarray()
                if -1 <= q <= p - 1:
                    want = assemble_transfer_block(f, j, q, P).toarray()
                    np.testing.assert_allclose(got, want, atol=1e-14)
                else:
                    assert not got.any()

    def test_band_structure(self):
        f = random_field(2, 3, np.random.default_rng(4))
        op = assemble_operator(f, 6)
        for (j, k) in op.blocks:
            assert j - 1 <= k <= j + f.p - 1

    def test_diagonal_block_is_sum_of_linear_parts(self):
        f = random_field(2, 2, np.random.default_rng(5))
        op = assemble_operator(f, 3)
        F1, I2 = f.F[1], np.eye(2)
        want = np.kron(F1, I2) + np.kron(I2, F1)
        np.testing.assert_allclose(op.block(2, 2).toarray(), want, atol=1e-15)

    def test_source_term(self):
        f = random_field(3, 2, np.random.default_rng(6))
        op = assemble_operator(f, 3)
        np.testing.assert_array_equal(op.B[:3], f.F[0])
        assert not op.B[3:].any()

    def test_matvec_agrees_with_sparse_and_dense(self):
        rng = np.random.default_rng(7)
        op = assemble_operator(random_field(3, 2, rng), 4)
        u = rng.normal(size=op.dim)
        np.testing.assert_allclose(op.matvec(u), op.A @ u, atol=1e-12)
        np.testing.assert_allclose(op.dense_A @ u, op.A @ u, atol=1e-12)
        assert sp.issparse(op.A)

    def test_transfer_block_ranges(self):
        f = PolyVectorField.zeros(2, 2)
        with pytest.raises(ValueError, match="offset"):
            assemble_transfer_block(f, 2, 2)
        with pytest.raises(ValueError, match="column"):
            assemble_transfer_block(f, 1, -1)
        with pytest.raises(ValueError, match="row"):
            assemble_transfer_block(f, 4, 0, P=3)

    def test_linear_field_is_exact(self):
        # a linear field embeds exactly: the x block evolves under F_1 alone
        f = PolyVectorField((np.zeros(2), np.array([[0.0, 1.0], [-1.0, -0.1]])))
        op = assemble_operator(f, 3)
        assert set(op.blocks) == {(1, 1), (2, 2), (3, 3)}


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(1, 3),
    p=st.integers(1, 3),
    extra=st.integers(0, 2),
    seed=st.integers(0, 2**32 - 1),
)
def test_chain_rule_first_block(n, p, extra, seed):
    """The x block of A encode(x) + B is the field itself."""
    rng = np.random.default_rng(seed)
    f = random_field(n, p, rng)
    op = assemble_operator(f, p + extra)
    for _ in range(5):
        x = ball_point(rng, n, 0.5)
        np.testing.assert_allclose(op.rhs(encode(x, op.P))[:n], f(x), rtol=0, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 3), P=st.integers(2, 4), seed=st.integers(0, 2**32 - 1))
def test_chain_rule_higher_blocks(n, P, seed):
    """Below the truncation level, block j holds d/dt x^{⊗j} = sum_m x..f(x)..x."""
    rng = np.random.default_rng(seed)
    f = random_field(n, 2, rng)
    op = assemble_operator(f, P + 2)
    x = ball_point(rng, n, 0.5)
    du = op.rhs(encode(x, op.P))
    off = op.offsets
    fx = f(x)
    for j in range(1, P + 1):
        want = np.zeros(n**j)
        for m in range(j):
            parts = [x] * j
            parts[m] = fx
            term = parts[0]
            for q in parts[1:]:
                term = np.kron(term, q)
            want += term
        np.testing.assert_allclose(du[off[j - 1]:off[j]], want, atol=1e-12)


class TestEncoding:
    def test_encode_layout(self):
        u = encode([2.0, 3.0], 2)
        np.testing.assert_array_equal(u, [2, 3, 4, 6, 6, 9])

    def test_decode_roundtrip(self):
        x = np.array([0.1, -0.2, 0.3])
        np.testing.assert_array_equal(decode(encode(x, 3), 3), x)

    def test_decode_too_short(self):
        with pytest.raises(ValueError):
            decode(np.zeros(2), 3)

    def test_instability_flag(self):
        assert not instability_flag(encode([0.9, -0.5], 4))
        assert instability_flag(np.array([0.1, -1.0001]))
        assert not instability_flag(np.array([1.0]))
