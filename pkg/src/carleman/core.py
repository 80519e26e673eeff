"""Truncated Carleman embedding of a polynomial vector field.

A field ``dx/dt = F_0 + F_1 x + F_2 (x⊗x) + ... + F_p x^{⊗p}`` is lifted to
the linear system ``du/dt = A u + B`` on ``u = (x, x⊗x, ..., x^{⊗P})``.
The lifted state uses the full Kronecker basis, so block ``k`` of ``u`` has
``n**k`` entries.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

# lifted systems up to this size are applied as dense matrices
DENSE_LIMIT = 256


@dataclass(frozen=True)
class PolyVectorField:
    """Taylor data ``F_0 .. F_p`` of a polynomial field on ``n`` variables.

    ``F[0]`` is an ``n``-vector, ``F[k]`` an ``n x n**k`` matrix acting on
    ``x^{⊗k}``.
    """

    F: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.F) < 2:
            raise ValueError("need at least F_0 and F_1")
        mats = []
        n = np.asarray(self.F[0]).reshape(-1).size
        for k, Fk in enumerate(self.F):
            Fk = np.array(Fk, dtype=float)
            if k == 0:
                Fk = Fk.reshape(n)
            elif Fk.shape != (n, n**k):
                raise ValueError(f"F_{k} has shape {Fk.shape}, expected {(n, n**k)}")
            if not np.all(np.isfinite(Fk)):
                raise ValueError(f"F_{k} has non-finite entries")
            Fk.setflags(write=False)
            mats.append(Fk)
        object.__setattr__(self, "F", tuple(mats))

    @classmethod
    def zeros(cls, n: int, p: int) -> "PolyVectorField":
        return cls(tuple([np.zeros(n)] + [np.zeros((n, n**k)) for k in range(1, p + 1)]))

    @property
    def n(self) -> int:
        return self.F[0].shape[0]

    @property
    def p(self) -> int:
        return len(self.F) - 1

    def __call__(self, x) -> np.ndarray:
        """Evaluate ``sum_k F_k x^{⊗k}``; a leading batch axis is allowed."""
        x = np.asarray(x, dtype=float)
        batch = x.shape[:-1] if x.ndim > 1 else ()
        x = x.reshape(-1, self.n)
        out = np.tile(self.F[0], (x.shape[0], 1))
        power = np.ones((x.shape[0], 1))
        for Fk in self.F[1:]:
            power = (power[:, :, None] * x[:, None, :]).reshape(x.shape[0], -1)
            out += power @ Fk.T
        return out.reshape(batch + (self.n,))

    def shifted(self, delta) -> "PolyVectorField":
        """Re-expand the field about ``delta``: returns ``G`` with ``G(x) = F(delta + x)``."""
        return shift_field(self, delta)


def shift_field(f: PolyVectorField, delta) -> PolyVectorField:
    n, p = f.n, f.p
    delta = np.asarray(delta, dtype=float).reshape(n)
    out = [np.zeros(n)] + [np.zeros((n, n**m)) for m in range(1, p + 1)]
    out[0] = f.F[0].copy()
    for k in range(1, p + 1):
        T = f.F[k].reshape((n,) + (n,) * k)
        # each subset S of the k slots keeps x in S and contracts delta elsewhere
        for S in itertools.product((False, True), repeat=k):
            m = sum(S)
            C = T
            axis = 1
            for keep in S:
                if keep:
                    axis += 1
                else:
                    C = np.tensordot(C, delta, axes=([axis], [0]))
            if m == 0:
                out[0] += C
            else:
                out[m] += C.reshape(n, n**m)
    return PolyVectorField(tuple(out))


def taylor_shift_check(
    f: PolyVectorField,
    rhs: Callable[[np.ndarray], np.ndarray],
    center,
    n_samples: int = 100,
    rng: np.random.Generator | None = None,
) -> float:
    """Max of ``|rhs(center + x) - f(x)|`` over random ``|x| <= 1``."""
    center = np.asarray(center, dtype=float).reshape(-1)
    if center.size != f.n:
        raise ValueError(f"center has {center.size} components, field has n={f.n}")
    rng = np.random.default_rng(0) if rng is None else rng
    worst = 0.0
    for _ in range(n_samples):
        x = rng.normal(size=f.n)
        x *= rng.uniform() ** (1.0 / f.n) / np.linalg.norm(x)
        worst = max(worst, float(np.max(np.abs(np.asarray(rhs(center + x)) - f(x)))))
    return worst


def _eye_power(n: int, m: int) -> sp.csr_matrix:
    return sp.identity(n**m, format="csr")


def assemble_transfer_block(f: PolyVectorField, j: int, q: int, P: int | None = None):
    """Block of ``A`` coupling ``x^{⊗j}`` to ``x^{⊗(j+q)}``.

    It is the sum over the ``j`` slots of ``I^{⊗m} ⊗ F_{q+1} ⊗ I^{⊗(j-1-m)}``,
    for ``q`` in ``-1 .. p-1``. Returned as a sparse CSR matrix of shape
    ``n**j x n**(j+q)``.
    """
    n, p = f.n, f.p
    if not -1 <= q <= p - 1:
        raise ValueError(f"offset q={q} outside -1..{p - 1}")
    if j < 1 or (P is not None and j > P):
        raise ValueError(f"block row j={j} out of range")
    col = j + q
    if col < 1 or (P is not None and col > P):
        raise ValueError(f"block column {col} out of range")
    Fk = sp.csr_matrix(f.F[q + 1].reshape(n, -1))
    block = None
    for m in range(j):
        term = sp.kron(sp.kron(_eye_power(n, m), Fk), _eye_power(n, j - 1 - m), format="csr")
        block = term if block is None else block + term
    return block.tocsr()


@dataclass(frozen=True, eq=False)
class CarlemanOperator:
    """Truncated lifted system ``du/dt = A u + B``.

    ``A`` is held as one CSR matrix; :meth:`block` and :attr:`blocks` expose
    its ``n**j x n**k`` sub-blocks (1-based block indices).
    """

    n: int
    P: int
    A: sp.csr_matrix = field(repr=False)
    B: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return lifted_dim(self.n, self.P)

    @cached_property
    def offsets(self) -> np.ndarray:
        return block_offsets(self.n, self.P)

    def block(self, j: int, k: int) -> sp.csr_matrix:
        off = self.offsets
        return self.A[off[j - 1]:off[j], off[k - 1]:off[k]]

    @cached_property
    def blocks(self) -> dict:
        """Nonzero blocks keyed by ``(row, col)``."""
        out = {}
        for j in range(1, self.P + 1):
            for k in range(1, self.P + 1):
                blk = self.block(j, k)
                if blk.count_nonzero():
                    out[(j, k)] = blk
        return out

    @cached_property
    def dense_A(self) -> np.ndarray:
        return self.A.toarray()

    def matvec(self, u: np.ndarray) -> np.ndarray:
        """``A u`` evaluated block by block."""
        out = np.zeros(self.dim)
        off = self.offsets
        for (r, c), blk in self.blocks.items():
            out[off[r - 1]:off[r]] += blk @ u[off[c - 1]:off[c]]
        return out

    def rhs(self, u: np.ndarray) -> np.ndarray:
        if self.dim <= DENSE_LIMIT:
            return self.dense_A @ u + self.B
        return self.A @ u + self.B


def lifted_dim(n: int, P: int) -> int:
    return sum(n**k for k in range(1, P + 1))


def block_offsets(n: int, P: int) -> np.ndarray:
    return np.concatenate([[0], np.cumsum([n**k for k in range(1, P + 1)])])


@lru_cache(maxsize=64)
def _scatter_template(n: int, p: int, P: int):
    """Positions in ``A`` fed by each entry of ``F_1 .. F_p``.

    Returns ``(rows, cols, src)`` where ``src`` indexes the concatenation of
    the flattened ``F_k`` matrices. Repeated positions are summed on assembly.
    """
    off = block_offsets(n, P)
    flat_start = np.concatenate([[0], np.cumsum([n * n**k for k in range(p + 1)])])
    rows, cols, src = [], [], []
    for j in range(1, P + 1):
        for k in range(0, p + 1):
            col_block = j + k - 1
            if col_block < 1 or col_block > P:
                continue
            for m in range(j):
                na, nb = n**m, n ** (j - 1 - m)
                a = np.arange(na)[:, None, None, None]
                r = np.arange(n)[None, :, None, None]
                c = np.arange(n**k)[None, None, :, None]
                b = np.arange(nb)[None, None, None, :]
                shape = (na, n, n**k, nb)
                rows.append(np.broadcast_to(off[j - 1] + (a * n + r) * nb + b, shape).ravel())
                cols.append(np.broadcast_to(off[col_block - 1] + (a * n**k + c) * nb + b, shape).ravel())
                src.append(np.broadcast_to(flat_start[k] + r * n**k + c, shape).ravel())
    rows, cols, src = (np.concatenate(v) for v in (rows, cols, src))
    for v in (rows, cols, src):
        v.setflags(write=False)
    return rows, cols, src


def assemble_operator(f: PolyVectorField, P: int) -> CarlemanOperator:
    n, p = f.n, f.p
    if P < p:
        raise ValueError(f"truncation order P={P} below field order p={p}")
    rows, cols, src = _scatter_template(n, p, P)
    # F_0 couples block j to block j-1 for j >= 2; for j = 1 it is the source B
    values = np.concatenate([Fk.ravel() for Fk in f.F])[src]
    keep = values != 0.0
    M = lifted_dim(n, P)
    A = sp.csr_matrix((values[keep], (rows[keep], cols[keep])), shape=(M, M))
    A.sum_duplicates()
    B = np.zeros(M)
    B[:n] = f.F[0]
    B.setflags(write=False)
    return CarlemanOperator(n=n, P=P, A=A, B=B)


def encode(x, P: int) -> np.ndarray:
    """Lift ``x`` to ``(x, x⊗x, ..., x^{⊗P})``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    parts = [x]
    for _ in range(P - 1):
        parts.append(np.kron(parts[-1], x))
    return np.concatenate(parts)


def decode(u: np.ndarray, n: int) -> np.ndarray:
    u = np.asarray(u)
    if u.size < n:
        raise ValueError(f"lifted state of length {u.size} is shorter than n={n}")
    return u[:n].copy()


def instability_flag(u: np.ndarray) -> bool:
    return bool(np.any(np.abs(u) > 1.0))


def random_field(n: int, p: int, rng: np.random.Generator, scale: float = 1.0) -> PolyVectorField:
    """Field with entries uniform in ``[-scale, scale]``."""
    return PolyVectorField(
        tuple([rng.uniform(-scale, scale, n)] + [rng.uniform(-scale, scale, (n, n**k)) for k in range(1, p + 1)])
    )


def field_from_terms(n: int, p: int, terms: Sequence[tuple[int, Sequence[int], float]]) -> PolyVectorField:
    """Build a field from ``(row, monomial_indices, coeff)`` triples.

    ``monomial_indices`` lists the variable index of each Kronecker slot, so
    ``(1, (0, 1), c)`` puts ``c`` on ``x_0 x_1`` in the equation for ``x_1``.
    Each triple fills exactly one Kronecker column.
    """
    F = [np.zeros(n)] + [np.zeros((n, n**k)) for k in range(1, p + 1)]
    for row, idx, c in terms:
        k = len(idx)
        if k == 0:
            F[0][row] += c
        else:
            F[k][row, np.ravel_multi_index(tuple(idx), (n,) * k)] += c
    return PolyVectorField(tuple(F))
