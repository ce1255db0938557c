"""Classical Kaczmarz sweeps and the Kaczmarz-Tanabe affine iteration.

One forward sweep through rows 1..m is the affine map

    y -> Q y + A_S^T M b,   Q = P_m ... P_1,   P_i = I - a_i a_i^T / |a_i|^2,

where column i of ``A_S^T`` is ``P_m ... P_{i+1} a_i`` and ``M`` holds the
inverse squared row norms. ``build_sweep_operator`` precomputes the pair so
that every later sweep costs one matrix-vector product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, as_vector, frozen, min_norm_solution, null_projection, spectral_norm


class ZeroRowError(ValueError):
    def __init__(self, index: int):
        super().__init__(f"row {index} of A is zero; Kaczmarz projections need nonzero rows")
        self.index = index


def _row_norms_sq(a: np.ndarray) -> np.ndarray:
    norms = np.einsum("ij,ij->i", a, a)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroRowError(int(zero[0]))
    return norms


def kaczmarz_step(a_i, b_i: float, x) -> np.ndarray:
    """Project ``x`` orthogonally onto the hyperplane ``<a_i, x> = b_i``."""
    a_i = as_vector(a_i, "row")
    x = as_vector(x, "x")
    if a_i.shape != x.shape:
        raise ValueError(f"dimension mismatch: row has length {a_i.size}, x has length {x.size}")
    nrm = float(a_i @ a_i)
    if nrm == 0.0:
        raise ZeroRowError(0)
    return x + ((b_i - a_i @ x) / nrm) * a_i


def _check_system(a: np.ndarray, b: np.ndarray, x: np.ndarray | None = None) -> None:
    m, n = a.shape
    if b.shape[0] != m:
        raise ValueError(f"dimension mismatch: A is {m}x{n}, b has length {b.shape[0]}")
    if x is not None and x.shape[0] != n:
        raise ValueError(f"dimension mismatch: A is {m}x{n}, x has length {x.shape[0]}")


def kaczmarz_sweep(a, b, x) -> np.ndarray:
    """One cyclic pass of Kaczmarz steps over rows 1..m, in order."""
    a = as_matrix(a, "A")
    b = as_vector(b, "b")
    x = as_vector(x, "x")
    _check_system(a, b, x)
    norms = _row_norms_sq(a)
    for i in range(a.shape[0]):
        ai = a[i]
        x = x + ((b[i] - ai @ x) / norms[i]) * ai
    return x


@dataclass(frozen=True)
class SweepOperator:
    """Precomputed sweep map ``y -> q @ y + a_s_t @ (m_diag * b)``.

    Memory is ``n*n + m*n + 2*m`` doubles; for a 2700x2500 projector that is
    roughly 104 MB.
    """

    q: np.ndarray  # (n, n)
    a_s_t: np.ndarray  # (n, m); column i is P_m ... P_{i+1} a_i
    m_diag: np.ndarray  # (m,)
    row_norms_sq: np.ndarray  # (m,)

    @property
    def source_dims(self) -> tuple[int, int]:
        return self.a_s_t.shape[1], self.q.shape[0]

    @property
    def asm(self) -> np.ndarray:
        """The n x m matrix ``A_S^T M``."""
        return self.a_s_t * self.m_diag

    def offset(self, b) -> np.ndarray:
        return self.a_s_t @ (self.m_diag * b)

    def apply(self, y, b) -> np.ndarray:
        return self.q @ y + self.offset(b)


def build_sweep_operator(a, block_size: int = 64) -> SweepOperator:
    """Build ``Q = P_m ... P_1`` and ``A_S^T`` for the forward sweep.

    Rows are absorbed from m down to 1: with ``Q_run = P_m ... P_{i+1}`` the
    column ``Q_run a_i`` is exactly ``Q_i a_i``, and ``Q_run <- Q_run P_i``.
    ``block_size=1`` is the plain rank-one loop; larger blocks aggregate the
    projectors of consecutive rows into ``I - G D Y^T`` so the n x n updates
    become matrix-matrix products. Both cost O(m n^2).
    """
    a = as_matrix(a, "A")
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    m, n = a.shape
    norms = _row_norms_sq(a)
    inv = 1.0 / norms
    q = np.eye(n)
    a_s_t = np.empty((n, m))
    for hi in range(m - 1, -1, -block_size):
        lo = max(hi - block_size + 1, 0)
        rows = a[lo : hi + 1]
        nb = hi - lo + 1
        # g[:, j] = P_hi ... P_{lo+j+1} a_{lo+j}
        g = np.empty((n, nb))
        for j in range(nb - 1, -1, -1):
            tail = slice(j + 1, nb)
            coeff = (rows[tail] @ rows[j]) * inv[lo + j + 1 : hi + 1]
            g[:, j] = rows[j] - g[:, tail] @ coeff
        c = q @ g
        a_s_t[:, lo : hi + 1] = c
        q -= (c * inv[lo : hi + 1]) @ rows
    return SweepOperator(frozen(q), frozen(a_s_t), frozen(inv), frozen(norms))


def sweep_identity_residual(op: SweepOperator, a) -> float:
    """``max |(I - A_S^T M A) - Q|``; zero in exact arithmetic."""
    a = as_matrix(a, "A")
    if op.source_dims != a.shape:
        raise ValueError(f"operator built for {op.source_dims}, A is {a.shape}")
    n = a.shape[1]
    return float(np.max(np.abs(np.eye(n) - op.asm @ a - op.q)))


def residual_map_norm(op: SweepOperator, a) -> float:
    """Spectral norm of ``L = I - A A_S^T M``, which maps r_k to r_{k+1}."""
    a = as_matrix(a, "A")
    m = a.shape[0]
    return spectral_norm(np.eye(m) - a @ op.asm)


@dataclass(frozen=True)
class IterationTrace:
    """Iterates ``y_0..y_K`` with error and residual norms.

    ``err_norms[k] = |y_k - reference|`` and ``res_norms[k] = |b - A y_k|``
    with ``b`` the right-hand side actually iterated on.
    """

    iterates: np.ndarray  # (K+1, n)
    err_norms: np.ndarray
    res_norms: np.ndarray
    reference: np.ndarray
    perturbation_norm: float = 0.0

    @property
    def k(self) -> np.ndarray:
        return np.arange(len(self.err_norms))

    def __len__(self) -> int:
        return len(self.err_norms)

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]


def reference_solution(a, b_exact, y0) -> np.ndarray:
    """Limit point ``P_N(A) y0 + A^+ b`` of the iteration on exact data."""
    return null_projection(a, y0) + min_norm_solution(a, b_exact)


def _make_trace(a, b, ys, reference, perturbation_norm) -> IterationTrace:
    ys = np.asarray(ys)
    err = np.linalg.norm(ys - reference, axis=1)
    res = np.linalg.norm(b - ys @ a.T, axis=1)
    return IterationTrace(frozen(ys), frozen(err), frozen(res), frozen(np.array(reference)), float(perturbation_norm))


def _prepare(a, b, y0, reference):
    a = as_matrix(a, "A")
    b = as_vector(b, "b")
    y0 = np.zeros(a.shape[1]) if y0 is None else as_vector(y0, "y0")
    _check_system(a, b, y0)
    if reference is None:
        reference = reference_solution(a, b, y0)
    reference = as_vector(reference, "reference")
    if reference.shape != y0.shape:
        raise ValueError("reference has wrong length")
    return a, b, y0, reference


def tanabe_iterate(
    op: SweepOperator,
    a,
    b,
    k_max: int,
    y0=None,
    reference=None,
    perturbation_norm: float = 0.0,
) -> IterationTrace:
    """Run ``y_{k+1} = Q y_k + A_S^T M b`` for ``k_max`` sweeps.

    ``reference`` defaults to ``P_N(A) y0 + A^+ b``, which is only the right
    limit for exact data; perturbed runs should pass the exact-data reference.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    a, b, y0, reference = _prepare(a, b, y0, reference)
    if op.source_dims != a.shape:
        raise ValueError(f"operator built for {op.source_dims}, A is {a.shape}")
    vc = op.offset(b)
    ys = np.empty((k_max + 1, y0.size))
    ys[0] = y0
    for k in range(k_max):
        ys[k + 1] = op.q @ ys[k] + vc
    return _make_trace(a, b, ys, reference, perturbation_norm)


def kaczmarz_iterate(
    a,
    b,
    sweeps: int,
    y0=None,
    reference=None,
    perturbation_norm: float = 0.0,
    per_step: bool = False,
) -> IterationTrace:
    """Classical cyclic Kaczmarz, recorded once per sweep (or per row step)."""
    if sweeps < 0:
        raise ValueError("sweeps must be >= 0")
    a, b, y0, reference = _prepare(a, b, y0, reference)
    norms = _row_norms_sq(a)
    m = a.shape[0]
    x = y0.copy()
    ys = [x.copy()]
    for _ in range(sweeps):
        for i in range(m):
            ai = a[i]
            x += ((b[i] - ai @ x) / norms[i]) * ai
            if per_step:
                ys.append(x.copy())
        if not per_step:
            ys.append(x.copy())
    return _make_trace(a, b, ys, reference, perturbation_norm)
