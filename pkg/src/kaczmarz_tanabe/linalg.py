"""Dense real linear algebra helpers: validation, SVD, pseudoinverse and projectors.

Matrices and vectors are plain float64 numpy arrays. The ``as_matrix`` and
``as_vector`` constructors are the only gate: they reject NaN/Inf so every
downstream bound check can assume finite data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RANK_TOL = 1e-10


class SvdConvergenceError(ArithmeticError):
    """Raised when the SVD driver fails to converge."""


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def as_vector(v, name: str = "vector") -> np.ndarray:
    arr = np.array(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SvdFactorization:
    """Thin SVD ``a = u @ diag(singular_values) @ v.T``.

    ``u`` is (m, k) and ``v`` is (n, k) with k = min(m, n); singular values are
    nonincreasing and nonnegative. ``rank_tol`` is relative to the largest one.
    """

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray
    rank_tol: float = RANK_TOL

    @property
    def sigma_max(self) -> float:
        return float(self.singular_values[0]) if self.singular_values.size else 0.0

    def rank(self) -> int:
        return numeric_rank(self)

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.singular_values) @ self.v.T


def svd(a, rank_tol: float = RANK_TOL) -> SvdFactorization:
    a = as_matrix(a)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        m, n = a.shape
        raise SvdConvergenceError(f"SVD did not converge for {m}x{n} matrix") from exc
    return SvdFactorization(frozen(u), frozen(s), frozen(vt.T.copy()), rank_tol)


def numeric_rank(f: SvdFactorization) -> int:
    """Count singular values above ``rank_tol * sigma_max``."""
    smax = f.sigma_max
    if smax == 0.0:
        return 0
    return int(np.count_nonzero(f.singular_values > f.rank_tol * smax))


def _factor(a) -> SvdFactorization:
    return a if isinstance(a, SvdFactorization) else svd(a)


def rowspace_basis(a) -> np.ndarray:
    """Orthonormal basis (n, r) of R(A^T) from the right singular vectors."""
    f = _factor(a)
    return f.v[:, : numeric_rank(f)]


def nullspace_basis(a) -> np.ndarray:
    """Orthonormal basis (n, n - r) of N(A)."""
    a = as_matrix(a)
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    smax = s[0] if s.size else 0.0
    r = 0 if smax == 0.0 else int(np.count_nonzero(s > RANK_TOL * smax))
    return vt[r:].T.copy()


def pinv(a) -> np.ndarray:
    """Materialized Moore-Penrose inverse, inverting only singular values above tolerance."""
    f = _factor(a)
    r = numeric_rank(f)
    return (f.v[:, :r] / f.singular_values[:r]) @ f.u[:, :r].T


def min_norm_solution(a, b) -> np.ndarray:
    """Minimum-norm least-squares solution ``A^+ b``."""
    a = as_matrix(a)
    b = as_vector(b, "rhs")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: A is {a.shape[0]}x{a.shape[1]}, b has length {b.shape[0]}")
    f = svd(a)
    r = numeric_rank(f)
    coeff = (f.u[:, :r].T @ b) / f.singular_values[:r]
    return f.v[:, :r] @ coeff


def _check_cols(a: np.ndarray, x: np.ndarray) -> None:
    if a.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: A has {a.shape[1]} columns, x has length {x.shape[0]}")


def rowspace_projection(a, x) -> np.ndarray:
    """Orthogonal projection of ``x`` onto R(A^T)."""
    a = as_matrix(a)
    x = as_vector(x)
    _check_cols(a, x)
    vr = rowspace_basis(a)
    return vr @ (vr.T @ x)


def null_projection(a, x) -> np.ndarray:
    """Orthogonal projection of ``x`` onto N(A)."""
    x = as_vector(x)
    return x - rowspace_projection(a, x)


def spectral_norm(a) -> float:
    return svd(a).sigma_max
