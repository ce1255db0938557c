"""Contraction factors from the SVD of the sweep matrix and checks of the
operator identities and per-sweep error bounds they imply."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, nullspace_basis, numeric_rank, pinv, svd
from .row_action import IterationTrace, SweepOperator

UNIT_TOL = 1e-8


@dataclass(frozen=True)
class SpectralReport:
    sigma_q: np.ndarray
    sigma_max_q: float
    sigma_second_q: float  # largest singular value of Q classified below 1
    sigma_min_pos_a: float
    k_factor: float
    k_bar_factor: float
    pinv_norm_a: float
    unit_multiplicity: int  # = dim N(A)

    @property
    def amplification(self) -> float:
        """``max{(1 - sigma_i^2)^-1, 1}`` over the singular values of Q below 1."""
        return 1.0 / (1.0 - self.k_bar_factor)

    def as_dict(self) -> dict:
        return {
            "sigma_max_q": self.sigma_max_q,
            "sigma_second_q": self.sigma_second_q,
            "sigma_min_pos_a": self.sigma_min_pos_a,
            "k_factor": self.k_factor,
            "k_bar_factor": self.k_bar_factor,
            "pinv_norm_a": self.pinv_norm_a,
            "unit_multiplicity": self.unit_multiplicity,
        }


def _check_pair(a: np.ndarray, op: SweepOperator) -> None:
    if op.source_dims != a.shape:
        raise ValueError(f"operator built for {op.source_dims}, A is {a.shape}")


def spectral_report(a, op: SweepOperator, unit_tol: float = UNIT_TOL) -> SpectralReport:
    a = as_matrix(a, "A")
    _check_pair(a, op)
    sq = np.linalg.svd(op.q, compute_uv=False)
    is_unit = sq >= 1.0 - unit_tol
    below = sq[~is_unit]
    second = float(below[0]) if below.size else 0.0
    unit = int(np.count_nonzero(is_unit))

    fa = svd(a)
    smin = float(fa.singular_values[numeric_rank(fa) - 1])

    # 1 - min_i min(1 - s_i^2, 1) over the nonzero singular values; unit ones give exactly 1
    k = 1.0 if unit else float(sq[0] ** 2)
    return SpectralReport(
        sigma_q=sq,
        sigma_max_q=float(sq[0]),
        sigma_second_q=second,
        sigma_min_pos_a=smin,
        k_factor=k,
        k_bar_factor=second**2,
        pinv_norm_a=1.0 / smin,
        unit_multiplicity=unit,
    )


def _range_projector(a: np.ndarray) -> np.ndarray:
    f = svd(a)
    ur = f.u[:, : numeric_rank(f)]
    return ur @ ur.T


def restricted_inverse_times_asm(a, op: SweepOperator, restrict_to_range: bool = True) -> np.ndarray:
    """``(I - Q P_R(A^T))^{-1} A_S^T M``, inverted on the row space only.

    Every column of ``A_S^T`` lies in R(A^T), which ``Q`` maps into itself, so
    the solve reduces to an r x r system in a row-space basis. With
    ``restrict_to_range`` the result is composed with ``P_R(A)``.
    """
    a = as_matrix(a, "A")
    _check_pair(a, op)
    f = svd(a)
    vr = f.v[:, : numeric_rank(f)]
    rhs = op.asm
    if restrict_to_range:
        rhs = rhs @ _range_projector(a)
    lhs = np.eye(vr.shape[1]) - vr.T @ op.q @ vr
    try:
        z = np.linalg.solve(lhs, vr.T @ rhs)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError("I - Q restricted to the row space is singular") from exc
    return vr @ z


def verify_pinv_identity(a, op: SweepOperator, restrict_to_range: bool = True) -> float:
    """Max-entry discrepancy between ``(I - Q~)^{-1} A_S^T M`` and ``A^+``.

    The identity is exact on R(A); when m > rank(A) the unrestricted product
    differs from ``A^+`` on N(A^T), so ``restrict_to_range=False`` is only
    meaningful for matrices with full row rank.
    """
    a = as_matrix(a, "A")
    y = restricted_inverse_times_asm(a, op, restrict_to_range)
    return float(np.max(np.abs(y - pinv(a))))


def verify_asm_norm_bound(a, op: SweepOperator, restrict_to_range: bool = True) -> tuple[float, float]:
    """Return ``(|A_S^T M P_R(A)|_2, 2 |A^+|_2)``; the first never exceeds the second."""
    a = as_matrix(a, "A")
    _check_pair(a, op)
    asm = op.asm
    if restrict_to_range:
        asm = asm @ _range_projector(a)
    return svd(asm).sigma_max, 2.0 * svd(pinv(a)).sigma_max


def antisymmetric_identity_check(op: SweepOperator, samples: int, a=None, seed: int = 0) -> tuple[float, float]:
    """Check that the antisymmetric part of Q has a vanishing quadratic form.

    Returns ``(quad, ident)``: the largest ``|<W x, x>| / (1 + |x|^2)`` over
    random ``x`` with ``W = (Q - Q^T)/2``, and the max-entry defect of
    ``B^T (2I - B) = (I - Q^T Q) + (Q - Q^T)`` with ``B = A_S^T M A`` (or
    ``I - Q`` when ``a`` is not given).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    q = op.q
    n = q.shape[0]
    w = 0.5 * (q - q.T)
    x = np.random.default_rng(seed).standard_normal((samples, n))
    quad = np.abs(np.einsum("ij,ij->i", x @ w.T, x)) / (1.0 + np.einsum("ij,ij->i", x, x))

    eye = np.eye(n)
    bmat = eye - q if a is None else op.asm @ as_matrix(a, "A")
    ident = np.max(np.abs(bmat.T @ (2 * eye - bmat) - ((eye - q.T @ q) + (q - q.T))))
    return float(quad.max()), float(ident)


def nullspace_equivalence_check(a, op: SweepOperator, unit_tol: float = UNIT_TOL) -> float:
    """Distance ``|P_N(A) - P_V|_2`` with V spanned by unit singular vectors of Q.

    Returns 1.0 (the largest possible value) when the dimensions disagree.
    """
    a = as_matrix(a, "A")
    _check_pair(a, op)
    va = nullspace_basis(a)
    _, s, vt = np.linalg.svd(op.q)
    vq = vt[s >= 1.0 - unit_tol].T
    if va.shape[1] != vq.shape[1]:
        return 1.0
    if va.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(va @ va.T - vq @ vq.T, 2))


@dataclass(frozen=True)
class BoundCheckResult:
    """Per-iterate outcome of a bound check.

    ``per_step_ok[k]`` covers both the one-step bound that produced iterate k
    and the accumulated envelope at k. ``max_violation`` is the largest
    ``lhs - rhs - slack``; a value <= 0 means every check passed.
    """

    per_step_ok: np.ndarray
    max_violation: float
    bound_values: np.ndarray  # one-step right-hand side, in norm units
    envelope_values: np.ndarray

    @property
    def ok(self) -> bool:
        return bool(np.all(self.per_step_ok))

    @property
    def first_failure(self) -> int | None:
        bad = np.flatnonzero(~self.per_step_ok)
        return int(bad[0]) if bad.size else None


def check_exact_bounds(trace: IterationTrace, report: SpectralReport) -> BoundCheckResult:
    """``|e_k|^2 <= Kbar |e_{k-1}|^2`` and ``|e_k|^2 <= Kbar^k |e_0|^2`` at every k."""
    if trace.perturbation_norm > 0:
        raise ValueError("trace was run on perturbed data; use check_perturbed_bounds")
    e2 = trace.err_norms**2
    kb = report.k_bar_factor
    slack = 1e-10 * (1.0 + e2[0])
    step_rhs = np.empty_like(e2)
    step_rhs[0] = e2[0]
    step_rhs[1:] = kb * e2[:-1]
    env_rhs = kb ** np.arange(len(e2)) * e2[0]
    viol = np.maximum(e2 - step_rhs, e2 - env_rhs) - slack
    return BoundCheckResult(viol <= 0, float(viol.max()), np.sqrt(step_rhs), np.sqrt(env_rhs))


def perturbed_envelope(report: SpectralReport, e0: float, perturbation_norm: float, k) -> np.ndarray:
    """Accumulated error bound after k sweeps on perturbed data."""
    rate = report.k_bar_factor ** (np.asarray(k, dtype=float) / 2)
    noise = report.amplification * report.pinv_norm_a * perturbation_norm
    return rate * e0 + 4.0 * (1.0 - rate) * noise


def check_perturbed_bounds(trace: IterationTrace, report: SpectralReport) -> BoundCheckResult:
    """One-step ``|e_k| <= Kbar^{1/2} |e_{k-1}| + 2 |A^+| |db|`` and the accumulated envelope."""
    e = trace.err_norms
    slack = 1e-10 * (1.0 + e[0])
    noise = 2.0 * report.pinv_norm_a * trace.perturbation_norm
    step_rhs = np.empty_like(e)
    step_rhs[0] = e[0]
    step_rhs[1:] = np.sqrt(report.k_bar_factor) * e[:-1] + noise
    env_rhs = perturbed_envelope(report, e[0], trace.perturbation_norm, np.arange(len(e)))
    viol = np.maximum(e - step_rhs, e - env_rhs) - slack
    return BoundCheckResult(viol <= 0, float(viol.max()), step_rhs, env_rhs)


def error_recurrence_defect(trace: IterationTrace, op: SweepOperator) -> float:
    """Largest relative defect of ``|e_{k+1}|^2 = |e_k|^2 - |(I - Q^T Q)^{1/2} e_k|^2``.

    The square root is formed from the SVD of Q; the defect is relative to
    ``|e_0|^2``. Only meaningful for exact data.
    """
    _, s, vt = np.linalg.svd(op.q)
    root = (vt.T * np.sqrt(np.clip(1.0 - s**2, 0.0, None))) @ vt
    errs = trace.iterates - trace.reference
    e2 = trace.err_norms**2
    pred = e2[:-1] - np.sum((errs[:-1] @ root.T) ** 2, axis=1)
    if len(e2) < 2:
        return 0.0
    scale = e2[0] if e2[0] > 0 else 1.0
    return float(np.max(np.abs(e2[1:] - pred)) / scale)
