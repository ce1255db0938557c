import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from oracles import projector_product, random_system

from kaczmarz_tanabe.linalg import min_norm_solution, null_projection, rowspace_projection
from kaczmarz_tanabe.problems import perturb_uniform
from kaczmarz_tanabe.row_action import (
    ZeroRowError,
    build_sweep_operator,
    kaczmarz_iterate,
    kaczmarz_step,
    kaczmarz_sweep,
    reference_solution,
    residual_map_norm,
    sweep_identity_residual,
    tanabe_iterate,
)
from kaczmarz_tanabe.spectral import error_recurrence_defect, spectral_report


def test_kaczmarz_step_examples():
    assert_allclose(kaczmarz_step([1.0, 0.0], 1.0, [0.0, 0.0]), [1, 0])
    x = np.array([1.0, 5.0])
    assert_allclose(kaczmarz_step([1.0, 0.0], 1.0, x), x)
    # (5/15) * a_1 with |a_1|^2 = 15
    out = kaczmarz_step([1.0, 3.0, 2.0, -1.0], 5.0, np.zeros(4))
    assert_allclose(out, [1 / 3, 1, 2 / 3, -1 / 3], atol=1e-15)


def test_kaczmarz_step_lands_on_hyperplane():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a, x, b = rng.standard_normal(6), rng.standard_normal(6), rng.standard_normal()
        assert abs(a @ kaczmarz_step(a, b, x) - b) <= 1e-10 * (1 + abs(b))


def test_zero_rows_rejected():
    with pytest.raises(ZeroRowError):
        kaczmarz_step([0.0, 0.0], 1.0, [1.0, 1.0])
    with pytest.raises(ZeroRowError) as exc:
        build_sweep_operator([[1.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
    assert exc.value.index == 1
    with pytest.raises(ZeroRowError):
        kaczmarz_sweep([[0.0, 0.0]], [1.0], [0.0, 0.0])


def test_sweep_single_row_and_fixed_point(mp1):
    a, b, x = np.array([[2.0, -1.0]]), np.array([3.0]), np.array([0.5, 0.25])
    assert_allclose(kaczmarz_sweep(a, b, x), kaczmarz_step(a[0], b[0], x))
    assert_allclose(kaczmarz_sweep(mp1.a, mp1.b, np.ones(4)), np.ones(4), atol=1e-14)


def test_operator_single_row():
    op = build_sweep_operator([[1.0, 0.0]])
    assert_allclose(op.q, np.diag([0.0, 1.0]))
    assert_allclose(op.a_s_t[:, 0], [1.0, 0.0])
    assert_allclose(op.m_diag, [1.0])


def test_operator_duplicate_rows():
    op = build_sweep_operator([[1.0, 0.0], [1.0, 0.0]])
    assert_allclose(op.q, np.diag([0.0, 1.0]), atol=1e-15)


@pytest.mark.parametrize("block_size", [1, 2, 3, 64])
def test_operator_matches_projector_products(block_size):
    rng = np.random.default_rng(block_size)
    for _ in range(20):
        a, _ = random_system(rng)
        q, cols = projector_product(a)
        op = build_sweep_operator(a, block_size=block_size)
        assert np.max(np.abs(op.q - q)) <= 1e-12
        assert np.max(np.abs(op.a_s_t - cols)) <= 1e-12 * (1 + np.abs(cols).max())


def test_operator_invariants(mp1, mp1_op):
    assert sweep_identity_residual(mp1_op, mp1.a) <= 1e-10 * 4
    assert np.linalg.norm(mp1_op.q, 2) <= 1 + 1e-8
    assert np.all(mp1_op.row_norms_sq > 0)
    assert_allclose(mp1_op.m_diag, 1 / np.sum(mp1.a**2, axis=1))
    assert mp1_op.source_dims == (6, 4)
    with pytest.raises(ValueError):
        mp1_op.q[0, 0] = 2.0


def test_mp1_sigma_q(mp1_op):
    s = np.linalg.svd(mp1_op.q, compute_uv=False)
    assert abs(s[0] - 1.0000) <= 5e-4
    assert abs(s[1] - 0.7773) <= 5e-4


def test_sweep_operator_equivalence_random():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        a, b = random_system(rng)
        x = rng.standard_normal(a.shape[1])
        op = build_sweep_operator(a)
        diff = np.linalg.norm(kaczmarz_sweep(a, b, x) - op.apply(x, b))
        assert diff <= 1e-9 * (1 + np.linalg.norm(x) + np.linalg.norm(b))
        assert sweep_identity_residual(op, a) <= 1e-10 * a.shape[1]


def test_tanabe_trivial_cases(mp1, mp1_op):
    tr = tanabe_iterate(mp1_op, mp1.a, np.zeros(6), 5)
    assert np.all(tr.iterates == 0)
    xd = min_norm_solution(mp1.a, mp1.b)
    tr = tanabe_iterate(mp1_op, mp1.a, mp1.b, 20, y0=xd, reference=xd)
    assert np.max(tr.err_norms) <= 1e-10
    assert len(tr) == 21 and list(tr.k) == list(range(21))


def test_tanabe_mp1_convergence(mp1, mp1_op):
    tr = tanabe_iterate(mp1_op, mp1.a, mp1.b, 100)
    assert np.all(np.diff(tr.err_norms) <= 1e-15)
    assert tr.err_norms[-1] <= 1e-9
    assert_allclose(tr.reference, np.array([15, 10, 15, 10]) / 13, atol=1e-12)


def test_tanabe_k_max_zero(mp1, mp1_op):
    tr = tanabe_iterate(mp1_op, mp1.a, mp1.b, 0)
    assert len(tr) == 1
    assert tr.res_norms[0] == pytest.approx(np.linalg.norm(mp1.b))
    with pytest.raises(ValueError):
        tanabe_iterate(mp1_op, mp1.a, mp1.b, -1)


def test_tanabe_dimension_mismatch(mp1, mp1_op):
    with pytest.raises(ValueError):
        tanabe_iterate(mp1_op, mp1.a, np.ones(5), 3)
    with pytest.raises(ValueError):
        tanabe_iterate(mp1_op, mp1.a[:5], mp1.b[:5], 3)


def test_kaczmarz_trace_equals_tanabe_trace(mp1, mp1_op):
    bd, nb = perturb_uniform(mp1.b, 0.1)
    ref = reference_solution(mp1.a, mp1.b, np.zeros(4))
    kz = kaczmarz_iterate(mp1.a, bd, 50, reference=ref, perturbation_norm=nb)
    tn = tanabe_iterate(mp1_op, mp1.a, bd, 50, reference=ref, perturbation_norm=nb)
    assert np.max(np.abs(kz.err_norms - tn.err_norms)) <= 1e-9
    steps = kaczmarz_iterate(mp1.a, bd, 3, reference=ref, per_step=True)
    assert len(steps) == 3 * 6 + 1
    assert_allclose(steps.iterates[6::6], kz.iterates[1:4], atol=1e-12)


def test_residual_map_norm_examples(mp1, mp1_op):
    assert residual_map_norm(build_sweep_operator(np.eye(2)), np.eye(2)) == pytest.approx(0.0, abs=1e-15)
    a = np.array([[1.0, 2.0, -1.0]])
    assert residual_map_norm(build_sweep_operator(a), a) == pytest.approx(0.0, abs=1e-15)
    # explicit L = I - A A_S^T M and its SVD
    L = np.eye(6) - mp1.a @ (mp1_op.a_s_t / np.sum(mp1.a**2, axis=1))
    assert residual_map_norm(mp1_op, mp1.a) == pytest.approx(np.linalg.svd(L, compute_uv=False)[0])


def test_null_space_vectors_fixed(mp1, mp1_op):
    x = np.array([-2.0, 3.0, -2.0, 3.0])
    assert np.linalg.norm(mp1_op.q @ x - x) <= 1e-10 * np.linalg.norm(x)
    assert np.linalg.norm(mp1_op.q.T @ x - x) <= 1e-10 * np.linalg.norm(x)
    # A_S x = 0 for x in N(A)
    assert np.linalg.norm(mp1_op.a_s_t.T @ x) <= 1e-10 * np.linalg.norm(x)


@given(st.integers(0, 2**32 - 1))
def test_null_and_row_space_action(seed):
    rng = np.random.default_rng(seed)
    a, _ = random_system(rng, rank_deficient=True)
    op = build_sweep_operator(a)
    n = a.shape[1]
    x = null_projection(a, rng.standard_normal(n))
    nx = np.linalg.norm(x)
    assert np.linalg.norm(op.q @ x - x) <= 1e-10 * max(nx, 1e-300) + 1e-14
    assert np.linalg.norm(op.q.T @ x - x) <= 1e-10 * max(nx, 1e-300) + 1e-14
    z = rowspace_projection(a, rng.standard_normal(n))
    if np.linalg.norm(z) > 1e-8:
        z /= np.linalg.norm(z)
        rep = spectral_report(a, op)
        assert np.linalg.norm(op.q @ z) <= rep.sigma_second_q + 1e-8


@given(st.integers(0, 2**32 - 1), st.floats(0, 0.5))
def test_iterates_confined(seed, delta):
    rng = np.random.default_rng(seed)
    a, b = random_system(rng)
    y0 = rng.standard_normal(a.shape[1])
    op = build_sweep_operator(a)
    bd, nb = perturb_uniform(b, delta)
    tr = tanabe_iterate(op, a, bd, 15, y0=y0, reference=reference_solution(a, b, y0), perturbation_norm=nb)
    for y in tr.iterates:
        assert np.linalg.norm(null_projection(a, y - y0)) <= 1e-8 * (1 + np.linalg.norm(y))
    assert np.all(np.isfinite(tr.err_norms)) and np.all(tr.err_norms >= 0)


@given(st.integers(0, 2**32 - 1))
def test_exact_error_recurrence(seed):
    rng = np.random.default_rng(seed)
    a, _ = random_system(rng)
    b = a @ rng.standard_normal(a.shape[1])
    op = build_sweep_operator(a)
    tr = tanabe_iterate(op, a, b, 10, y0=rng.standard_normal(a.shape[1]))
    assert error_recurrence_defect(tr, op) <= 1e-8


def test_residual_energy_identity(mp1, mp1_op):
    # |r_{k+1}|^2 = |r_k|^2 - <(I - L^T L) r_k, r_k> holds for any L
    L = np.eye(6) - mp1.a @ mp1_op.asm
    bd, _ = perturb_uniform(mp1.b, 0.3)
    tr = tanabe_iterate(mp1_op, mp1.a, bd, 10)
    r = bd - tr.iterates @ mp1.a.T
    for k in range(10):
        pred = r[k] @ r[k] - r[k] @ ((np.eye(6) - L.T @ L) @ r[k])
        assert r[k + 1] @ r[k + 1] == pytest.approx(pred, rel=1e-10, abs=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.5))
def test_residual_monotone_when_contractive(seed, delta):
    rng = np.random.default_rng(seed)
    a, _ = random_system(rng, m=int(rng.integers(1, 6)))
    op = build_sweep_operator(a)
    if residual_map_norm(op, a) > 1:
        return
    b = a @ rng.standard_normal(a.shape[1])
    for rhs in (b, perturb_uniform(b, delta)[0]):
        tr = tanabe_iterate(op, a, rhs, 20, y0=rng.standard_normal(a.shape[1]))
        assert np.all(np.diff(tr.res_norms) <= 1e-10 * tr.res_norms[0])


def test_some_random_systems_are_contractive():
    rng = np.random.default_rng(5)
    hits = 0
    for _ in range(200):
        a, _ = random_system(rng, m=int(rng.integers(1, 6)))
        hits += residual_map_norm(build_sweep_operator(a), a) <= 1
    assert hits >= 20
