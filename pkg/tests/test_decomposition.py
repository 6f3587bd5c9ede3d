import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import block_diag

from opdyn import (
    DenseMatrix,
    DirectSum,
    FieldMismatch,
    NotFiniteDimensional,
    NotPowerBounded,
    ReturningCertificate,
    RotationBlock,
    ScalarField,
    SparseVector,
    WeightedShift,
    asymptotic_project,
    diag,
    real_quadratic_witness,
    rescale,
    rescaled_norm,
    vu_sine_decompose,
)
from opdyn.decomposition import GapWarning, rotation_identity_residual, verify_returning_basis
from opdyn.operators import apply

e = SparseVector.basis


def rot(a):
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def conjugated(seed=7):
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((4, 4)) + 2 * np.eye(4)
    core = block_diag(rot(1.0), np.diag([0.9, 0.5]))
    return P, core, DenseMatrix(P @ core @ np.linalg.inv(P))


def test_diagonal_split():
    D = vu_sine_decompose(diag(1.0, 0.5))
    assert D.dim_L == 1 and D.dim_X0 == 1
    np.testing.assert_allclose(D.projector, np.diag([1.0, 0.0]), atol=1e-12)
    assert abs(D.L_basis[0][0]) == pytest.approx(1.0)


def test_rotation_plus_decay_dimensions():
    D = vu_sine_decompose(DirectSum([RotationBlock(2 * math.pi / 7), diag(0.3, 0.2)]))
    assert (D.dim_L, D.dim_X0) == (2, 2)


def test_conjugated_ground_truth():
    P, _, T = conjugated()
    D = vu_sine_decompose(T)
    assert D.dim_L == 2
    A_true = P @ np.diag([1.0, 1.0, 0.0, 0.0]) @ np.linalg.inv(P)
    np.testing.assert_allclose(D.projector, A_true, atol=1e-9 * np.linalg.cond(P))
    # recovered L equals P applied to the rotation plane
    plane = P[:, :2]
    L = D.L_matrix()
    residual = plane - L @ np.linalg.lstsq(L, plane, rcond=None)[0]
    assert np.linalg.norm(residual) < 1e-9


def test_jordan_block_rejected():
    with pytest.raises(NotPowerBounded):
        vu_sine_decompose(DenseMatrix([[1, 1], [0, 1]]))


def test_shift_has_no_finite_decomposition():
    with pytest.raises(NotFiniteDimensional):
        vu_sine_decompose(WeightedShift())


def test_gap_warning():
    with pytest.warns(GapWarning):
        vu_sine_decompose(diag(1.0, 1 - 1e-7), tol=1e-9)


def test_projector_algebra():
    _, _, T = conjugated()
    D = vu_sine_decompose(T)
    A, M = D.projector, T.matrix()
    assert np.linalg.norm(A @ A - A) < 1e-9
    assert np.linalg.norm(M @ A - A @ M) < 1e-9


def test_L_basis_vectors_are_returning():
    _, _, T = conjugated()
    D = vu_sine_decompose(T)
    # near-exact returns sit at multiples of 710; three need a horizon past 2130
    certs = verify_returning_basis(D, rescale(T, 200), tol=1e-2, horizon=5000)
    assert all(isinstance(c, ReturningCertificate) for c in certs)


def test_project_vector_in_X0():
    T = diag(1.0, 0.5)
    rep = asymptotic_project(vu_sine_decompose(T), T, e(1))
    assert rep.a.is_zero()


def test_project_by_linearity():
    T = diag(1.0, 0.5)
    rep = asymptotic_project(vu_sine_decompose(T), T, SparseVector({0: 1.0, 1: 1.0}))
    assert rep.a.allclose(e(0), 1e-12)
    assert rep.locally_optimal


def test_project_conjugated_tail():
    _, _, T = conjugated()
    D = vu_sine_decompose(T)
    x = SparseVector.from_dense(np.random.default_rng(3).standard_normal(4))
    rep = asymptotic_project(D, T, x, horizon=200)
    np.testing.assert_allclose(rep.a.to_dense(4), D.projector @ x.to_dense(4), atol=1e-12)
    assert rep.tail_residual < 1e-6
    assert rep.locally_optimal


def test_decay_rate_bound():
    _, _, T = conjugated()
    D = vu_sine_decompose(T)
    assert D.rate < 1
    n = np.arange(D.decay_per_basis.shape[0])
    assert np.all(D.decay_per_basis.max(axis=1) <= D.constant * D.rate**n * (1 + 1e-9))


# -- real quadratic witness ------------------------------------------------


def test_rotation_third_of_pi():
    w = real_quadratic_witness(RotationBlock(math.pi / 3))
    assert w.r == pytest.approx(-1.0, abs=1e-15)
    assert w.s == pytest.approx(1.0, abs=1e-15)
    assert np.linalg.norm(w.polynomial(RotationBlock(math.pi / 3).matrix())) < 1e-15


def test_diagonal_witness():
    w = real_quadratic_witness(diag(2.0, 3.0))
    # largest modulus eigenvalue 3: (t - 3)^2
    assert (w.r, w.s) == (-6.0, 9.0)
    assert w.singularity == 0.0


def test_selected_eigenvalue_two():
    w = real_quadratic_witness(diag(2.0, -1.0))
    assert (w.r, w.s) == (-4.0, 4.0)
    np.testing.assert_allclose(w.polynomial(np.diag([2.0, -1.0])), np.diag([0.0, 9.0]))


def test_random_five_by_five():
    M = np.random.default_rng(0x5EED).standard_normal((5, 5))
    w = real_quadratic_witness(DenseMatrix(M))
    assert w.singularity < 1e-8 * np.linalg.norm(M, 2) ** 2
    # oracle: lambda = -r/2 +- i sqrt(s - r^2/4) must be an eigenvalue of M
    re = -w.r / 2
    im = np.sqrt(max(w.s - re**2, 0.0))
    eigs = np.linalg.eigvals(M)
    assert min(abs(eigs - complex(re, im))) < 1e-12 * np.linalg.norm(M, 2)


def test_complex_operator_rejected():
    with pytest.raises(FieldMismatch):
        real_quadratic_witness(diag(1j, field=ScalarField.COMPLEX))


@pytest.mark.parametrize("alpha", np.linspace(0.05, math.pi - 0.05, 9))
def test_rotation_identity(alpha):
    assert rotation_identity_residual(alpha) <= 1e-12


# -- invariants -------------------------------------------------------------


def random_power_bounded(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(0, 3))
    d0 = int(rng.integers(1, 4))
    blocks = []
    if k:
        blocks.append(rot(rng.uniform(0.1, 3.0)) if k == 2 else np.array([[1.0]]))
    C = rng.standard_normal((d0, d0))
    C *= rng.uniform(0.1, 0.9) / max(np.max(np.abs(np.linalg.eigvals(C))), 1e-12)
    blocks.append(C)
    core = block_diag(*blocks)
    P = rng.standard_normal(core.shape) + 3 * np.eye(core.shape[0])
    return k, DenseMatrix(P @ core @ np.linalg.inv(P))


@given(st.integers(0, 10_000), st.integers(0, 40))
def test_linearity_split_of_powers(seed, n):
    _, T = random_power_bounded(seed)
    D = vu_sine_decompose(T)
    M = T.matrix()
    x = np.random.default_rng(seed + 1).standard_normal(D.dim)
    Tn = np.linalg.matrix_power(M, n)
    Ax = D.projector @ x
    assert np.linalg.norm(Tn @ x - (Tn @ Ax + Tn @ (x - Ax))) <= 1e-12 * (1 + np.linalg.norm(Tn @ x))


@given(st.integers(0, 10_000))
def test_dim_L_matches_eigenvalue_count(seed):
    k, T = random_power_bounded(seed)
    D = vu_sine_decompose(T)
    oracle = int(np.sum(np.abs(np.linalg.eigvals(T.matrix())) >= 1 - 1e-9))
    assert D.dim_L == oracle == k


@given(st.integers(0, 10_000))
def test_isometric_on_L_in_rescaled_norm(seed):
    k, T = random_power_bounded(seed)
    D = vu_sine_decompose(T)
    if not D.dim_L:
        return
    c = np.random.default_rng(seed).standard_normal(D.dim_L)
    b = SparseVector.from_dense(D.L_matrix() @ c)
    # restricted to L the orbit is periodic-like; the sup needs a long window
    r0 = rescaled_norm(T, b, 2000)
    r1 = rescaled_norm(T, apply(T, b), 2000)
    assert abs(r1 - r0) <= 1e-3 * r0


@given(st.integers(0, 10_000))
def test_witness_under_similarity(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 7))
    M = rng.standard_normal((d, d))
    P = rng.standard_normal((d, d)) + 2 * np.eye(d)
    w = real_quadratic_witness(DenseMatrix(M))
    w2 = real_quadratic_witness(DenseMatrix(P @ M @ np.linalg.inv(P)))
    scale = np.linalg.norm(M, 2) ** 2
    assert w2.singularity <= np.linalg.cond(P) ** 2 * max(w.singularity, 1e-15 * scale) * 1e3
