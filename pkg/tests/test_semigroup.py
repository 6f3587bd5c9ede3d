import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import block_diag

from opdyn import (
    CompactNet,
    LNotInvariant,
    NegativeTime,
    ScalarField,
    SemigroupSpec,
    SparseVector,
    UnboundedSemigroup,
    continuous_attraction_check,
    semigroup_at,
    theorem3_transfer,
    tilde_net,
)
from opdyn.orbits import default_unit_samples, point_set_distance, scaled_vector_net
from opdyn.semigroup import distance_to_span, sample
from opdyn.vectors import NormKind

e = SparseVector.basis


def rot_gen(w=1.0):
    return np.array([[0.0, -w], [w, 0.0]])


def mixed():
    return SemigroupSpec.from_generator(block_diag(rot_gen(), [[-1.0]]))


def test_zero_generator_gives_identity():
    S = SemigroupSpec.from_generator(np.zeros((3, 3)))
    for t in (0.0, 0.7, 42.0):
        np.testing.assert_array_equal(semigroup_at(S, t), np.eye(3))


@pytest.mark.parametrize("t", [0.1, 1.0, 3.3, 17.0])
def test_rotation_exponential_closed_form(t):
    w = 2.5
    S = SemigroupSpec.from_generator(rot_gen(w))
    c, s = math.cos(w * t), math.sin(w * t)
    np.testing.assert_allclose(semigroup_at(S, t), [[c, -s], [s, c]], atol=1e-12)


def test_decay_exponential():
    S = SemigroupSpec.from_generator([[-1.0]])
    assert semigroup_at(S, 1.0)[0, 0] == pytest.approx(math.exp(-1), rel=1e-15)


def test_negative_time_rejected():
    with pytest.raises(NegativeTime):
        semigroup_at(mixed(), -0.5)


def test_boundedness_certificate():
    assert mixed().bounded
    assert mixed().bound == pytest.approx(1.0)
    assert not SemigroupSpec.from_generator([[0.0, 1.0], [0.0, 0.0]]).bounded
    assert not SemigroupSpec.from_generator([[0.1]]).bounded


def test_unbounded_semigroup_has_no_tilde_net():
    S = SemigroupSpec.from_generator([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(UnboundedSemigroup):
        tilde_net(S, CompactNet([e(0)], 0.1))


# -- tilde net ----------------------------------------------------------------


def test_tilde_net_of_trivial_semigroup():
    S = SemigroupSpec.from_generator(np.zeros((2, 2)))
    K = CompactNet([e(0), e(1)], 0.05)
    Kt = tilde_net(S, K, 0.25)
    assert Kt.mesh == K.mesh
    assert {tuple(c.items()) for c in Kt.centers} == {tuple(c.items()) for c in K.centers}


def test_tilde_net_full_turn():
    dt = 1 / 64
    S = SemigroupSpec.from_generator(rot_gen(2 * math.pi))
    Kt = tilde_net(S, CompactNet([e(0)], 0.0), dt)
    assert len(Kt.centers) == math.ceil(1 / dt) + 1
    assert Kt.mesh == pytest.approx(2 * math.pi * dt)
    # cover check: resample t at dt/10
    for t in np.arange(0, 1, dt / 10):
        y = SparseVector.from_dense(semigroup_at(S, t) @ [1.0, 0.0])
        assert point_set_distance(y, Kt).lower == 0.0


def test_tilde_net_decay_cover():
    S = SemigroupSpec.from_generator([[-1.0]])
    K = CompactNet([e(0)], 0.01)
    Kt = tilde_net(S, K, 1 / 32)
    rng = np.random.default_rng(2)
    for t in rng.uniform(0, 1, 400):
        y0 = 1.0 + rng.uniform(-0.01, 0.01)
        y = SparseVector({0: math.exp(-t) * y0})
        assert point_set_distance(y, Kt).lower == 0.0


def test_tilde_net_bad_step():
    with pytest.raises(ValueError):
        tilde_net(mixed(), CompactNet([e(0)], 0.1), 0.0)


# -- continuous attraction --------------------------------------------------


def test_rotation_plane_attracts_at_real_times():
    S = mixed()
    x = SparseVector({0: 0.3, 1: -0.5, 2: 0.8})
    v = continuous_attraction_check(S, [e(0), e(1)], x, [10.3, 27.7, 99.5], tol=1e-4)
    assert v.converges
    for rec in v.distances:
        # the explicit solution leaves 0.8 e^{-t} e_3 off the plane
        assert rec["distance"] == pytest.approx(0.8 * math.exp(-rec["t"]), rel=1e-9, abs=1e-300)
        assert rec["distance"] <= math.exp(-10)
        assert rec["floor"] + rec["frac"] == pytest.approx(rec["t"])


def test_trivial_generator_whole_space():
    S = SemigroupSpec.from_generator(np.zeros((2, 2)))
    v = continuous_attraction_check(S, [e(0), e(1)], SparseVector({0: 0.6, 1: 0.8}), [1.5, 7.25])
    assert v.converges and v.max_tail_distance == 0.0


def test_wrong_plane_rejected():
    with pytest.raises(LNotInvariant):
        continuous_attraction_check(mixed(), [e(0), e(2)], e(0), [10.0])


def test_distance_to_span_norms():
    B = np.array([[1.0], [1.0]])
    v = np.array([1.0, 0.0])
    assert distance_to_span(v, B, NormKind.L2) == pytest.approx(math.sqrt(0.5))
    assert distance_to_span(v, B, NormKind.L1) == pytest.approx(1.0)
    assert distance_to_span(v, B, NormKind.SUP) == pytest.approx(0.5)


# -- invariants ---------------------------------------------------------------


def random_bounded_generator(seed):
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.2, 3.0)
    d = int(rng.integers(1, 3))
    A = rng.standard_normal((d, d))
    A = A - (np.max(np.linalg.eigvals(A).real) + rng.uniform(0.2, 1.0)) * np.eye(d)
    P = rng.standard_normal((d + 2, d + 2)) + 3 * np.eye(d + 2)
    return P @ block_diag(rot_gen(w), A) @ np.linalg.inv(P)


@given(st.integers(0, 10_000))
def test_semigroup_law_on_grid(seed):
    S = SemigroupSpec.from_generator(random_bounded_generator(seed))
    smp = sample(S, [0.25 * k for k in range(9)])
    assert smp.law_defect() <= 1e-9


@given(st.integers(0, 10_000), st.floats(0.0, 60.0))
def test_fractional_part_split(seed, t):
    S = SemigroupSpec.from_generator(random_bounded_generator(seed))
    whole = math.floor(t)
    lhs = semigroup_at(S, t)
    rhs = semigroup_at(S, whole) @ semigroup_at(S, t - whole)
    assert np.linalg.norm(lhs - rhs, 2) <= 1e-9 * max(np.linalg.norm(lhs, 2), 1.0)


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_transfer_consistency(seed):
    S = SemigroupSpec.from_generator(random_bounded_generator(seed))
    T1 = S.operator_at(1.0)
    k = SparseVector.from_dense(np.linalg.qr(S.generator)[0][:, 0])
    samples = default_unit_samples(T1, 2, seed)[-2:]
    # real times drawn from the same tail window [horizon/2, horizon] as the integer check
    K = scaled_vector_net(k, ScalarField.REAL, resolution=8)
    rep = theorem3_transfer(S, K, samples, [120.5, 187.25], horizon=200, tol=1e-4)
    if all(v.occasionally_attracted for v in rep.occasional):
        assert rep.dim_L == 2
        assert all(c.converges for c in rep.continuous)
