import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from schouten_lab import symfun
from schouten_lab.errors import ArgumentError

D = np.diag


def sym_matrices(n_min=2, n_max=6):
    def build(args):
        n, data = args
        G = np.asarray(data).reshape(n, n)
        return 0.5 * (G + G.T)

    return st.integers(n_min, n_max).flatmap(
        lambda n: st.tuples(st.just(n), hnp.arrays(
            float, n * n, elements=st.floats(-3, 3, allow_nan=False)))).map(build)


# --------------------------------------------------------------- examples

def test_sigma_examples():
    assert symfun.sigma(np.eye(4), 2) == pytest.approx(6.0)
    assert symfun.sigma(D([1, 1, 1, -0.9]), 2) == pytest.approx(0.3)
    assert symfun.sigma(D([2, 1, 0, -1]), 1) == pytest.approx(2.0)


@pytest.mark.parametrize("k", [0, 5, -1])
def test_sigma_order_errors(k):
    with pytest.raises(ArgumentError):
        symfun.sigma(np.eye(4), k)


def test_asymmetric_input_rejected():
    M = np.array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ArgumentError):
        symfun.as_sym(M)
    with pytest.raises(ArgumentError):
        symfun.cone_membership(M, 1)


def test_newton_transform_examples():
    np.testing.assert_allclose(symfun.newton_transform(np.eye(4), 1), 3 * np.eye(4))
    np.testing.assert_allclose(symfun.newton_transform(np.eye(4), 3), np.eye(4), atol=1e-14)
    np.testing.assert_allclose(symfun.newton_transform(D([1, 1, 1, -0.9]), 1),
                               D([1.1, 1.1, 1.1, 3.0]), atol=1e-14)


def test_newton_transform_of_identity_is_binomial():
    for n in range(2, 7):
        for k in range(0, n):
            np.testing.assert_allclose(symfun.newton_transform(np.eye(n), k),
                                       math.comb(n - 1, k) * np.eye(n), atol=1e-12)


def test_cone_membership_examples():
    rep = symfun.cone_membership(D([1, 1, 1, -0.9]), 2)
    assert rep.inside
    assert rep.margin == pytest.approx(0.3)
    assert rep.sigmas == pytest.approx([2.1, 0.3])
    assert not symfun.cone_membership(D([1, 1, 1, -1.0]), 2).inside
    assert symfun.cone_membership(np.eye(4), 4).inside


def test_pair_examples():
    e1 = np.zeros(4)
    e1[0] = 1
    e4 = np.zeros(4)
    e4[3] = 1
    assert symfun.pair(3 * np.eye(4), np.eye(4)) == pytest.approx(12)
    assert symfun.pair(3 * np.eye(4), np.outer(e1, e1)) == pytest.approx(3)
    T = symfun.newton_transform(D([1, 1, 1, -0.9]), 1)
    assert symfun.pair(T, np.outer(e4, e4)) == pytest.approx(3.0)
    with pytest.raises(ArgumentError):
        symfun.pair(np.eye(3), np.eye(4))


def test_rank_one_examples():
    e1 = np.eye(4)[0]
    assert symfun.rank_one_defects(np.eye(4), e1, 2) == pytest.approx((0, 0), abs=1e-14)
    assert symfun.rank_one_defects(np.eye(4), np.zeros(4), 2) == pytest.approx((0, 0), abs=1e-14)
    assert symfun.sigma(D([0, 1, 1, 1]), 2) == pytest.approx(3.0)


def test_rank_one_on_cone_sample(rng):
    from schouten_lab import certify

    A = certify.sample_cone(certify.SampleSpec(n=4, k=2, seed=3))
    X = rng.standard_normal(4)
    d1, d2 = symfun.rank_one_defects(A, X, 2)
    assert d1 < 1e-10 and d2 < 1e-10


def test_batched_matches_single(rng):
    A = rng.standard_normal((5, 4, 4))
    A = A + np.swapaxes(A, -1, -2)
    batch = symfun.sigma(A, 2)
    single = [symfun.sigma(a, 2) for a in A]
    np.testing.assert_allclose(batch, single, rtol=1e-13)


# --------------------------------------------------------------- properties

@given(sym_matrices())
def test_recursion_matches_eigenvalues(A):
    n = A.shape[0]
    scale = max(1.0, np.abs(np.linalg.eigvalsh(A)).max()) ** n
    for k in range(1, n + 1):
        assert abs(symfun.sigma(A, k) - symfun.sigma_eig(A, k)) <= 1e-11 * scale


@given(sym_matrices())
def test_T1_pairing_is_twice_sigma2(A):
    lhs = symfun.pair(symfun.newton_transform(A, 1), A)
    assert lhs == pytest.approx(2 * symfun.sigma(A, 2), abs=1e-10 * (1 + np.sum(A * A)))


@given(sym_matrices())
def test_sigma2_trace_formula(A):
    s1 = np.trace(A)
    assert symfun.sigma(A, 2) == pytest.approx(0.5 * (s1 ** 2 - np.sum(A * A)),
                                               abs=1e-10 * (1 + np.sum(A * A)))


@given(sym_matrices(), st.floats(0.1, 5.0))
def test_homogeneity(A, lam):
    n = A.shape[0]
    for k in range(1, n + 1):
        assert symfun.sigma(lam * A, k) == pytest.approx(
            lam ** k * symfun.sigma(A, k), rel=1e-9, abs=1e-9 * (1 + lam) ** n * 3.0 ** n)


@given(st.integers(0, 2 ** 32 - 1), st.integers(3, 6))
def test_newton_transform_positive_on_cone(seed, n):
    from schouten_lab import certify

    for k in range(1, n):
        A = certify.sample_cone(certify.SampleSpec(n=n, k=k + 1, seed=seed))
        ev = np.linalg.eigvalsh(symfun.newton_transform(A, k))
        assert ev.min() > 0


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 1.0))
def test_cone_is_convex(seed, lam):
    from schouten_lab import certify

    spec = certify.SampleSpec(n=5, k=3, seed=seed)
    A = certify.sample_cone(spec)
    B = certify.sample_cone(certify.SampleSpec(n=5, k=3, seed=seed + 1))
    assert symfun.in_cone(lam * A + (1 - lam) * B, 3)


def test_cone_quality_is_one_at_identity():
    for n in (3, 4, 6):
        for k in range(1, n + 1):
            assert symfun.cone_quality(np.eye(n), k) == pytest.approx(1.0)
