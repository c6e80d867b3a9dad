import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nsfinsler.errors import InvalidInput
from nsfinsler.linalg import (DEFAULT_TOL, Definiteness, ToleranceProfile, as_symmetric, complement_basis,
                              definiteness_class, is_nsd, is_psd, kernel_basis, lambda_max, lambda_min,
                              numerical_rank, pseudoinverse, schur_psd_check, spectral_decompose)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def symmetric(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    A = draw(arrays(np.float64, (n, n), elements=finite))
    return 0.5 * (A + A.T)


@st.composite
def low_rank(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(0, n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n + 1, k)) @ rng.standard_normal((k, n)), k


def test_tolerance_profile_validation():
    assert DEFAULT_TOL.psd_tol == 1e-9
    with pytest.raises(InvalidInput):
        ToleranceProfile(psd_tol=-1.0)
    with pytest.raises(InvalidInput):
        ToleranceProfile(psd_tol=1e-7, strict_margin=1e-8)
    assert DEFAULT_TOL.replace(rank_tol=1e-6).rank_tol == 1e-6


def test_as_symmetric_rejects_asymmetric_and_nonfinite():
    with pytest.raises(InvalidInput):
        as_symmetric([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(InvalidInput):
        as_symmetric([[np.nan]])
    with pytest.raises(InvalidInput):
        as_symmetric(np.zeros((2, 3)))
    S = as_symmetric([[1.0, 2.0 + 1e-12], [2.0, 1.0]])
    assert np.array_equal(S, S.T)
    assert not S.flags.writeable


@settings(max_examples=60, deadline=None)
@given(symmetric())
def test_spectral_reconstruction(A):
    dec = spectral_decompose(A)
    scale = 1.0 + np.max(np.abs(A))
    assert np.allclose(dec.reconstruct(), A, atol=1e-12 * scale * A.shape[0])
    assert np.allclose(dec.eigenvectors.T @ dec.eigenvectors, np.eye(A.shape[0]), atol=1e-12)
    assert np.all(np.diff(dec.eigenvalues) >= 0)


@settings(max_examples=60, deadline=None)
@given(low_rank())
def test_rank_nullity(case):
    A, k = case
    r = numerical_rank(A)
    K = kernel_basis(A)
    assert r == k
    assert r + K.shape[1] == A.shape[1]
    assert np.linalg.norm(A @ K) <= 1e-9 * (1.0 + np.linalg.norm(A))
    assert np.allclose(K.T @ K, np.eye(K.shape[1]), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(symmetric(), st.integers(0, 2**32 - 1))
def test_definiteness_permutation_invariant(A, seed):
    perm = np.random.default_rng(seed).permutation(A.shape[0])
    P = np.eye(A.shape[0])[perm]
    assert definiteness_class(A) == definiteness_class(P @ A @ P.T)


@settings(max_examples=60, deadline=None)
@given(low_rank())
def test_penrose_identities(case):
    A, _ = case
    X = pseudoinverse(A)
    s = 1.0 + np.linalg.norm(A) * np.linalg.norm(X)
    assert np.allclose(A @ X @ A, A, atol=1e-9 * s)
    assert np.allclose(X @ A @ X, X, atol=1e-9 * s * (1 + np.linalg.norm(X)))
    assert np.allclose((A @ X).T, A @ X, atol=1e-9 * s)
    assert np.allclose((X @ A).T, X @ A, atol=1e-9 * s)


def test_definiteness_classes():
    assert definiteness_class(np.diag([1.0, 0.0])) is Definiteness.PSD
    assert definiteness_class(np.diag([-1.0, 0.0])) is Definiteness.NSD
    assert definiteness_class(np.diag([1.0, -1.0])) is Definiteness.INDEFINITE
    assert definiteness_class(np.zeros((3, 3))) is Definiteness.ZERO
    assert not Definiteness.INDEFINITE.semidefinite


def test_psd_helpers():
    assert is_psd(np.diag([1.0, 0.0]))
    assert not is_psd(np.diag([1.0, -1e-3]))
    assert is_psd(np.diag([1.0, -1e-12]))
    assert is_nsd(np.diag([-2.0, 0.0]))
    assert lambda_min(np.diag([3.0, -2.0])) == -2.0
    assert lambda_max(np.diag([3.0, -2.0])) == 3.0
    assert is_psd(np.zeros((0, 0))).holds


def test_kernel_and_complement():
    B = kernel_basis(np.array([[1.0, 1.0]]))
    assert B.shape == (2, 1)
    assert np.allclose(abs(B[:, 0]), [2 ** -0.5] * 2)
    C = complement_basis(B)
    assert np.allclose(abs(C[:, 0]), [2 ** -0.5] * 2) and abs(B[:, 0] @ C[:, 0]) < 1e-15
    assert kernel_basis(np.eye(3)).shape == (3, 0)


def test_schur_failure_tags():
    assert schur_psd_check(np.eye(1), np.zeros((1, 1)), np.eye(1))
    assert schur_psd_check(np.eye(1), np.zeros((1, 1)), -np.eye(1)).failed == "R-psd"
    assert schur_psd_check(np.eye(1) * 0.5, np.ones((1, 1)), np.eye(1)).failed == "complement-psd"
    assert schur_psd_check(np.eye(1), np.ones((1, 1)), np.zeros((1, 1))).failed == "range"


def test_schur_matches_block_psd_on_random_instances():
    rng = np.random.default_rng(2024)
    for trial in range(1000):
        p, q = rng.integers(1, 4, size=2)
        n = p + q
        k = rng.integers(0, n + 1)
        R = rng.standard_normal((k, n))
        A = R.T @ R
        if trial % 3 == 0:
            A = A - rng.uniform(0, 1) * np.eye(n) * (trial % 2)
        if trial % 5 == 0:
            # Zero out a diagonal block corner to exercise the range condition.
            A[p:, p:] = 0.0
        A = 0.5 * (A + A.T)
        Q, S, Rb = A[:p, :p], A[:p, p:], A[p:, p:]
        assert bool(schur_psd_check(Q, S, Rb)) == bool(is_psd(A)), trial
