import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entsaving.matcore import (
    Tolerances,
    cluster_values,
    eig_full,
    haar_unitary,
    partial_trace,
    partial_transpose,
    psd_utils,
    random_density,
    schatten_norm,
    spectral_projector,
    unvec,
    vec,
)


def bell(d=2):
    e = np.zeros(d * d)
    for i in range(d):
        e[i * d + i] = 1
    e /= np.sqrt(d)
    return np.outer(e, e).astype(complex)


def cgauss(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_vec_is_column_stacking():
    X = np.array([[1, 2], [3, 4]])
    assert np.array_equal(vec(X), [1, 3, 2, 4])
    assert np.array_equal(unvec(vec(X)), X)


def test_tolerances_must_be_positive():
    with pytest.raises(ValueError):
        Tolerances(pos=0.0)
    assert Tolerances().as_dict()["pos"] == 1e-9


def test_eig_identity_single_cluster():
    es = eig_full(np.eye(3))
    assert len(es.clusters) == 1
    c = es.clusters[0]
    assert abs(c.value - 1) < 1e-12 and c.amult == 3 and c.gmult == 3


def test_eig_diagonal_clusters():
    es = eig_full(np.diag([1.0, 0.5, 0.5]))
    got = sorted((round(c.value.real, 9), c.amult, c.gmult) for c in es.clusters)
    assert got == [(0.5, 2, 2), (1.0, 1, 1)]


def test_eig_jordan_block():
    es = eig_full(np.array([[0.5, 1.0], [0.0, 0.5]]))
    (c,) = es.clusters
    assert abs(c.value - 0.5) < 1e-7 and c.amult == 2 and c.gmult == 1


def test_cluster_values_chain():
    groups = cluster_values(np.array([0.0, 1e-9, 2e-9, 1.0]), 1.5e-9)
    assert sorted(map(len, groups)) == [1, 3]


@pytest.mark.parametrize("seed", range(10))
def test_eig_reconstruction(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    A = cgauss(rng, n, n)
    es = eig_full(A)
    assert sum(c.amult for c in es.clusters) == n
    V = es.right_vectors
    for k in range(n):
        assert np.linalg.norm(A @ V[:, k] - es.values[k] * V[:, k]) <= 1e-8 * np.linalg.norm(A, 2)


def test_spectral_projector_is_idempotent():
    rng = np.random.default_rng(3)
    A = cgauss(rng, 6, 6)
    P, Q, B = spectral_projector(A, lambda z: abs(z) > 1.5)
    assert np.allclose(P @ P, P, atol=1e-9)
    assert np.allclose(A @ P, P @ A, atol=1e-8)
    w = np.linalg.eigvals(A)
    assert Q.shape[1] == np.sum(np.abs(w) > 1.5)


def test_schatten_examples():
    assert schatten_norm(np.eye(4), 1) == pytest.approx(4)
    U = haar_unitary(5, np.random.default_rng(0))
    assert schatten_norm(U, np.inf) == pytest.approx(1)
    # A^dag A = [[1,1],[1,2]] has trace 3
    assert schatten_norm(np.array([[1, 1], [0, 1]]), 2) == pytest.approx(np.sqrt(3))


def test_schatten_bounds_eigenvalues():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(2, 6))
        A = cgauss(rng, n, n)
        assert schatten_norm(A, 1) >= np.sum(np.abs(np.linalg.eigvals(A))) - 1e-10


def test_partial_transpose_examples():
    rng = np.random.default_rng(1)
    a, b = random_density(2, rng), random_density(3, rng)
    assert np.allclose(partial_transpose(np.kron(a, b), 2, 3), np.kron(a, b.T))
    ev = np.linalg.eigvalsh(partial_transpose(bell(), 2, 2))
    assert np.allclose(ev, [-0.5, 0.5, 0.5, 0.5])
    D = np.diag(rng.random(6)).astype(complex)
    assert np.array_equal(partial_transpose(D, 2, 3), D)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 2 ** 31))
def test_partial_transpose_involution(dA, dB, seed):
    R = cgauss(np.random.default_rng(seed), dA * dB, dA * dB)
    assert np.array_equal(partial_transpose(partial_transpose(R, dA, dB), dA, dB), R)


def test_partial_trace_examples():
    rng = np.random.default_rng(2)
    a, b = random_density(2, rng), random_density(3, rng)
    assert np.allclose(partial_trace(np.kron(a, 2 * b), 2, 3, "second"), 2 * a)
    assert np.allclose(partial_trace(bell(), 2, 2, "first"), np.eye(2) / 2)
    for side in ("first", "second"):
        assert np.allclose(partial_trace(np.eye(4) / 4, 2, 2, side), np.eye(2) / 2)


def test_psd_utils_examples():
    info = psd_utils(np.eye(3))
    assert info.min_eig == pytest.approx(1) and info.rank == 3
    assert np.allclose(info.sqrt, np.eye(3))
    info = psd_utils(np.diag([4.0, 0.0]))
    assert np.allclose(info.sqrt, np.diag([2, 0]))
    assert np.allclose(info.inv_sqrt_on_support, np.diag([0.5, 0]))
    assert info.rank == 1
    info = psd_utils(np.diag([1.0, -1e-15]), tol=1e-12)
    assert info.rank == 1 and info.min_eig == 0.0


def test_psd_utils_rejects_non_hermitian():
    with pytest.raises(ValueError):
        psd_utils(np.array([[1.0, 1.0], [0.0, 1.0]]))
    # indefinite input is reported, not rejected
    assert psd_utils(np.diag([1.0, -0.1])).min_eig == pytest.approx(-0.1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2 ** 31))
def test_psd_sqrt_squares_back(d, seed):
    rng = np.random.default_rng(seed)
    A = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
    S = psd_utils(A).sqrt
    assert np.linalg.norm(S @ S - A) <= 1e-9 * np.linalg.norm(A)
