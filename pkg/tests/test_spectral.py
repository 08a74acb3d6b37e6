import warnings

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from entsaving.channels import (
    amplitude_damping,
    adjoint,
    apply,
    compose,
    depolarize_to,
    depolarizing,
    from_super,
    identity_channel,
    phi_minus,
    random_cptp,
    simple_aes,
    superop_distance,
    unitary_channel,
    validate_cptp,
)
from entsaving.matcore import dagger, haar_unitary, random_density
from entsaving.spectral import (
    SpectralWarning,
    cesaro_fixed_projector,
    fixed_basis,
    inverse_phase,
    max_fixed_point,
    peripheral_data,
    peripheral_projector,
    phase_basis,
    restrict_to_support,
    semipositive_fixed_point,
    spectrum,
)

ZERO = np.diag([1.0, 0.0]).astype(complex)


def values(rep):
    return np.concatenate([[c.value] * c.amult for c in rep.clusters])


def same_multiset(a, b, tol=1e-8):
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return False
    cost = np.abs(np.subtract.outer(a, b))
    i, j = linear_sum_assignment(cost)
    return cost[i, j].max() <= tol


def zrot(theta):
    return unitary_channel(np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)]))


def test_unitary_qubit_spectrum():
    th = 0.7
    rep = spectrum(zrot(th))
    assert same_multiset(values(rep), [1, 1, np.exp(1j * th), np.exp(-1j * th)])
    assert rep.n_peripheral == 4


def test_depolarize_to_spectrum():
    rep = spectrum(depolarize_to(random_density(3, np.random.default_rng(0))))
    assert same_multiset(values(rep), [1] + [0] * 8)
    assert rep.zero_amult == 8


def test_ad_spectrum():
    p = 0.3
    rep = spectrum(amplitude_damping(p))
    assert same_multiset(values(rep), [1, np.sqrt(p), np.sqrt(p), p])


def test_spectrum_conjugation_symmetric():
    rep = spectrum(random_cptp(3, 2, 5))
    v = values(rep)
    assert same_multiset(v, np.conj(v), 1e-12)


def test_peripheral_projector_examples():
    U = haar_unitary(3, np.random.default_rng(1))
    assert superop_distance(peripheral_projector(unitary_channel(U)), identity_channel(3)) < 1e-9
    E = peripheral_projector(amplitude_damping(0.4))
    assert superop_distance(E, depolarize_to(ZERO)) < 1e-10
    E = peripheral_projector(phi_minus(0.5, 0.0))
    assert np.linalg.matrix_rank(E.super, 1e-8) == 2


def test_inverse_phase_examples():
    U = haar_unitary(2, np.random.default_rng(2))
    phi = unitary_channel(U)
    assert superop_distance(inverse_phase(phi), unitary_channel(dagger(U))) < 1e-9
    phi = random_cptp(3, 2, 6)
    E = peripheral_projector(phi)
    assert superop_distance(inverse_phase(E), E) < 1e-9
    phi = phi_minus(0.5, 0.0)
    E, I = peripheral_projector(phi), inverse_phase(phi)
    assert superop_distance(compose(I, phi), E) < 1e-10
    # the -1 phase is flipped, so I is not E itself
    assert superop_distance(I, E) > 0.1


def test_cesaro_examples():
    assert superop_distance(cesaro_fixed_projector(identity_channel(2)), identity_channel(2)) < 1e-12
    with warnings.catch_warnings():
        warnings.simplefilter("error", SpectralWarning)
        phi_inf = cesaro_fixed_projector(amplitude_damping(0.5))
    assert superop_distance(phi_inf, depolarize_to(ZERO)) < 1e-10
    phi_inf = cesaro_fixed_projector(phi_minus(0.5, 0.0))
    assert superop_distance(phi_inf, depolarize_to(np.eye(2) / 2)) < 1e-10


def test_max_fixed_point_examples():
    assert np.allclose(max_fixed_point(amplitude_damping(0.2)), ZERO, atol=1e-10)
    assert np.allclose(max_fixed_point(depolarizing(0.5, 3)), np.eye(3) / 3, atol=1e-10)
    sigma = random_density(3, np.random.default_rng(3))
    assert np.allclose(max_fixed_point(depolarize_to(sigma)), sigma, atol=1e-10)


def test_semipositive_fixed_point_examples():
    rho = semipositive_fixed_point(amplitude_damping(0.3))
    assert rho is not None and np.allclose(rho, ZERO, atol=1e-9)
    assert semipositive_fixed_point(depolarize_to(np.eye(2) / 2)) is None
    # degenerate unitary: two independent fixed points
    U = np.diag([1, 1, np.exp(0.4j)])
    rho = semipositive_fixed_point(unitary_channel(U))
    assert rho is not None
    assert np.linalg.eigvalsh(rho)[0] <= 1e-9
    assert np.allclose(U @ rho @ dagger(U), rho, atol=1e-9)


def test_restrict_examples():
    phi = random_cptp(3, 3, 1)
    res = restrict_to_support(phi)
    assert res.basis.shape[1] == 3
    # with full support the restriction is a change of basis
    V = res.basis
    X = random_density(3, np.random.default_rng(2))
    assert np.allclose(V @ apply(res.channel, dagger(V) @ X @ V) @ dagger(V), apply(phi, X), atol=1e-10)
    res = restrict_to_support(amplitude_damping(0.5))
    assert res.basis.shape[1] == 1
    assert np.allclose(res.channel.super, [[1]])
    phi = simple_aes([(2, 1, 1)], d=4, basis=haar_unitary(4, np.random.default_rng(7)))
    assert restrict_to_support(phi).basis.shape[1] == 2


def test_phase_basis_examples():
    pb = phase_basis(zrot(0.9))
    assert pb.dim == 4 and pb.residual < 1e-10
    assert same_multiset(pb.eigphases, [1, 1, np.exp(0.9j), np.exp(-0.9j)])
    pb = phase_basis(amplitude_damping(0.5))
    assert pb.dim == 1
    M = pb.matrices[0]
    assert np.allclose(M / np.trace(M), ZERO, atol=1e-10)
    pb = phase_basis(phi_minus(0.5, 0.0))
    assert pb.dim == 2
    assert same_multiset(pb.eigphases, [1, -1])
    Z = pb.matrices[1] if abs(pb.eigphases[1] + 1) < 1e-8 else pb.matrices[0]
    assert abs(np.trace(Z)) < 1e-9
    assert np.allclose(Z / Z[0, 0], np.diag([1, -1]), atol=1e-9)


def test_gap_fallback_warns():
    # contraction 1 - 5e-7 is not peripheral but sits inside the minimum gap
    phi = depolarizing(1 - 5e-7, 2)
    with pytest.warns(SpectralWarning):
        pd = peripheral_data(phi)
    assert pd.method == "aligned_powers"
    # squaring up to N ~ 5e7 costs about N * eps in round-off
    assert superop_distance(from_super(pd.P), depolarize_to(np.eye(2) / 2)) < 1e-8
    assert peripheral_data(zrot(2 * np.pi / 3)).method == "spectral"


@pytest.mark.parametrize("d", [2, 3])
def test_spectral_laws_on_random_channels(d):
    rng = np.random.default_rng(d)
    for k in range(50):
        phi = random_cptp(d, int(rng.integers(1, d * d + 1)), 500 * d + k)
        rep = spectrum(phi)
        assert rep.contraction_ok and rep.peripheral_jordan_trivial
        rho = max_fixed_point(phi)
        assert np.linalg.eigvalsh(rho)[0] >= -1e-9
        assert np.allclose(apply(phi, rho), rho, atol=1e-9)
        w, V = np.linalg.eig(phi.super)
        for lam, v in zip(w, V.T):
            if abs(lam - 1) > 1e-6:
                Z = v.reshape(d, d, order="F")
                assert abs(np.trace(Z)) <= 1e-8 * np.linalg.norm(Z)


@pytest.mark.filterwarnings("ignore::entsaving.spectral.SpectralWarning")
def test_projectors_are_cptp():
    for k in range(10):
        phi = random_cptp(2 + k % 2, 1 + k % 4, 40 + k)
        for ch in (peripheral_projector(phi), inverse_phase(phi), cesaro_fixed_projector(phi)):
            v = validate_cptp(ch)
            assert v.cp and v.tp


def test_positive_part_of_fixed_point_is_fixed():
    U = np.diag([1, 1, 1j])
    phi = unitary_channel(U)
    basis = fixed_basis(phi)
    assert len(basis) >= 2
    rng = np.random.default_rng(0)
    X = sum(rng.standard_normal() * B for B in basis)
    w, V = np.linalg.eigh(X)
    Xp = (V * np.maximum(w, 0)) @ dagger(V)
    assert np.linalg.norm(apply(phi, Xp) - Xp) <= 1e-8


def test_fixed_points_of_adjoint_form_algebra():
    # unital channel with a strictly positive adjoint fixed point: fixed points close under products
    blocks = [(2, 1, 1), (1, 1, 1)]
    phi = simple_aes(blocks, [haar_unitary(2, np.random.default_rng(1)), np.eye(1)])
    fb = fixed_basis(adjoint(phi))
    Q = np.column_stack([B.ravel() for B in fb])
    Q, _ = np.linalg.qr(Q)
    worst = 0.0
    for A in fb:
        for B in fb:
            x = (A @ B).ravel()
            worst = max(worst, np.linalg.norm(x - Q @ (Q.conj().T @ x)))
    assert worst <= 1e-7
