import numpy as np
import pytest

from corpus import depolarizing_choi, holevo_with_pure_fixed_point, pt_second, qubit_corpus
from entsaving.channels import (
    adjoint,
    amplitude_damping,
    compose,
    depolarize_to,
    depolarizing,
    from_super,
    identity_channel,
    phi_plus,
    power,
    random_cptp,
    random_holevo,
    simple_aes,
    unitary_channel,
)
from entsaving.entwit import (
    EBStatus,
    eb_kernel_bound_check,
    eb_verdict,
    entangled_perturbation,
    negativity,
    perturbation_w_minor,
    ppt_min_eig,
    q_witness,
    qubit_eb_suite,
    reshuffling_norm,
    superop_kernel_dim,
)
from entsaving.matcore import DEFAULT_TOLS, Tolerances, haar_unitary, partial_transpose, random_density


def test_ppt_min_eig_examples():
    assert ppt_min_eig(identity_channel(2)) == pytest.approx(-0.5)
    # Choi of the completely depolarizing map is I/4, so the value is 1/4
    assert ppt_min_eig(depolarize_to(np.eye(2) / 2)) == pytest.approx(0.25)
    assert ppt_min_eig(amplitude_damping(0.5)) < 0


def test_ppt_against_loop_oracle():
    for lam in (0.2, 0.5, 0.9):
        R = depolarizing_choi(lam)
        expect = np.linalg.eigvalsh(pt_second(R))[0]
        assert ppt_min_eig(depolarizing(lam, 2)) == pytest.approx(expect, abs=1e-14)
        # (1 - 3 lam) / 4 by hand
        assert expect == pytest.approx((1 - 3 * lam) / 4)


def test_reshuffling_examples():
    for d in (2, 3, 4):
        U = haar_unitary(d, np.random.default_rng(d))
        assert reshuffling_norm(unitary_channel(U)) == pytest.approx(d * d)
        assert reshuffling_norm(depolarize_to(np.eye(d) / d)) <= d + 1e-12
    phi = simple_aes([(2, 1, 1), (1, 1, 1)], [haar_unitary(2, np.random.default_rng(0)), np.eye(1)])
    assert reshuffling_norm(phi) > 3


def test_eb_verdict_examples():
    assert eb_verdict(random_holevo(3, 3, seed=4)).status is EBStatus.EB
    assert eb_verdict(depolarizing(0.5, 2)).status is EBStatus.NOT_EB
    assert eb_verdict(power(depolarizing(0.5, 2), 2)).status is EBStatus.EB
    v = eb_verdict(identity_channel(3))
    assert v.status is EBStatus.NOT_EB
    assert v.evidence["reshuffling_norm"] == pytest.approx(9)


def test_eb_verdict_unknown_without_certificate():
    # a qutrit depolarizing map well inside the separable region, but no Holevo certificate
    v = eb_verdict(depolarizing(0.05, 3))
    assert v.status is EBStatus.UNKNOWN


def test_eb_verdict_sound_under_tolerance_jitter():
    for phi in qubit_corpus(40, 900):
        seen = set()
        for pos in (1e-9 - 1e-12, 1e-9, 1e-9 + 1e-12):
            seen.add(eb_verdict(phi, Tolerances(pos=pos)).status)
        if abs(ppt_min_eig(phi) + DEFAULT_TOLS.pos) > 1e-11:
            assert len(seen) == 1


def test_qubit_suite_examples():
    s = qubit_eb_suite(depolarizing(0.25, 2))
    assert s.ppt and s.sign_change and s.norm_half and s.t_compose
    s = qubit_eb_suite(identity_channel(2))
    assert not (s.ppt or s.sign_change or s.norm_half or s.t_compose)
    s = qubit_eb_suite(phi_plus(0.9, 0, 0, 0.81))
    assert not (s.ppt or s.sign_change or s.norm_half or s.t_compose)


def test_qubit_suite_needs_qubit():
    with pytest.raises(ValueError):
        qubit_eb_suite(identity_channel(3))


def test_qubit_suite_agrees_on_corpus():
    for phi in qubit_corpus(80, 300):
        assert qubit_eb_suite(phi, strict=False).agree


def test_eb_monotone_under_composition():
    for k in range(25):
        h = random_holevo(2, 2 + k % 3, seed=k)
        psi = random_cptp(2, 1 + k % 4, 50 + k)
        assert not eb_verdict(compose(h, psi)).is_not_eb
        assert not eb_verdict(compose(psi, h)).is_not_eb


def test_eb_adjoint_symmetry_for_unital_qubits():
    for k in range(30):
        rng = np.random.default_rng(k)
        # mixtures of unitaries are unital
        Us = [haar_unitary(2, rng) for _ in range(3)]
        p = rng.dirichlet(np.ones(3))
        S = sum(pi * unitary_channel(U).super for pi, U in zip(p, Us))
        phi = from_super(S)
        assert eb_verdict(phi).status == eb_verdict(adjoint(phi)).status


def test_q_witness_examples():
    H = np.array([[1, 2 - 1j], [2 + 1j, 0.5]])
    w = q_witness(H)
    assert w.commutator_norm < 1e-12
    assert np.linalg.eigvalsh(w.Q)[0] >= -1e-12
    assert q_witness(np.array([[0, 1], [0, 0]])).ppt_min_eig < 0
    X = np.array([[1, 0], [0, -1]])
    Y = np.array([[0, 1], [1, 0]])
    assert q_witness(X + 0.1j * Y).ppt_min_eig < 0


def test_q_witness_normal_is_ppt():
    U = haar_unitary(3, np.random.default_rng(1))
    N = U @ np.diag([1, 2j, -0.5]) @ U.conj().T
    assert q_witness(N).ppt_min_eig >= -1e-10


def test_entangled_perturbation_examples():
    rA, rB = np.diag([1.0, 0.0]), np.eye(2) / 2
    rho = entangled_perturbation(rA, rB, 0.1)
    assert np.trace(rho) == pytest.approx(1)
    assert np.linalg.eigvalsh(rho)[0] >= -1e-12
    assert np.linalg.eigvalsh(partial_transpose(rho, 2, 2))[0] < 0
    rho1 = entangled_perturbation(rA, rB, 1.0)
    assert np.linalg.matrix_rank(rho1) == 1
    assert negativity(rho1, 2, 2) == pytest.approx(0.5)


@pytest.mark.parametrize("eps", [1e-6, 1e-4, 1e-2, 0.5])
def test_w_minor_determinant(eps):
    rng = np.random.default_rng(2)
    rA = random_density(3, rng, rank=2)
    rB = random_density(2, rng)
    W = perturbation_w_minor(rA, rB, eps)
    assert np.linalg.det(W).real == pytest.approx(-(eps ** 2) / 4, rel=1e-6)
    rho = entangled_perturbation(rA, rB, eps)
    assert np.linalg.eigvalsh(partial_transpose(rho, 3, 2))[0] < 0


def test_perturbation_needs_kernel():
    with pytest.raises(ValueError):
        entangled_perturbation(np.eye(2) / 2, np.eye(2) / 2, 0.1)


def test_negativity_examples():
    e = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert negativity(np.outer(e, e), 2, 2) == pytest.approx(0.5)
    rng = np.random.default_rng(0)
    assert negativity(np.kron(random_density(2, rng), random_density(3, rng)), 2, 3) == pytest.approx(0, abs=1e-12)


def test_kernel_bound_examples():
    phi = holevo_with_pure_fixed_point(2, 0)
    A = np.diag([1.0, 0.0])
    kb = eb_kernel_bound_check(phi, A)
    assert (kb.r, kb.s) == (1, 1)
    assert kb.rhs == 2 and kb.lhs >= 2 and kb.holds
    dep = depolarize_to(np.diag([1.0, 0.0, 0.0]))
    kb = eb_kernel_bound_check(dep, np.diag([1.0, 0.0, 0.0]))
    assert kb.lhs == 8 and kb.rhs == 4 and kb.holds


def test_kernel_bound_random_qutrit_holevo():
    for k in range(5):
        phi = holevo_with_pure_fixed_point(3, 10 + k)
        kb = eb_kernel_bound_check(phi, np.diag([1.0, 0, 0]))
        assert kb.holds and not kb.vacuous
        assert superop_kernel_dim(phi) >= 4


def test_kernel_bound_requires_certificate():
    with pytest.raises(ValueError):
        eb_kernel_bound_check(amplitude_damping(0.5), np.diag([1.0, 0.0]))
