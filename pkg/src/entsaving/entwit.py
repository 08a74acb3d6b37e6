"""Entanglement-breaking tests and entanglement witnesses."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .channels import Channel, compose, from_bloch, transpose_map
from .matcore import (
    DEFAULT_TOLS,
    ConsistencyError,
    Tolerances,
    dagger,
    kernel_dim,
    min_eig_h,
    partial_transpose,
    psd_utils,
    schatten_norm,
)


class EBStatus(str, Enum):
    NOT_EB = "NotEB"
    EB = "EB"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Witness:
    criterion: str
    value: float
    threshold: float

    def to_json(self) -> dict:
        return {"criterion": self.criterion, "value": self.value, "threshold": self.threshold}


@dataclass(frozen=True)
class EBVerdict:
    status: EBStatus
    witness: Witness | None = None
    evidence: dict = field(default_factory=dict)

    @property
    def is_eb(self) -> bool:
        return self.status is EBStatus.EB

    @property
    def is_not_eb(self) -> bool:
        return self.status is EBStatus.NOT_EB

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "witness": self.witness.to_json() if self.witness else None,
            "evidence": dict(self.evidence),
        }


def ppt_min_eig(phi: Channel) -> float:
    return min_eig_h(partial_transpose(phi.choi, phi.d, phi.d))


def reshuffling_norm(phi: Channel) -> float:
    """Trace norm of the d^2 x d^2 superoperator (column-stacking convention)."""
    return schatten_norm(phi.super, 1)


def eb_verdict(phi: Channel, tols: Tolerances = DEFAULT_TOLS) -> EBVerdict:
    """Three-valued entanglement-breaking verdict.

    Refutation uses PPT and reshuffling. Confirmation is exact PPT for qubits
    and a Holevo-form provenance certificate in higher dimension.
    """
    d = phi.d
    ppt = ppt_min_eig(phi)
    resh = reshuffling_norm(phi)
    ev = {"ppt_min_eig": ppt, "reshuffling_norm": resh, "d": d}
    if ppt < -tols.pos:
        return EBVerdict(EBStatus.NOT_EB, Witness("ppt_min_eig", ppt, -tols.pos), ev)
    if resh > d + tols.pos:
        return EBVerdict(EBStatus.NOT_EB, Witness("reshuffling_norm", resh, d + tols.pos), ev)
    if d <= 2:
        return EBVerdict(EBStatus.EB, Witness("ppt_min_eig", ppt, -tols.pos), ev)
    if phi.eb_certified:
        return EBVerdict(EBStatus.EB, Witness("holevo_form", 1.0, 1.0), {**ev, "provenance": phi.provenance.kind})
    return EBVerdict(EBStatus.UNKNOWN, None, ev)


# ----------------------------------------------------------------------------
# qubit criteria
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class QubitEBSuite:
    ppt: bool
    sign_change: bool
    norm_half: bool
    t_compose: bool
    raw: dict

    @property
    def agree(self) -> bool:
        return len({self.ppt, self.sign_change, self.norm_half, self.t_compose}) == 1

    def to_json(self) -> dict:
        return {"ppt": self.ppt, "sign_change": self.sign_change, "norm_half": self.norm_half,
                "t_compose": self.t_compose, "raw": dict(self.raw)}


def _choi_min(phi: Channel) -> float:
    return min_eig_h(phi.choi)


def qubit_eb_suite(phi: Channel, tols: Tolerances = DEFAULT_TOLS, strict: bool = True) -> QubitEBSuite:
    """Evaluate four equivalent qubit EB criteria independently.

    Raises :class:`ConsistencyError` when they disagree (unless ``strict`` is false).
    """
    from .qubit import special_svd

    if phi.d != 2:
        raise ValueError("qubit_eb_suite needs a qubit channel")
    ppt = ppt_min_eig(phi)

    # sign change of each special singular value in the canonical form keeps CP
    b = phi.bloch
    cf = special_svd(b.M)
    t = cf.P.T @ b.c
    flips = []
    for i in range(3):
        L = np.diag(cf.l)
        L[i, i] = -L[i, i]
        flips.append(_choi_min(from_bloch(L, t)))
    norm = schatten_norm(phi.choi, np.inf)
    T = transpose_map(2)
    tc = max(_choi_min(compose(T, phi)), _choi_min(compose(phi, T)))
    raw = {"ppt_min_eig": ppt, "sign_flip_min_choi": flips, "choi_norm_inf": norm, "transpose_min_choi": tc}
    s = QubitEBSuite(
        ppt=ppt >= -tols.pos,
        sign_change=min(flips) >= -tols.pos,
        norm_half=norm <= 0.5 + tols.pos,
        t_compose=tc >= -tols.pos,
        raw=raw,
    )
    if strict and not s.agree:
        raise ConsistencyError(f"qubit EB criteria disagree: {s.to_json()}")
    return s


# ----------------------------------------------------------------------------
# witnesses
# ----------------------------------------------------------------------------

def q_matrix(Z) -> np.ndarray:
    """Q(Z) = [[1, Z], [Z^dag, Z^dag Z]] on C^2 (x) C^d."""
    Z = np.asarray(Z, dtype=complex)
    d = Z.shape[0]
    return np.block([[np.eye(d), Z], [dagger(Z), dagger(Z) @ Z]])


@dataclass(frozen=True)
class QWitness:
    Q: np.ndarray
    ppt_min_eig: float
    commutator_norm: float


def q_witness(Z) -> QWitness:
    """Q(Z) is PSD; its partial transpose on the C^d factor fails PPT iff Z is non-normal."""
    Z = np.asarray(Z, dtype=complex)
    d = Z.shape[0]
    Q = q_matrix(Z)
    # Q lives on C^2 (x) C^d with the qubit first
    ev = min_eig_h(partial_transpose(Q, 2, d))
    comm = float(np.linalg.norm(Z @ dagger(Z) - dagger(Z) @ Z))
    return QWitness(Q, ev, comm)


def _perturbation_vectors(rho_A, dB: int, tol: float):
    wA, VA = np.linalg.eigh((rho_A + dagger(rho_A)) / 2)
    if wA[0] > tol:
        raise ValueError("rho_A is strictly positive; no kernel vector available")
    if dB < 2:
        raise ValueError("second factor needs dimension >= 2")
    a1, a2 = VA[:, 0], VA[:, -1]
    b1, b2 = np.eye(dB)[0], np.eye(dB)[1]
    return a1, a2, b1, b2


def entangled_perturbation(rho_A, rho_B, eps: float, tol: float = DEFAULT_TOLS.pos) -> np.ndarray:
    """rho_eps = eps |Psi><Psi| + (1-eps) rho_A (x) rho_B, entangled for every eps > 0.

    |Psi> = (|11> + |22>)/sqrt2 with |1> in the kernel of rho_A and |2> its top
    eigenvector; on the second factor |1>, |2> are the first two basis vectors.
    """
    rho_A = np.asarray(rho_A, dtype=complex)
    rho_B = np.asarray(rho_B, dtype=complex)
    if not 0 < eps <= 1:
        raise ValueError("need 0 < eps <= 1")
    a1, a2, b1, b2 = _perturbation_vectors(rho_A, rho_B.shape[0], tol)
    psi = (np.kron(a1, b1) + np.kron(a2, b2)) / np.sqrt(2)
    return eps * np.outer(psi, np.conj(psi)) + (1 - eps) * np.kron(rho_A, rho_B)


def perturbation_w_minor(rho_A, rho_B, eps: float, tol: float = DEFAULT_TOLS.pos) -> np.ndarray:
    """Partial transpose of rho_eps compressed to span{|12>, |21>}."""
    rho_A = np.asarray(rho_A, dtype=complex)
    rho_B = np.asarray(rho_B, dtype=complex)
    dA, dB = rho_A.shape[0], rho_B.shape[0]
    a1, a2, b1, b2 = _perturbation_vectors(rho_A, dB, tol)
    R = partial_transpose(entangled_perturbation(rho_A, rho_B, eps, tol), dA, dB)
    W = np.stack([np.kron(a1, b2), np.kron(a2, b1)], axis=1)
    return dagger(W) @ R @ W


def negativity(R, dA: int, dB: int, trace_tol: float = 1e-8) -> float:
    R = np.asarray(R, dtype=complex)
    if abs(np.trace(R) - 1) > trace_tol:
        raise ValueError("state does not have unit trace")
    return max(0.0, (schatten_norm(partial_transpose(R, dA, dB), 1) - 1) / 2)


@dataclass(frozen=True)
class KernelBound:
    lhs: int
    rhs: int
    holds: bool
    vacuous: bool
    r: int
    s: int


def superop_kernel_dim(phi: Channel, tol: float = 1e-9) -> int:
    return kernel_dim(phi.super, tol * max(1.0, np.linalg.norm(phi.super, 2)))


def eb_kernel_bound_check(phi: Channel, A, tols: Tolerances = DEFAULT_TOLS) -> KernelBound:
    """dim ker phi >= 2dr - r^2 - s^2 for an EB phi and PSD A of rank r < d, s = rank phi(A)."""
    if not phi.eb_certified:
        raise ValueError("channel carries no entanglement-breaking certificate")
    from .channels import apply

    d = phi.d
    A = np.asarray(A, dtype=complex)
    r = psd_utils(A, tols.pos).rank
    s = psd_utils((lambda Y: (Y + dagger(Y)) / 2)(apply(phi, A)), tols.pos).rank
    rhs = 2 * d * r - r * r - s * s
    lhs = superop_kernel_dim(phi)
    vacuous = not (r < d and r * r + s * s < 2 * d * r)
    return KernelBound(lhs, rhs, lhs >= rhs, vacuous, r, s)
