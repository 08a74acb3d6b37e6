"""Spectra, spectral projectors and fixed points of channels."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

import numpy as np

from .channels import Channel, Provenance, apply, from_super
from .matcore import (
    DEFAULT_TOLS,
    Cluster,
    Tolerances,
    dagger,
    eig_full,
    hermitian_part,
    psd_utils,
    spectral_projector,
    unvec,
    vec,
)

GAP_MIN = 1e-6
MAX_DENOM = 10 ** 6


class SpectralWarning(UserWarning):
    """A spectral construction fell back to a slower or less certain route."""


@dataclass
class SpectralReport:
    clusters: list
    peripheral: list
    zero_amult: int
    contraction_ok: bool
    peripheral_jordan_trivial: bool
    values: np.ndarray
    notes: list = field(default_factory=list)

    @property
    def n_peripheral(self) -> int:
        return sum(c.amult for c in self.peripheral)

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.values)))

    def to_json(self) -> dict:
        def cl(c):
            return {"re": c.value.real, "im": c.value.imag, "a": c.amult, "g": c.gmult}

        return {
            "clusters": [cl(c) for c in self.clusters],
            "peripheral": [cl(c) for c in self.peripheral],
            "n_peripheral": self.n_peripheral,
            "zero_amult": self.zero_amult,
            "contraction_ok": self.contraction_ok,
            "peripheral_jordan_trivial": self.peripheral_jordan_trivial,
            "notes": list(self.notes),
        }


def _symmetrize(clusters: list, tol: float) -> list:
    """Pair each cluster with its complex conjugate so the multiset is conjugation symmetric."""
    out = []
    used = set()
    for k, c in enumerate(clusters):
        if k in used:
            continue
        z = c.value
        if abs(z.imag) <= tol:
            out.append(Cluster(complex(z.real, 0.0), c.amult, c.gmult, c.indices))
            used.add(k)
            continue
        partner = None
        for m, e in enumerate(clusters):
            if m not in used and m != k and e.amult == c.amult and abs(e.value - np.conj(z)) <= 10 * tol:
                partner = m
                break
        used.add(k)
        if partner is None:
            out.append(c)
            continue
        used.add(partner)
        e = clusters[partner]
        zz = (z + np.conj(e.value)) / 2
        g = min(c.gmult, e.gmult)
        out.append(Cluster(complex(zz), c.amult, g, c.indices))
        out.append(Cluster(complex(np.conj(zz)), e.amult, g, e.indices))
    return out


def spectrum(phi: Channel, tols: Tolerances = DEFAULT_TOLS) -> SpectralReport:
    es = eig_full(phi.super, tols.spec)
    w = es.values
    scale = max(1.0, float(np.max(np.abs(w))))
    clusters = _symmetrize(es.clusters, tols.spec * scale)
    peripheral = [c for c in clusters if abs(c.value) >= 1 - tols.peri]
    zero_amult = int(np.sum(np.abs(w) <= tols.spec))
    return SpectralReport(
        clusters=clusters,
        peripheral=peripheral,
        zero_amult=zero_amult,
        contraction_ok=bool(np.all(np.abs(w) <= 1 + tols.peri)),
        peripheral_jordan_trivial=all(c.amult == c.gmult for c in peripheral),
        values=w,
    )


# ----------------------------------------------------------------------------
# spectral projectors
# ----------------------------------------------------------------------------

@dataclass
class PeripheralData:
    """Projector onto the peripheral part and its compressed action."""

    P: np.ndarray  # E_phi superoperator
    Q: np.ndarray  # orthonormal basis of its range
    B: np.ndarray  # dual coordinates, P = Q @ B
    T: np.ndarray  # B @ S @ Q, the compressed peripheral action
    gap: float
    method: str


def _gap(w: np.ndarray, peri: float) -> float:
    mod = np.abs(w)
    inner = mod[mod < 1 - peri]
    outer = mod[mod >= 1 - peri]
    if inner.size == 0 or outer.size == 0:
        return 1.0
    return float(outer.min() - inner.max())


def _aligned_power(S: np.ndarray, w: np.ndarray, peri: float) -> np.ndarray:
    """Limit-of-powers E_phi: a power phi^N with N aligning every peripheral phase to 1."""
    phases = np.angle(w[np.abs(w) >= 1 - peri]) / (2 * np.pi)
    L = 1
    for t in phases:
        L = lcm(L, Fraction(float(t)).limit_denominator(MAX_DENOM).denominator)
        if L > MAX_DENOM:
            L = MAX_DENOM
            break
    inner = np.abs(w[np.abs(w) < 1 - peri])
    rho = float(inner.max()) if inner.size else 0.0
    K = 1 if rho <= 0 else int(np.ceil(np.log(1e-12) / np.log(rho))) if rho < 1 else 10 ** 9
    N = L * max(1, -(-K // L))
    return np.linalg.matrix_power(S, N)


def peripheral_data(phi: Channel, tols: Tolerances = DEFAULT_TOLS) -> PeripheralData:
    S = phi.super
    w = np.linalg.eigvals(S)
    gap = _gap(w, tols.peri)
    sel = lambda z: abs(z) >= 1 - tols.peri  # noqa: E731
    if gap >= GAP_MIN:
        P, Q, B = spectral_projector(S, sel)
        method = "spectral"
    else:
        warnings.warn(
            f"peripheral gap {gap:.2e} below {GAP_MIN:.0e}; using aligned powers (denominator cap {MAX_DENOM})",
            SpectralWarning,
            stacklevel=3,
        )
        P = _aligned_power(S, w, tols.peri)
        U, s, Vh = np.linalg.svd(P)
        r = int(np.sum(s > 1e-8 * max(1.0, s[0])))
        Q = U[:, :r]
        B = dagger(Q) @ P
        method = "aligned_powers"
    T = B @ S @ Q
    return PeripheralData(P, Q, B, T, gap, method)


def peripheral_projector(phi: Channel, tols: Tolerances = DEFAULT_TOLS) -> Channel:
    """E_phi, the spectral projector onto all unit-modulus eigenvalues."""
    pd = peripheral_data(phi, tols)
    return from_super(pd.P, Provenance("peripheral_projector", {"method": pd.method}))


def inverse_phase(phi: Channel, tols: Tolerances = DEFAULT_TOLS) -> Channel:
    """I_phi: the peripheral part with every phase conjugated."""
    pd = peripheral_data(phi, tols)
    if pd.Q.shape[1] == 0:
        return from_super(np.zeros_like(pd.P))
    # the compressed action is diagonalizable with unimodular spectrum, so its
    # inverse has the conjugate eigenvalues on the same eigenvectors
    Iphi = pd.Q @ np.linalg.solve(pd.T, pd.B)
    return from_super(Iphi, Provenance("inverse_phase", {"method": pd.method}))


def fixed_projector(phi: Channel, tols: Tolerances = DEFAULT_TOLS) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(P, Q, B) for the eigenvalue-1 spectral projector phi_infinity."""
    return spectral_projector(phi.super, lambda z: abs(z - 1) <= tols.spec)


def cesaro_mean(phi: Channel, tol: float = 1e-10, max_iter: int = 2 ** 40) -> tuple[np.ndarray, int, bool]:
    """Mean of the first n powers, n doubling until successive means differ by < tol."""
    S = phi.super
    A = np.eye(S.shape[0], dtype=complex)  # mean of phi^0
    Sn = S.copy()  # phi^n
    n = 1
    while 2 * n <= max_iter:
        A_next = (A + Sn @ A) / 2
        Sn = Sn @ Sn
        n *= 2
        diff = np.linalg.norm(A_next - A)
        A = A_next
        if diff < tol:
            return A, n, True
    return A, n, False


def cesaro_fixed_projector(phi: Channel, tol: float = 1e-10, max_iter: int = 2 ** 40,
                           tols: Tolerances = DEFAULT_TOLS) -> Channel:
    """phi_infinity from the spectral projector, cross-checked by Cesaro means."""
    P, _, _ = fixed_projector(phi, tols)
    A, n, converged = cesaro_mean(phi, tol, max_iter)
    if not converged:
        warnings.warn(f"Cesaro mean not converged after {n} powers", SpectralWarning, stacklevel=2)
    mismatch = float(np.linalg.norm(A - P))
    if converged and mismatch > max(1e-6, 1e3 * tol):
        warnings.warn(f"Cesaro mean differs from the spectral projector by {mismatch:.2e}",
                      SpectralWarning, stacklevel=2)
    return from_super(P, Provenance("fixed_projector", {"cesaro_powers": n, "cesaro_mismatch": mismatch,
                                                        "cesaro_converged": converged}))


# ----------------------------------------------------------------------------
# fixed points
# ----------------------------------------------------------------------------

def _normalize_density(X: np.ndarray) -> np.ndarray:
    X = hermitian_part(X)
    return X / np.trace(X).real


def max_fixed_point(phi: Channel, tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """rho_0 = phi_inf(1)/d, a fixed state whose support contains every fixed point's."""
    P, _, _ = fixed_projector(phi, tols)
    d = phi.d
    rho = (P @ vec(np.eye(d))).reshape(d, d, order="F") / d
    return _normalize_density(rho)


def hermitian_basis(mats, rank: int | None = None, tol: float = 1e-9) -> list[np.ndarray]:
    """HS-orthonormal Hermitian basis for the span of ``mats`` and their adjoints."""
    if not mats:
        return []
    d = mats[0].shape[0]
    rows = []
    for Z in mats:
        for H in (hermitian_part(Z), hermitian_part(1j * Z)):
            rows.append(np.concatenate([H.real.ravel(), H.imag.ravel()]))
    A = np.array(rows)
    _, s, Vt = np.linalg.svd(A, full_matrices=False)
    if rank is None:
        rank = int(np.sum(s > tol * max(1.0, s[0])))
    out = []
    for v in Vt[:rank]:
        H = v[: d * d].reshape(d, d) + 1j * v[d * d:].reshape(d, d)
        H = hermitian_part(H)
        out.append(H / np.linalg.norm(H))
    return out


def fixed_basis(phi: Channel, tols: Tolerances = DEFAULT_TOLS) -> list[np.ndarray]:
    """Hermitian basis of the fixed-point space eta_phi."""
    _, Q, _ = fixed_projector(phi, tols)
    mats = [unvec(Q[:, k], phi.d) for k in range(Q.shape[1])]
    return hermitian_basis(mats, rank=Q.shape[1])


def semipositive_fixed_point(phi: Channel, tols: Tolerances = DEFAULT_TOLS) -> np.ndarray | None:
    """A fixed state with a zero eigenvalue, or None when none exists."""
    d = phi.d
    rho0 = max_fixed_point(phi, tols)
    info0 = psd_utils(rho0, tols.pos)
    basis = fixed_basis(phi, tols)
    if len(basis) <= 1:
        return rho0 if info0.min_eig <= tols.pos else None
    if info0.rank < d:
        return rho0
    # full-rank rho0: move from rho0 along a second Hermitian fixed point
    # until the smallest eigenvalue hits zero
    r0 = vec(rho0) / np.linalg.norm(rho0)
    best, best_norm = None, 0.0
    for H in basis:
        h = vec(H)
        h = h - r0 * np.vdot(r0, h)
        nrm = np.linalg.norm(h)
        if nrm > best_norm:
            best, best_norm = h, nrm
    if best_norm < 1e-6:
        raise np.linalg.LinAlgError("fixed-point basis is ill-conditioned")
    X = hermitian_part(unvec(best / best_norm, d))
    lam = float(np.linalg.eigvalsh(info0.inv_sqrt_on_support @ X @ info0.inv_sqrt_on_support)[0])
    A = X - lam * rho0
    A = _normalize_density(A)
    return A


@dataclass
class Restriction:
    K_projector: np.ndarray
    basis: np.ndarray  # d x r isometry onto K
    channel: Channel
    leakage: float


class LeakageError(RuntimeError):
    """The support of the maximal fixed point is not invariant under the map."""


def restrict_to_support(phi: Channel, tols: Tolerances = DEFAULT_TOLS, rho0: np.ndarray | None = None,
                        leak_tol: float = 1e-8) -> Restriction:
    """Compress phi to K = supp rho0: x -> V^dag phi(V x V^dag) V."""
    if rho0 is None:
        rho0 = max_fixed_point(phi, tols)
    info = psd_utils(rho0, tols.pos)
    V = info.support_basis
    P = info.support_projector
    r = V.shape[1]
    S = phi.super
    S_t = np.kron(V.T, dagger(V)) @ S @ np.kron(np.conj(V), V)
    leak = 0.0
    d = phi.d
    for i in range(r):
        for j in range(r):
            X = np.outer(V[:, i], np.conj(V[:, j]))
            Y = apply(phi, X)
            leak = max(leak, float(np.linalg.norm(Y - P @ Y @ P)))
    if leak > leak_tol * max(1.0, np.linalg.norm(S) / d):
        raise LeakageError(f"support leakage {leak:.2e} above tolerance")
    return Restriction(P, V, from_super(S_t), leak)


# ----------------------------------------------------------------------------
# phase points
# ----------------------------------------------------------------------------

@dataclass
class PhaseBasis:
    matrices: list
    eigphases: np.ndarray
    hermitian: list
    residual: float

    @property
    def dim(self) -> int:
        return len(self.matrices)


def phase_basis(phi: Channel, tols: Tolerances = DEFAULT_TOLS) -> PhaseBasis:
    """Peripheral eigenmatrices and an HS-orthonormal Hermitian basis of their span."""
    pd = peripheral_data(phi, tols)
    d = phi.d
    r = pd.Q.shape[1]
    if r == 0:
        raise np.linalg.LinAlgError("no peripheral eigenvalues found")
    lam, W = np.linalg.eig(pd.T)
    Z = pd.Q @ W
    mats, res = [], 0.0
    S = phi.super
    for k in range(r):
        z = Z[:, k] / np.linalg.norm(Z[:, k])
        # fix the free phase so the largest entry is real positive
        m = np.argmax(np.abs(z))
        z = z * np.conj(z[m]) / abs(z[m])
        res = max(res, float(np.linalg.norm(S @ z - lam[k] * z)))
        mats.append(unvec(z, d))
    order = np.lexsort((np.angle(lam), -np.abs(lam)))
    mats = [mats[k] for k in order]
    lam = lam[order]
    herm = hermitian_basis([unvec(pd.Q[:, k], d) for k in range(r)], rank=r)
    return PhaseBasis(mats, lam, herm, res)
