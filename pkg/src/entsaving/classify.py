"""Classification: unitarity, n-index, entanglement saving (ES), asymptotic ES, fixed structure."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .algebra import StructureError, decompose
from .channels import (
    Channel,
    Provenance,
    apply,
    compose,
    from_super,
    power,
    simple_aes,
    validate_cptp,
)
from .entwit import EBStatus, EBVerdict, eb_verdict
from .matcore import (
    DEFAULT_TOLS,
    ConsistencyError,
    Tolerances,
    dagger,
    hermitian_part,
    psd_utils,
    unvec,
    vec,
)
from .spectral import (
    SpectralWarning,
    inverse_phase,
    peripheral_data,
    peripheral_projector,
    phase_basis,
    restrict_to_support,
    semipositive_fixed_point,
    spectrum,
)


class NotCPTPError(ValueError):
    """The operation needs a completely positive trace-preserving map."""


def require_cptp(phi: Channel, tols: Tolerances = DEFAULT_TOLS) -> None:
    v = validate_cptp(phi, tols)
    if not (v.cp and v.tp):
        raise NotCPTPError(f"map is not CPTP (min Choi eig {v.min_choi_eig:.3e}, TP residual {v.tp_residual:.3e})")


def _phase_fix(U: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry real positive."""
    k = np.argmax(np.abs(U))
    z = U.flat[k]
    return U * (np.conj(z) / abs(z))


# ----------------------------------------------------------------------------
# unitarity
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class UnitaryResult:
    unitary: bool
    U: np.ndarray | None
    abs_det: float
    kraus_rank: int

    def to_json(self) -> dict:
        return {"unitary": self.unitary, "abs_det": self.abs_det, "kraus_rank": self.kraus_rank,
                "U": None if self.U is None else {"re": self.U.real.tolist(), "im": self.U.imag.tolist()}}


def is_unitary(phi: Channel, tols: Tolerances = DEFAULT_TOLS) -> UnitaryResult:
    """Unitary iff |det| = 1, cross-checked against a single unitary Kraus operator."""
    require_cptp(phi, tols)
    sign, logdet = np.linalg.slogdet(phi.super)
    abs_det = float(np.exp(logdet)) if abs(sign) > 0 else 0.0
    by_det = abs_det >= 1 - 1e-8
    ops = phi.kraus
    K = ops[0]
    by_kraus = len(ops) == 1 and np.linalg.norm(dagger(K) @ K - np.eye(phi.d)) <= 1e-8
    if by_det != by_kraus:
        raise ConsistencyError(f"unitarity tests disagree: |det|={abs_det!r}, Kraus rank {len(ops)}")
    U = _phase_fix(K) if by_kraus else None
    return UnitaryResult(bool(by_det), U, abs_det, len(ops))


# ----------------------------------------------------------------------------
# n-index
# ----------------------------------------------------------------------------

@dataclass
class NIndexResult:
    kind: str  # "Finite", "AtLeast" or "InfiniteCertified"
    n: int | None
    evidence: dict = field(default_factory=dict)  # power -> EBVerdict
    certificate: object = None
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "evidence": {str(k): v.status.value for k, v in sorted(self.evidence.items())},
            "certificate": None if self.certificate is None else self.certificate.to_json(),
            "notes": list(self.notes),
        }


def first_eb_power(phi: Channel, n_max: int, tols: Tolerances = DEFAULT_TOLS,
                   linear_window: int = 64) -> tuple[int | None, dict]:
    """Smallest n <= n_max with phi^n certified EB, scanning doubling checkpoints.

    EB is inherited by every later power, so once a checkpoint 2^k is EB the
    first EB power lies in (2^(k-1), 2^k]; that window is scanned linearly when
    short and bisected otherwise. Unknown verdicts count as "not yet EB".
    """
    evidence: dict[int, EBVerdict] = {}
    S = phi.super

    def verdict(n: int) -> EBVerdict:
        if n not in evidence:
            ch = from_super(np.linalg.matrix_power(S, n), Provenance("power", {"n": n}, eb_certified=phi.eb_certified))
            evidence[n] = eb_verdict(ch, tols)
        return evidence[n]

    prev, n = 0, 1
    while True:
        m = min(n, n_max)
        if verdict(m).is_eb:
            lo, hi = prev, m  # not EB at lo (or lo = 0), EB at hi
            break
        if m == n_max:
            return None, evidence
        prev, n = m, 2 * n
    if hi - lo <= linear_window:
        for k in range(lo + 1, hi + 1):
            if verdict(k).is_eb:
                return k, evidence
        return hi, evidence
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if verdict(mid).is_eb:
            hi = mid
        else:
            lo = mid
    return hi, evidence


def n_index(phi: Channel, n_max: int = 64, tols: Tolerances = DEFAULT_TOLS) -> NIndexResult:
    """Direct n-index: the least n with phi^n entanglement breaking."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    require_cptp(phi, tols)
    es = es_classify(phi, tols)
    n, ev = first_eb_power(phi, n_max, tols)
    if es.status == "ES":
        # an ES channel never has a PPT Choi matrix with positive margin; a power
        # passing PPT only within tolerance is a resolution limit, not a contradiction
        for k, v in ev.items():
            if v.evidence.get("ppt_min_eig", -1.0) > tols.pos:
                raise ConsistencyError(f"channel certified ES but power {k} has a strictly PPT Choi matrix")
        res = NIndexResult("InfiniteCertified", None, ev, es.certificate)
        if n is not None:
            res.notes.append(f"powers from {n} pass PPT only within the positivity tolerance")
        return res
    if n is not None:
        return NIndexResult("Finite", n, ev, None)
    return NIndexResult("AtLeast", n_max, ev, None)


# ----------------------------------------------------------------------------
# entanglement saving
# ----------------------------------------------------------------------------

@dataclass
class Certificate:
    kind: str
    data: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def conv(v):
            if isinstance(v, np.ndarray):
                return {"re": v.real.tolist(), "im": v.imag.tolist()} if np.iscomplexobj(v) else v.tolist()
            return v
        return {"kind": self.kind, **{k: conv(v) for k, v in self.data.items()}}


@dataclass
class ESVerdict:
    status: str  # "ES", "NotES", "Indeterminate"
    certificate: Certificate | None
    precondition_met: bool
    evidence: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
            "precondition_met": self.precondition_met,
            "evidence": dict(self.evidence),
            "notes": list(self.notes),
        }


def _not_es_by_power(phi, tols, n_cap, precond, evidence, notes) -> ESVerdict:
    n, _ = first_eb_power(phi, n_cap, tols)
    if n is not None:
        return ESVerdict("NotES", Certificate("EBAtPower", {"n": n}), precond, evidence, notes)
    return None


def es_classify(phi: Channel, tols: Tolerances = DEFAULT_TOLS, scan_cap: int = 2 ** 16) -> ESVerdict:
    """Entanglement-saving verdict with a certificate."""
    require_cptp(phi, tols)
    d = phi.d
    rep = spectrum(phi, tols)
    a0 = rep.zero_amult
    precond = a0 < 2 * (d - 1)
    npr = rep.n_peripheral
    ev = {"zero_amult": a0, "n_peripheral": npr}
    notes: list[str] = []
    if d == 1:
        return ESVerdict("NotES", Certificate("EBAtPower", {"n": 1}), precond, ev, notes)
    if phi.eb_certified:
        return ESVerdict("NotES", Certificate("EBAtPower", {"n": 1}), precond, ev, notes)

    if d == 2:
        from .qubit import fixes_or_inverts_pure

        M = phi.bloch.M
        s = np.linalg.svd(M, compute_uv=False)
        ev["det"] = float(np.linalg.det(M))
        if s[-1] <= tols.spec:
            # zero determinant: the map is already entanglement breaking
            v = eb_verdict(phi, tols)
            if v.is_eb:
                return ESVerdict("NotES", Certificate("EBAtPower", {"n": 1}), True, ev, notes)
            notes.append("det ~ 0 but PPT not satisfied at power 1")
            r = _not_es_by_power(phi, tols, scan_cap, True, ev, notes)
            if r:
                return r
            return ESVerdict("Indeterminate", None, True, ev, notes)
        pf = fixes_or_inverts_pure(phi)
        if pf.kind != "Neither":
            cert = Certificate("QubitPureFixOrInvert", {"mode": pf.kind, "bloch_vector": pf.n})
            return ESVerdict("ES", cert, True, ev, notes)
        r = _not_es_by_power(phi, tols, scan_cap, True, ev, notes)
        if r:
            return r
        notes.append(f"no EB power found up to {scan_cap}; NotES follows from the qubit criterion")
        return ESVerdict("NotES", Certificate("QubitPureFixOrInvert", {"mode": "Neither"}), True, ev, notes)

    # d > 2
    sp = semipositive_fixed_point(phi, tols)
    if sp is None and npr < 2:
        # strictly positive unique fixed point and trivial peripheral spectrum:
        # powers converge to an interior separable point
        cert = Certificate("PositiveMixing", {"n_peripheral": npr})
        return ESVerdict("NotES", cert, precond, ev, notes)
    if precond:
        if sp is not None:
            return ESVerdict("ES", Certificate("SemipositiveFixedPoint", {"n": 1, "matrix": sp}), True, ev, notes)
        for n in range(2, 2 * d + 1):
            if n == d + 1:
                notes.append(f"no semipositive fixed point for powers <= d={d}; scan extended to 2d")
                warnings.warn(notes[-1], SpectralWarning, stacklevel=2)
            spn = semipositive_fixed_point(power(phi, n), tols)
            if spn is not None:
                cert = Certificate("SemipositiveFixedPoint", {"n": n, "matrix": spn})
                return ESVerdict("ES", cert, True, ev, notes)
        return ESVerdict("ES", Certificate("PeripheralCount", {"n_peripheral": npr}), True, ev, notes)
    # outside the characterized class: only one-sided certificates
    aes = aes_classify(phi, tols)
    if aes.status == "AES":
        return ESVerdict("ES", Certificate("AESLimit", {"route": aes.route}), False, ev, notes)
    notes.append("zero eigenvalue multiplicity >= 2(d-1); no certificate either way")
    return ESVerdict("Indeterminate", None, False, ev, notes)


# ----------------------------------------------------------------------------
# asymptotic entanglement saving
# ----------------------------------------------------------------------------

@dataclass
class AESVerdict:
    status: str  # "AES" or "NotAES"
    route: str
    evidence: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"status": self.status, "route": self.route, "evidence": dict(self.evidence)}


def max_commutator(mats) -> float:
    """Largest ||[A, B]||_F / (||A|| ||B||) over pairs."""
    best = 0.0
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            A, B = mats[i], mats[j]
            c = np.linalg.norm(A @ B - B @ A) / (np.linalg.norm(A) * np.linalg.norm(B))
            best = max(best, float(c))
    return best


def aes_classify(phi: Channel, tols: Tolerances = DEFAULT_TOLS) -> AESVerdict:
    """AES iff two phase points fail to commute; other routes are cross-checks."""
    require_cptp(phi, tols)
    pb = phase_basis(phi, tols)
    comm = max_commutator(pb.hermitian)
    aes = comm > tols.comm
    ev: dict = {"max_commutator": comm, "n_peripheral": pb.dim}
    disagreements = []
    E = peripheral_projector(phi, tols)
    ve = eb_verdict(E, tols)
    ev["E_phi_eb"] = ve.status.value
    if ve.status is EBStatus.NOT_EB and not aes:
        disagreements.append("E_phi is not EB but phase points commute")
    if ve.status is EBStatus.EB and aes:
        disagreements.append("E_phi is EB but phase points do not commute")
    if pb.dim > phi.d:
        ev["peripheral_count_rule"] = True
        if not aes:
            disagreements.append(f"{pb.dim} > d peripheral eigenvalues but phase points commute")
    if phi.d == 2:
        u = is_unitary(phi, tols).unitary
        ev["unitary"] = u
        if u != aes:
            disagreements.append(f"qubit rule: unitary={u} but AES={aes}")
    if disagreements:
        raise ConsistencyError("AES routes disagree: " + "; ".join(disagreements) + f" evidence={ev}")
    return AESVerdict("AES" if aes else "NotAES", "NoncommutingPhasePoints", ev)


# ----------------------------------------------------------------------------
# limit group
# ----------------------------------------------------------------------------

@dataclass
class LimitGroupReport:
    idempotent_residual: float
    inverse_residual: float
    E_cptp: bool
    I_cptp: bool
    E_eb: str
    limit_points_checked: int
    limit_points_not_eb: int
    ok: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def limit_group_diagnostics(phi: Channel, tols: Tolerances = DEFAULT_TOLS, n_samples: int = 12,
                            strict: bool = True, tol: float = 1e-7) -> LimitGroupReport:
    """Check E_phi as identity and I_phi as inverse in the group of limit points."""
    require_cptp(phi, tols)
    E = peripheral_projector(phi, tols)
    Iphi = inverse_phase(phi, tols)
    S, P, Ii = phi.super, E.super, Iphi.super
    idem = float(np.linalg.norm(P @ P - P))
    inv = float(max(np.linalg.norm(S @ Ii - P), np.linalg.norm(Ii @ S - P)))
    ve = eb_verdict(E, tols)
    # the limit points of phi^n are phi^m E_phi
    bad = 0
    if ve.is_eb:
        Sm = P.copy()
        for m in range(n_samples):
            lp = from_super(Sm)
            if eb_verdict(lp, tols).is_not_eb:
                bad += 1
            Sm = S @ Sm
    vE, vI = validate_cptp(E, tols), validate_cptp(Iphi, tols)
    ok = idem <= tol and inv <= tol and vE.cp and vE.tp and vI.cp and vI.tp and bad == 0
    rep = LimitGroupReport(idem, inv, vE.cp and vE.tp, vI.cp and vI.tp, ve.status.value,
                           n_samples if ve.is_eb else 0, bad, ok)
    if strict and not ok:
        raise ConsistencyError(f"limit-group identities violated: {rep.to_json()}")
    return rep


# ----------------------------------------------------------------------------
# peripheral multiplicities and constructions
# ----------------------------------------------------------------------------

def power_multiplicity_scan(phi: Channel, tols: Tolerances = DEFAULT_TOLS) -> int | None:
    """Least n <= d such that 1 has multiplicity > 1 in the spectrum of phi^n."""
    rep = spectrum(phi, tols)
    if rep.n_peripheral < 2:
        return None
    w = rep.values[np.abs(rep.values) >= 1 - tols.peri]
    for n in range(1, phi.d + 1):
        if int(np.sum(np.abs(w ** n - 1) <= tols.spec)) > 1:
            return n
    return None


def peripheral_channel_from_data(cycles, d: int | None = None) -> Channel:
    """Channel whose peripheral spectrum is prescribed by cycles (n_c, d_c, phases_c).

    Each cycle is n_c blocks of size d_c permuted cyclically, each carrying the
    diagonal unitary diag(phases_c).
    """
    blocks, unitaries, perm = [], [], []
    for n_c, d_c, om in cycles:
        om = np.atleast_1d(np.asarray(om, dtype=complex))
        if len(om) != d_c:
            raise ValueError(f"cycle needs {d_c} phases, got {len(om)}")
        if np.any(np.abs(np.abs(om) - 1) > 1e-12):
            raise ValueError("phases must have unit modulus")
        base = len(blocks)
        for k in range(n_c):
            blocks.append((d_c, 1, 1))
            unitaries.append(np.diag(om))
            perm.append(base + (k + 1) % n_c)
    r = sum(b[0] for b in blocks)
    if d is not None and r > d:
        raise ValueError(f"cycles need dimension {r} > d={d}")
    ch = simple_aes(blocks, unitaries, perm, d=d)
    return ch


def expected_peripheral(cycles) -> np.ndarray:
    """Multiset {w_a w_b^* exp(2 pi i m / n)} for the given cycles."""
    out = []
    for n_c, d_c, om in cycles:
        om = np.atleast_1d(np.asarray(om, dtype=complex))
        for a in om:
            for b in om:
                for m in range(n_c):
                    out.append(a * np.conj(b) * np.exp(2j * np.pi * m / n_c))
    return np.array(out)


# ----------------------------------------------------------------------------
# fixed structure
# ----------------------------------------------------------------------------

@dataclass
class Block:
    d1: int
    d2: int
    rho2: np.ndarray
    P: np.ndarray  # projector on C^d
    G: np.ndarray  # d x (d1 d2) isometry, tensor-ordered columns


@dataclass
class FixedStructure:
    K_dim: int
    K_basis: np.ndarray
    blocks: list
    perm: list
    unitaries: list
    residual: float
    seed: int
    notes: list = field(default_factory=list)

    def action(self, X: np.ndarray) -> np.ndarray:
        """Predicted phi(X) on the phase subspace from the block data."""
        d = self.K_basis.shape[0]
        out = np.zeros((d, d), dtype=complex)
        for i, b in enumerate(self.blocks):
            j = self.perm[i]
            x = block_first_factor(X, self.blocks[j])
            U = self.unitaries[i]
            out += b.G @ np.kron(U @ x @ dagger(U), b.rho2) @ dagger(b.G)
        return out

    def to_json(self) -> dict:
        def cm(A):
            return {"re": np.real(A).tolist(), "im": np.imag(A).tolist()}
        return {
            "K_dim": self.K_dim,
            "blocks": [{"d1": b.d1, "d2": b.d2, "rho2": cm(b.rho2)} for b in self.blocks],
            "perm": list(self.perm),
            "unitaries": [cm(U) for U in self.unitaries],
            "residual": self.residual,
            "seed": self.seed,
            "notes": list(self.notes),
        }


def block_first_factor(X: np.ndarray, b: Block) -> np.ndarray:
    """Tr_2[G^dag X G] for the block's tensor ordering."""
    Y = dagger(b.G) @ X @ b.G
    return np.einsum("ambm->ab", Y.reshape(b.d1, b.d2, b.d1, b.d2))


def fixed_structure(phi: Channel, tols: Tolerances = DEFAULT_TOLS, seed: int = 0,
                    max_retries: int = 5) -> FixedStructure:
    """Block form of the phase subspace and of phi's action on it."""
    require_cptp(phi, tols)
    d = phi.d
    pd = peripheral_data(phi, tols)
    E = from_super(pd.P)
    # K = support of E(1), the maximal fixed state of E_phi
    rho_E = hermitian_part(apply(E, np.eye(d)))
    rho_E = rho_E / np.trace(rho_E).real
    restr = restrict_to_support(E, tols, rho0=rho_E)
    VK = restr.basis
    r = VK.shape[1]
    Et = restr.channel.super
    # fixed algebra of the adjoint of the restricted E_phi
    Ad = dagger(Et) - np.eye(r * r)
    _, s, Vh = np.linalg.svd(Ad)
    null = np.conj(Vh[s <= 1e-7 * max(1.0, s[0])])
    mats = [unvec(v, r) for v in null]
    if len(mats) != pd.Q.shape[1]:
        raise StructureError(f"fixed algebra dimension {len(mats)} != phase dimension {pd.Q.shape[1]}", "algebra")
    sblocks = decompose(mats, seed=seed, max_retries=max_retries)

    blocks: list[Block] = []
    for sb in sblocks:
        G = VK @ sb.G
        Pi = G @ dagger(G)
        Y = dagger(G) @ apply(E, Pi) @ G / sb.d2
        rho2 = np.einsum("aman->mn", Y.reshape(sb.d1, sb.d2, sb.d1, sb.d2)) / sb.d1
        rho2 = hermitian_part(rho2)
        rho2 = rho2 / np.trace(rho2).real
        if np.linalg.norm(Y - np.kron(np.eye(sb.d1), rho2)) > 1e-6:
            raise StructureError("E_phi(P_i) is not 1 (x) rho2", "rho2")
        blocks.append(Block(sb.d1, sb.d2, rho2, Pi, G))

    nb = len(blocks)
    perm = [-1] * nb
    for j, bj in enumerate(blocks):
        probe = bj.G @ np.kron(np.eye(bj.d1) / bj.d1, bj.rho2) @ dagger(bj.G)
        out = apply(phi, probe)
        weights = np.array([np.trace(b.P @ out).real for b in blocks])
        i = int(np.argmax(weights))
        if weights[i] < 1 - 1e-6:
            raise StructureError(f"block {j} is spread over several output blocks {weights}", "perm")
        if perm[i] != -1:
            raise StructureError("two input blocks map to the same output block", "perm")
        perm[i] = j
    for i, j in enumerate(perm):
        if blocks[i].d1 != blocks[j].d1:
            raise StructureError("permutation pairs blocks of different d1", "perm")

    unitaries = []
    for i, bi in enumerate(blocks):
        bj = blocks[perm[i]]
        d1 = bi.d1
        # Choi matrix of x -> Tr_2[G_i^dag phi(G_j (x (x) rho2_j) G_j^dag) G_i]
        R = np.zeros((d1 * d1, d1 * d1), dtype=complex)
        for a in range(d1):
            for b in range(d1):
                Eab = np.zeros((d1, d1))
                Eab[a, b] = 1.0
                Xin = bj.G @ np.kron(Eab, bj.rho2) @ dagger(bj.G)
                R += np.kron(block_first_factor(apply(phi, Xin), bi), Eab)
        w, V = np.linalg.eigh(hermitian_part(R))
        if w[-1] < d1 - 1e-6 or (d1 > 1 and w[-2] > 1e-6):
            raise StructureError("block action is not a unitary conjugation", "unitary")
        U = np.sqrt(w[-1]) * V[:, -1].reshape(d1, d1)
        unitaries.append(_phase_fix(U))

    fs = FixedStructure(r, VK, blocks, perm, unitaries, 0.0, seed)
    res = 0.0
    for k in range(pd.Q.shape[1]):
        Z = unvec(pd.Q[:, k], d)
        res = max(res, float(np.linalg.norm(apply(phi, Z) - fs.action(Z))))
    fs.residual = res
    if res > 1e-6:
        raise StructureError(f"reconstruction residual {res:.2e}", "reconstruction")
    return fs


# ----------------------------------------------------------------------------
# aggregate
# ----------------------------------------------------------------------------

@dataclass
class Classification:
    validation: object
    spectral: object
    eb: EBVerdict
    uep: UnitaryResult
    n_index: NIndexResult
    es: ESVerdict
    aes: AESVerdict

    def to_json(self) -> dict:
        return {
            "validation": self.validation.to_json(),
            "spectral": self.spectral.to_json(),
            "eb": self.eb.to_json(),
            "uep": self.uep.to_json(),
            "n_index": self.n_index.to_json(),
            "es": self.es.to_json(),
            "aes": self.aes.to_json(),
        }


def classify(phi: Channel, n_max: int = 64, tols: Tolerances = DEFAULT_TOLS) -> Classification:
    require_cptp(phi, tols)
    return Classification(
        validation=validate_cptp(phi, tols),
        spectral=spectrum(phi, tols),
        eb=eb_verdict(phi, tols),
        uep=is_unitary(phi, tols),
        n_index=n_index(phi, n_max, tols),
        es=es_classify(phi, tols),
        aes=aes_classify(phi, tols),
    )


__all__ = [
    "AESVerdict", "Block", "Certificate", "Classification", "ESVerdict", "FixedStructure",
    "NIndexResult", "NotCPTPError", "UnitaryResult", "aes_classify", "classify", "es_classify",
    "expected_peripheral", "first_eb_power", "fixed_structure", "is_unitary", "limit_group_diagnostics",
    "n_index", "peripheral_channel_from_data", "power_multiplicity_scan", "require_cptp",
]
