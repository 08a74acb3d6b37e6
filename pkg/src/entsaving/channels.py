"""Channel data model, representation conversions and channel families.

A :class:`Channel` wraps any linear map on d x d matrices (CP or not). The
Choi matrix uses the trace-one convention

    R = (phi (x) id)(|e><e|),   |e> = d**-1/2 sum_i |i>|i>,

with the output space as the *first* tensor factor. Many libraries use the
unnormalized (trace-d) version instead; the qubit test ``||R||_inf <= 1/2``
only holds with trace one.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Sequence

import numpy as np

from .matcore import (
    DEFAULT_TOLS,
    POS_TOL,
    Tolerances,
    _square,
    as_cmat,
    dagger,
    haar_isometry,
    partial_trace,
    vec,
)

PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


class ParameterError(ValueError):
    """A family generator received parameters outside its allowed range."""


# ----------------------------------------------------------------------------
# plain data types
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class BlochAffine:
    M: np.ndarray
    c: np.ndarray


@dataclass
class HolevoForm:
    states: list
    effects: list

    def __post_init__(self):
        self.states = [as_cmat(r, "state") for r in self.states]
        self.effects = [as_cmat(e, "effect") for e in self.effects]
        if len(self.states) != len(self.effects) or not self.states:
            raise ValueError("need equally many (at least one) states and effects")
        d = self.states[0].shape[0]
        for r in self.states:
            check_density(r, d)
        for e in self.effects:
            if e.shape != (d, d):
                raise ValueError("effect shape does not match state dimension")
            if np.linalg.norm(e - dagger(e)) > 1e-10 or np.linalg.eigvalsh((e + dagger(e)) / 2)[0] < -POS_TOL:
                raise ValueError("effects must be positive semidefinite")
        if np.linalg.norm(sum(self.effects) - np.eye(d)) > 1e-10:
            raise ValueError("effects do not sum to the identity")

    @property
    def d(self) -> int:
        return self.states[0].shape[0]


@dataclass(frozen=True)
class Provenance:
    """How a channel was built; ``eb_certified`` marks a measure-and-prepare origin."""

    kind: str
    data: dict = field(default_factory=dict)
    eb_certified: bool = False

    def to_json(self) -> dict:
        return {"kind": self.kind, "eb_certified": self.eb_certified, "data": _jsonable(self.data)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        x = np.asarray(x)
        if np.iscomplexobj(x):
            return {"re": x.real.tolist(), "im": x.imag.tolist()}
        return x.tolist()
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def check_density(rho, d: int | None = None, tol: float = 1e-10) -> np.ndarray:
    rho = _square(rho, "density matrix")
    if d is not None and rho.shape[0] != d:
        raise ValueError(f"density matrix must be {d}x{d}")
    if np.linalg.norm(rho - dagger(rho)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError("density matrix does not have unit trace")
    if np.linalg.eigvalsh((rho + dagger(rho)) / 2)[0] < -POS_TOL:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


# ----------------------------------------------------------------------------
# representation conversions (module-level, pure)
# ----------------------------------------------------------------------------

def kraus_to_super(ops: Sequence[np.ndarray]) -> np.ndarray:
    return sum(np.kron(np.conj(K), K) for K in ops)


def super_to_choi(S: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(S.shape[0])))
    S4 = S.reshape(d, d, d, d)
    return S4.transpose(1, 3, 0, 2).reshape(d * d, d * d) / d


def choi_to_super(R: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(R.shape[0])))
    R4 = R.reshape(d, d, d, d)
    return d * R4.transpose(2, 0, 3, 1).reshape(d * d, d * d)


def choi_to_kraus(R: np.ndarray, tol: float = POS_TOL) -> list[np.ndarray]:
    """Kraus operators from the eigenvectors of a PSD Choi matrix with eigenvalue > tol."""
    d = int(round(np.sqrt(R.shape[0])))
    w, V = np.linalg.eigh((R + dagger(R)) / 2)
    if w[0] < -tol:
        raise ValueError(f"map is not completely positive (min Choi eigenvalue {w[0]:.3e})")
    ops = [np.sqrt(d * w[k]) * V[:, k].reshape(d, d) for k in range(len(w) - 1, -1, -1) if w[k] > tol]
    if not ops:
        ops = [np.zeros((d, d), dtype=complex)]
    return ops


def bloch_to_super(M: np.ndarray, c: np.ndarray) -> np.ndarray:
    T = np.zeros((4, 4))
    T[0, 0] = 1.0
    T[1:, 0] = c
    T[1:, 1:] = M
    vs = [vec(P) for P in PAULI]
    S = np.zeros((4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            if T[i, j] != 0:
                S += T[i, j] / 2 * np.outer(vs[i], np.conj(vs[j]))
    return S


def super_to_ptm(S: np.ndarray) -> np.ndarray:
    """Pauli transfer matrix T_ij = Tr[s_i phi(s_j)] / 2 of a qubit map."""
    vs = [vec(P) for P in PAULI]
    T = np.array([[np.vdot(vs[i], S @ vs[j]) / 2 for j in range(4)] for i in range(4)])
    return T


# ----------------------------------------------------------------------------
# the Channel type
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Validation:
    cp: bool
    tp: bool
    min_choi_eig: float
    tp_residual: float

    def to_json(self) -> dict:
        return {"cp": self.cp, "tp": self.tp, "min_choi_eig": self.min_choi_eig, "tp_residual": self.tp_residual}


class Channel:
    """A linear map on d x d matrices with lazily cached representations.

    Build through :func:`from_kraus`, :func:`from_choi`, :func:`from_super` or
    :func:`from_bloch`. Instances are treated as immutable.
    """

    def __init__(self, d: int, kind: str, data, provenance: Provenance | None = None):
        if d < 1:
            raise ValueError("dimension must be positive")
        self.d = int(d)
        self._kind = kind
        self._data = data
        self.provenance = provenance

    def __repr__(self):
        prov = f", provenance={self.provenance.kind}" if self.provenance else ""
        return f"Channel(d={self.d}, from={self._kind}{prov})"

    @cached_property
    def super(self) -> np.ndarray:
        if self._kind == "super":
            S = self._data
        elif self._kind == "kraus":
            S = kraus_to_super(self._data)
        elif self._kind == "choi":
            S = choi_to_super(self._data)
        else:
            S = bloch_to_super(*self._data)
        S = np.array(S, dtype=complex)
        S.setflags(write=False)
        return S

    @cached_property
    def choi(self) -> np.ndarray:
        R = self._data if self._kind == "choi" else super_to_choi(self.super)
        R = np.array(R, dtype=complex)
        R.setflags(write=False)
        return R

    @cached_property
    def kraus(self) -> list[np.ndarray]:
        if self._kind == "kraus":
            return [np.array(K) for K in self._data]
        return choi_to_kraus(self.choi)

    @cached_property
    def bloch(self) -> BlochAffine:
        if self.d != 2:
            raise ValueError("Bloch representation exists only for qubit maps")
        if self._kind == "bloch":
            M, c = self._data
            return BlochAffine(np.array(M, dtype=float), np.array(c, dtype=float))
        T = super_to_ptm(self.super)
        if np.max(np.abs(T.imag)) > 1e-10:
            raise ValueError("map is not Hermiticity preserving; no real Bloch form")
        T = T.real
        if np.linalg.norm(T[0] - [1, 0, 0, 0]) > 1e-10:
            raise ValueError("map is not trace preserving; no affine Bloch form")
        return BlochAffine(T[1:, 1:].copy(), T[1:, 0].copy())

    @cached_property
    def validation(self) -> Validation:
        return validate_cptp(self)

    @property
    def is_cptp(self) -> bool:
        v = self.validation
        return v.cp and v.tp

    @property
    def eb_certified(self) -> bool:
        return bool(self.provenance and self.provenance.eb_certified)

    def __call__(self, X) -> np.ndarray:
        return apply(self, X)

    def allclose(self, other: "Channel", tol: float = 1e-10) -> bool:
        return superop_distance(self, other) <= tol * max(1.0, np.linalg.norm(self.super))


def _make(d: int, kind: str, data, provenance) -> Channel:
    return Channel(d, kind, data, provenance)


def from_kraus(ops, provenance: Provenance | None = None) -> Channel:
    ops = [as_cmat(K, "Kraus operator") for K in ops]
    if not ops:
        raise ValueError("need at least one Kraus operator")
    d = ops[0].shape[0]
    for K in ops:
        if K.shape != (d, d):
            raise ValueError(f"Kraus operators must all be {d}x{d}; got {K.shape}")
    return _make(d, "kraus", ops, provenance)


def _dim_from_square(n: int, what: str) -> int:
    d = int(round(np.sqrt(n)))
    if d * d != n:
        raise ValueError(f"{what} size {n} is not a perfect square")
    return d


def from_choi(R, provenance: Provenance | None = None) -> Channel:
    R = _square(R, "Choi matrix")
    return _make(_dim_from_square(R.shape[0], "Choi matrix"), "choi", R, provenance)


def from_super(S, provenance: Provenance | None = None) -> Channel:
    S = _square(S, "superoperator")
    return _make(_dim_from_square(S.shape[0], "superoperator"), "super", S, provenance)


def from_bloch(M, c, provenance: Provenance | None = None) -> Channel:
    M = np.asarray(M)
    c = np.asarray(c)
    if M.shape != (3, 3) or c.shape != (3,):
        raise ValueError("Bloch data must be a 3x3 matrix and a 3-vector")
    if np.iscomplexobj(M) and np.any(M.imag) or np.iscomplexobj(c) and np.any(c.imag):
        raise ValueError("Bloch data must be real")
    M = M.real.astype(float)
    c = c.real.astype(float)
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(c))):
        raise ValueError("Bloch data has NaN or Inf entries")
    return _make(2, "bloch", (M, c), provenance)


# ----------------------------------------------------------------------------
# algebra of channels
# ----------------------------------------------------------------------------

def apply(phi: Channel, X) -> np.ndarray:
    X = _square(X, "input")
    if X.shape[0] != phi.d:
        raise ValueError(f"input is {X.shape[0]}x{X.shape[0]}, channel acts on {phi.d}x{phi.d}")
    return (phi.super @ vec(X)).reshape(phi.d, phi.d, order="F")


def _compose_prov(phi: Channel, psi: Channel) -> Provenance | None:
    # EB o CP and CP o EB stay EB
    if (phi.eb_certified and psi.validation.cp) or (psi.eb_certified and phi.validation.cp):
        return Provenance("composition", {}, eb_certified=True)
    return None


def compose(phi: Channel, psi: Channel) -> Channel:
    """The map X -> phi(psi(X))."""
    if phi.d != psi.d:
        raise ValueError(f"cannot compose maps on dimensions {phi.d} and {psi.d}")
    return from_super(phi.super @ psi.super, _compose_prov(phi, psi))


def identity_channel(d: int) -> Channel:
    return from_kraus([np.eye(d)], Provenance("unitary", {"U": np.eye(d)}))


def power(phi: Channel, n: int) -> Channel:
    if int(n) != n or n < 0:
        raise ValueError("power needs a non-negative integer")
    n = int(n)
    if n == 0:
        return identity_channel(phi.d)
    S = np.linalg.matrix_power(phi.super, n)
    prov = None
    if phi.eb_certified:
        prov = Provenance("power", {"n": n}, eb_certified=True)
    elif phi.provenance and phi.provenance.kind == "unitary":
        U = np.asarray(phi.provenance.data["U"])
        prov = Provenance("unitary", {"U": np.linalg.matrix_power(U, n)})
    return from_super(S, prov)


def adjoint(phi: Channel) -> Channel:
    """Heisenberg-picture map: Tr[A^dag phi(B)] = Tr[adjoint(phi)(A)^dag B]."""
    return from_super(dagger(phi.super))


def superop_distance(phi: Channel, psi: Channel) -> float:
    if phi.d != psi.d:
        raise ValueError("dimension mismatch")
    return float(np.linalg.norm(phi.super - psi.super))


def validate_cptp(phi: Channel, tols: Tolerances = DEFAULT_TOLS) -> Validation:
    R = phi.choi
    min_eig = float(np.linalg.eigvalsh((R + dagger(R)) / 2)[0])
    tp_res = float(np.linalg.norm(partial_trace(R, phi.d, phi.d, side="first") - np.eye(phi.d) / phi.d))
    return Validation(min_eig >= -tols.pos, tp_res <= tols.pos, min_eig, tp_res)


def kraus_tp_residual(ops) -> float:
    d = ops[0].shape[0]
    return float(np.linalg.norm(sum(dagger(K) @ K for K in ops) - np.eye(d)))


# ----------------------------------------------------------------------------
# families
# ----------------------------------------------------------------------------

def unitary_channel(U) -> Channel:
    U = _square(U, "unitary")
    if np.linalg.norm(dagger(U) @ U - np.eye(U.shape[0])) > 1e-10:
        raise ParameterError("matrix is not unitary within 1e-10")
    return from_kraus([U], Provenance("unitary", {"U": U}))


def transpose_map(d: int) -> Channel:
    """X -> X^T, positive and trace preserving but not CP."""
    S = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            S[j + d * i, i + d * j] = 1.0
    return from_super(S, Provenance("transpose", {"d": d}))


def holevo_channel(h: HolevoForm) -> Channel:
    S = sum(np.outer(vec(r), vec(E.T)) for r, E in zip(h.states, h.effects))
    prov = Provenance("holevo", {"states": h.states, "effects": h.effects}, eb_certified=True)
    return from_super(S, prov)


def depolarize_to(rho0) -> Channel:
    """X -> rho0 Tr X."""
    rho0 = check_density(rho0)
    return holevo_channel(HolevoForm([rho0], [np.eye(rho0.shape[0])]))


def random_cptp(d: int, kraus_rank: int, seed: int | None = None) -> Channel:
    """Seeded random channel: Kraus blocks of a Haar isometry C^d -> C^(d r)."""
    if d < 1 or kraus_rank < 1:
        raise ParameterError("need d >= 1 and kraus_rank >= 1")
    rng = np.random.default_rng(seed)
    V = haar_isometry(d * kraus_rank, d, rng)
    ops = [V[k * d:(k + 1) * d, :] for k in range(kraus_rank)]
    return from_kraus(ops, Provenance("random", {"d": d, "kraus_rank": kraus_rank, "seed": seed}))


def random_holevo(d: int, n_outcomes: int, seed: int | None = None, states=None) -> Channel:
    """Random measure-and-prepare channel; ``states`` overrides the prepared states."""
    rng = np.random.default_rng(seed)
    V = haar_isometry(d * n_outcomes, d, rng)
    effects = [dagger(V[k * d:(k + 1) * d]) @ V[k * d:(k + 1) * d] for k in range(n_outcomes)]
    if states is None:
        from .matcore import random_density
        states = [random_density(d, rng) for _ in range(n_outcomes)]
    # absorb round-off in the last effect
    effects[-1] = effects[-1] + (np.eye(d) - sum(effects))
    return holevo_channel(HolevoForm(states, effects))


def phi_plus(lam: float, theta: float, alpha: float, mu: float, validate: bool = True) -> Channel:
    """Qubit map fixing |0><0|; see the README for its matrix action.

    With ``validate=False`` the parameters are not range-checked, so non-CP
    members of the affine family can be built for boundary tests.
    """
    if validate:
        if not 0 < lam <= 1:
            raise ParameterError(f"need 0 < lambda <= 1, got {lam}")
        if not lam ** 2 - 1e-12 <= mu <= 1:
            raise ParameterError(f"need lambda^2 <= mu <= 1, got lambda^2={lam**2}, mu={mu}")
        if alpha < 0:
            raise ParameterError(f"need alpha >= 0, got {alpha}")
        bound = (1 - mu) * (mu - lam ** 2)
        if alpha ** 2 > bound + 1e-12:
            raise ParameterError(f"complete positivity needs alpha^2 <= (1-mu)(mu-lambda^2): {alpha**2} > {bound}")
    ct, st = np.cos(theta), np.sin(theta)
    M = np.array([[lam * ct, lam * st, alpha], [-lam * st, lam * ct, 0.0], [0.0, 0.0, mu]])
    c = np.array([-alpha, 0.0, 1 - mu])
    prov = Provenance("phi_plus", {"lam": lam, "theta": theta, "alpha": alpha, "mu": mu})
    return from_bloch(M, c, prov)


def phi_minus(lam: float, theta: float, validate: bool = True) -> Channel:
    """Unital qubit map inverting the Bloch z axis."""
    if validate and not 0 < lam <= 1:
        raise ParameterError(f"need 0 < lambda <= 1, got {lam}")
    ct, st = np.cos(theta), np.sin(theta)
    M = np.array([[lam * ct, lam * st, 0.0], [lam * st, -lam * ct, 0.0], [0.0, 0.0, -1.0]])
    return from_bloch(M, np.zeros(3), Provenance("phi_minus", {"lam": lam, "theta": theta}))


def amplitude_damping(p: float) -> Channel:
    """AD_p: keeps a fraction p of the excited population."""
    if not 0 <= p <= 1:
        raise ParameterError(f"need 0 <= p <= 1, got {p}")
    K0 = np.array([[1, 0], [0, np.sqrt(p)]])
    K1 = np.array([[0, np.sqrt(1 - p)], [0, 0]])
    ops = [K0] if p == 1 else [K0, K1]
    return from_kraus(ops, Provenance("amplitude_damping", {"p": p}))


def depolarizing(lam: float, d: int = 2) -> Channel:
    """X -> lam X + (1 - lam) Tr[X] 1/d."""
    if not -1 / (d * d - 1) <= lam <= 1:
        raise ParameterError(f"depolarizing parameter {lam} outside the CP range")
    S = lam * np.eye(d * d) + (1 - lam) * np.outer(vec(np.eye(d) / d), vec(np.eye(d)))
    return from_super(S, Provenance("depolarizing", {"lam": lam, "d": d}))


# ----------------------------------------------------------------------------
# simple asymptotically entanglement-saving maps
# ----------------------------------------------------------------------------

def _block_state(d2: int, rho2) -> np.ndarray:
    if rho2 is None or np.isscalar(rho2):
        if d2 != 1:
            raise ParameterError("blocks with d2 > 1 need an explicit density matrix")
        return np.ones((1, 1), dtype=complex)
    return check_density(np.atleast_2d(rho2), d2)


def simple_aes(blocks, unitaries=None, perm=None, d: int | None = None, basis=None) -> Channel:
    """Channel acting as a permutation of blocks followed by block unitaries.

    ``blocks`` is a list of ``(d1, d2, rho2)``; block i occupies a
    ``d1*d2``-dimensional slice of the space, ordered as (first factor, second
    factor). On input the second factor of block ``perm[i]`` is traced out,
    ``unitaries[i]`` is applied and ``rho2`` of block i is attached. If ``d``
    exceeds the block total, the complement is measured and re-prepared inside
    block 0. ``basis`` (a d x d unitary) rotates the whole construction.
    """
    blocks = [(int(b[0]), int(b[1]), _block_state(int(b[1]), b[2] if len(b) > 2 else None)) for b in blocks]
    if not blocks:
        raise ParameterError("need at least one block")
    nb = len(blocks)
    perm = list(range(nb)) if perm is None else [int(p) for p in perm]
    if sorted(perm) != list(range(nb)):
        raise ParameterError(f"{perm} is not a permutation of {nb} blocks")
    for i, j in enumerate(perm):
        if blocks[i][0] != blocks[j][0]:
            raise ParameterError(f"permutation pairs blocks {i} and {j} with different d1")
    if unitaries is None:
        unitaries = [np.eye(b[0]) for b in blocks]
    if len(unitaries) != nb:
        raise ParameterError("need one unitary per block")
    unitaries = [_square(U, "block unitary") for U in unitaries]
    for U, (d1, _, _) in zip(unitaries, blocks):
        if U.shape != (d1, d1) or np.linalg.norm(dagger(U) @ U - np.eye(d1)) > 1e-10:
            raise ParameterError(f"block unitary must be a {d1}x{d1} unitary")
    r = sum(d1 * d2 for d1, d2, _ in blocks)
    d = r if d is None else int(d)
    if d < r:
        raise ParameterError(f"blocks need dimension {r} > d={d}")
    W = np.eye(d) if basis is None else _square(basis, "basis")
    if W.shape != (d, d) or np.linalg.norm(dagger(W) @ W - np.eye(d)) > 1e-10:
        raise ParameterError("basis must be a d x d unitary")

    offsets = np.cumsum([0] + [d1 * d2 for d1, d2, _ in blocks])
    G = [W[:, offsets[i]:offsets[i + 1]] for i in range(nb)]
    ops = []
    for i, (d1, d2, rho2) in enumerate(blocks):
        j = perm[i]
        d2j = blocks[j][1]
        p, R = np.linalg.eigh(rho2)
        for m in range(d2j):
            bra_m = np.kron(np.eye(d1), np.eye(d2j)[m:m + 1, :])  # 1 (x) <m|
            for pl, rl in zip(p, R.T):
                if pl <= 1e-14:
                    continue
                ket = np.kron(unitaries[i], np.sqrt(pl) * rl.reshape(d2, 1))
                ops.append(G[i] @ ket @ bra_m @ dagger(G[j]))
    if d > r:
        d1, d2, rho2 = blocks[0]
        target = np.kron(np.eye(d1)[:, :1], np.eye(d2))  # |0> (x) 1
        p, R = np.linalg.eigh(rho2)
        comp = W[:, r:]
        for pl, rl in zip(p, R.T):
            if pl <= 1e-14:
                continue
            for k in range(d - r):
                ops.append(np.sqrt(pl) * G[0] @ target @ rl.reshape(d2, 1) @ dagger(comp[:, k:k + 1]))
    data = {
        "blocks": [(d1, d2, rho2) for d1, d2, rho2 in blocks],
        "unitaries": unitaries,
        "perm": perm,
        "d": d,
        "basis": W,
    }
    return from_kraus(ops, Provenance("simple_aes", data))


def simple_aes_census(blocks) -> tuple[int, int, int]:
    """(unit-modulus, first-kind zero, second-kind zero) eigenvalue counts."""
    dims = [(int(b[0]), int(b[1])) for b in blocks]
    unit = sum(d1 * d1 for d1, _ in dims)
    first = sum(d1 * d1 * (d2 * d2 - 1) for d1, d2 in dims)
    sizes = [d1 * d2 for d1, d2 in dims]
    second = sum(sizes[i] * sizes[j] for i in range(len(sizes)) for j in range(len(sizes)) if i != j)
    return unit, first, second


# ----------------------------------------------------------------------------
# JSON schema
# ----------------------------------------------------------------------------

REPR_KINDS = ("kraus", "choi", "super", "bloch")


class SchemaError(ValueError):
    """Channel JSON does not follow the schema; ``field`` names the offending path."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


def _cm_to_json(A: np.ndarray) -> dict:
    A = np.asarray(A, dtype=complex)
    return {"re": A.real.tolist(), "im": A.imag.tolist()}


def _cm_from_json(obj, where: str) -> np.ndarray:
    if not isinstance(obj, dict) or "re" not in obj:
        raise SchemaError("expected an object with 're' (and optional 'im')", where)
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"non-numeric entries ({exc})", where) from None
    if re.ndim != 2 or re.shape != im.shape:
        raise SchemaError(f"'re'/'im' must be equal-shape 2-D arrays, got {re.shape} and {im.shape}", where)
    return re + 1j * im


def channel_to_json(phi: Channel, kind: str | None = None) -> dict:
    kind = kind or phi._kind
    if kind == "kraus":
        rep = {"kind": "kraus", "ops": [_cm_to_json(K) for K in phi.kraus]}
    elif kind == "choi":
        rep = {"kind": "choi", **_cm_to_json(phi.choi)}
    elif kind == "super":
        rep = {"kind": "super", **_cm_to_json(phi.super)}
    elif kind == "bloch":
        b = phi.bloch
        rep = {"kind": "bloch", "M": b.M.tolist(), "c": b.c.tolist()}
    else:
        raise SchemaError(f"unknown representation kind {kind!r}", "repr.kind")
    out: dict[str, Any] = {"d": phi.d, "repr": rep}
    if phi.provenance is not None:
        out["provenance"] = phi.provenance.to_json()
    return out


def channel_from_json(obj) -> Channel:
    if not isinstance(obj, dict):
        raise SchemaError("top level must be an object")
    if "d" not in obj or not isinstance(obj["d"], int) or isinstance(obj["d"], bool) or obj["d"] < 1:
        raise SchemaError("must be a positive integer", "d")
    if "repr" not in obj or not isinstance(obj["repr"], dict):
        raise SchemaError("missing representation object", "repr")
    d = obj["d"]
    rep = obj["repr"]
    kind = rep.get("kind")
    if kind not in REPR_KINDS:
        raise SchemaError(f"unknown representation kind {kind!r}", "repr.kind")
    prov = None
    holevo = None
    if "provenance" in obj:
        p = obj["provenance"]
        if not isinstance(p, dict) or "kind" not in p:
            raise SchemaError("provenance must be an object with a 'kind'", "provenance")
        # a JSON claim is not a proof: only Holevo data that reproduces the map is certified
        prov = Provenance(str(p["kind"]), {"from_file": True}, eb_certified=False)
        holevo = _holevo_from_provenance(p)
    try:
        if kind == "kraus":
            ops = rep.get("ops")
            if not isinstance(ops, list) or not ops:
                raise SchemaError("must be a non-empty list", "repr.ops")
            mats = [_cm_from_json(o, f"repr.ops[{k}]") for k, o in enumerate(ops)]
            phi = from_kraus(mats, prov)
        elif kind == "choi":
            phi = from_choi(_cm_from_json(rep, "repr"), prov)
        elif kind == "super":
            phi = from_super(_cm_from_json(rep, "repr"), prov)
        else:
            if "M" not in rep or "c" not in rep:
                raise SchemaError("bloch needs 'M' and 'c'", "repr")
            try:
                M = np.asarray(rep["M"], dtype=float)
                c = np.asarray(rep["c"], dtype=float)
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"non-numeric entries ({exc})", "repr") from None
            phi = from_bloch(M, c, prov)
    except SchemaError:
        raise
    except ValueError as exc:
        raise SchemaError(str(exc), "repr") from None
    if phi.d != d:
        raise SchemaError(f"declared d={d} but representation has d={phi.d}", "d")
    if prov is not None and holevo is not None and holevo.d == d:
        ref = holevo_channel(holevo)
        if superop_distance(ref, phi) <= 1e-10 * max(1.0, np.linalg.norm(ref.super)):
            phi = Channel(phi.d, phi._kind, phi._data, ref.provenance)
    return phi


def _holevo_from_provenance(p: dict) -> HolevoForm | None:
    if p.get("kind") != "holevo":
        return None
    data = p.get("data", {})
    try:
        states = [_cm_from_json(s, "provenance.data.states") for s in data["states"]]
        effects = [_cm_from_json(e, "provenance.data.effects") for e in data["effects"]]
        return HolevoForm(states, effects)
    except (KeyError, TypeError, ValueError):
        return None


def dumps_channel(phi: Channel, kind: str | None = None) -> str:
    return json.dumps(channel_to_json(phi, kind), indent=1, sort_keys=True)


def loads_channel(text: str) -> Channel:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON ({exc})") from None
    return channel_from_json(obj)
