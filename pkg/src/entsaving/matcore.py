"""Dense complex linear algebra used throughout the package.

Vectorization is column-stacking everywhere: ``vec(X) = X.flatten(order="F")``,
so that ``vec(A @ X @ B) == kron(B.T, A) @ vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

# default tolerances, shared by every module
POS_TOL = 1e-9
CLUSTER_TOL = 1e-7
PERI_TOL = 1e-8
COMM_TOL = 1e-7


class ConsistencyError(RuntimeError):
    """Two independent numerical routes disagreed."""


@dataclass(frozen=True)
class Tolerances:
    pos: float = POS_TOL
    spec: float = CLUSTER_TOL
    peri: float = PERI_TOL
    comm: float = COMM_TOL

    def __post_init__(self):
        for name in ("pos", "spec", "peri", "comm"):
            if not getattr(self, name) > 0:
                raise ValueError(f"tolerance {name} must be positive")

    def as_dict(self) -> dict:
        return {"pos": self.pos, "spec": self.spec, "peri": self.peri, "comm": self.comm}


DEFAULT_TOLS = Tolerances()


def vec(X: np.ndarray) -> np.ndarray:
    return np.asarray(X).flatten(order="F")


def unvec(v: np.ndarray, d: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.size)))
    return v.reshape((d, d), order="F")


def as_cmat(A, name: str = "matrix") -> np.ndarray:
    """Validate and convert to a finite 2-D complex array."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has NaN or Inf entries")
    return A


def _square(A, name="matrix") -> np.ndarray:
    A = as_cmat(A, name)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    return A


def dagger(A: np.ndarray) -> np.ndarray:
    return np.conj(A).T


def hermitian_part(A: np.ndarray) -> np.ndarray:
    return (A + dagger(A)) / 2


# ----------------------------------------------------------------------------
# eigen-decomposition
# ----------------------------------------------------------------------------

@dataclass
class Cluster:
    value: complex
    amult: int
    gmult: int
    indices: list = field(default_factory=list)


@dataclass
class EigenSystem:
    values: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    clusters: list

    def cluster_of(self, z: complex) -> Cluster | None:
        best = min(self.clusters, key=lambda c: abs(c.value - z), default=None)
        return best


def cluster_values(values: np.ndarray, tol: float) -> list[list[int]]:
    """Single-linkage grouping of ``values`` at distance ``tol``."""
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: (-abs(np.mean(values[g])), -np.angle(np.mean(values[g]))))


def kernel_dim(A: np.ndarray, tol: float) -> int:
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s <= tol))


def eig_full(A, tol_cluster: float = CLUSTER_TOL) -> EigenSystem:
    """Eigenvalues with left/right eigenvectors and clustered multiplicities.

    ``tol_cluster`` is relative to ``max(1, spectral radius)``. The geometric
    multiplicity of a cluster is the numerical kernel dimension of
    ``A - mean(cluster) * I``.
    """
    A = _square(A)
    n = A.shape[0]
    try:
        w, vl, vr = sla.eig(A, left=True, right=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise np.linalg.LinAlgError(f"eigensolver did not converge: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise np.linalg.LinAlgError("eigensolver returned non-finite eigenvalues")
    scale = max(1.0, float(np.max(np.abs(w))) if n else 1.0)
    tol = tol_cluster * scale
    anorm = max(1.0, np.linalg.norm(A, 2)) if n else 1.0
    clusters = []
    for g in cluster_values(w, tol):
        z = complex(np.mean(w[g]))
        gm = kernel_dim(A - z * np.eye(n), 10 * tol * anorm)
        gm = max(1, min(gm, len(g)))
        clusters.append(Cluster(z, len(g), gm, list(g)))
    return EigenSystem(w, vr, vl, clusters)


def invariant_subspace(A: np.ndarray, select: Callable[[complex], bool]) -> np.ndarray:
    """Orthonormal basis of the right invariant subspace for selected eigenvalues.

    Uses an ordered complex Schur form.
    """
    A = _square(A)
    T, Z, sdim = sla.schur(A, output="complex", sort=lambda z: bool(select(z)))
    return Z[:, :sdim], T[:sdim, :sdim]


def spectral_projector(A, select: Callable[[complex], bool]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Oblique projector onto the selected generalized eigenspaces.

    Returns ``(P, Q, B)`` with ``P = Q @ B``: ``Q`` is an orthonormal basis of the
    selected right invariant subspace and ``B`` the dual coordinates (``B @ Q = I``),
    built from the left invariant subspace of the same eigenvalues.
    """
    A = _square(A)
    Q, _ = invariant_subspace(A, select)
    W, _ = invariant_subspace(dagger(A), lambda z: select(np.conj(z)))
    if Q.shape[1] != W.shape[1]:
        raise np.linalg.LinAlgError("left/right invariant subspaces have different dimensions")
    if Q.shape[1] == 0:
        n = A.shape[0]
        return np.zeros((n, n), dtype=complex), Q, np.zeros((0, n), dtype=complex)
    G = dagger(W) @ Q
    B = np.linalg.solve(G, dagger(W))
    return Q @ B, Q, B


# ----------------------------------------------------------------------------
# norms and tensor structure
# ----------------------------------------------------------------------------

def schatten_norm(A, p: float = 1) -> float:
    A = as_cmat(A)
    if not p >= 1:
        raise ValueError(f"Schatten index must be >= 1, got {p}")
    s = np.linalg.svd(A, compute_uv=False)
    if np.isinf(p):
        return float(s[0]) if s.size else 0.0
    return float(np.sum(s ** p) ** (1.0 / p))


def _bipartite(R, dA: int, dB: int) -> np.ndarray:
    R = _square(R)
    if R.shape[0] != dA * dB:
        raise ValueError(f"matrix of size {R.shape[0]} does not match {dA}x{dB}")
    return R.reshape(dA, dB, dA, dB)


def partial_transpose(R, dA: int, dB: int) -> np.ndarray:
    """Transpose of the second tensor factor."""
    R4 = _bipartite(R, dA, dB)
    return R4.transpose(0, 3, 2, 1).reshape(dA * dB, dA * dB)


def partial_trace(R, dA: int, dB: int, side: str = "second") -> np.ndarray:
    """Trace out the ``first`` or ``second`` factor of a ``dA*dB`` square matrix."""
    R4 = _bipartite(R, dA, dB)
    if side == "second":
        return np.einsum("ijkj->ik", R4)
    if side == "first":
        return np.einsum("ijil->jl", R4)
    raise ValueError(f"side must be 'first' or 'second', got {side!r}")


# ----------------------------------------------------------------------------
# positive semidefinite helpers
# ----------------------------------------------------------------------------

@dataclass
class PSDInfo:
    min_eig: float
    sqrt: np.ndarray
    inv_sqrt_on_support: np.ndarray
    support_projector: np.ndarray
    support_basis: np.ndarray
    rank: int


def psd_utils(A, tol: float = POS_TOL, herm_tol: float = 1e-8) -> PSDInfo:
    """Square root, support and pseudo-inverse square root of a PSD matrix.

    Eigenvalues in ``[-tol, tol]`` count as zero; ``min_eig`` is clamped to 0 there.
    """
    A = _square(A)
    scale = max(1.0, np.linalg.norm(A))
    if np.linalg.norm(A - dagger(A)) > herm_tol * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    w, V = np.linalg.eigh(hermitian_part(A))
    min_eig = float(w[0]) if w.size else 0.0
    if abs(min_eig) <= tol:
        min_eig = 0.0
    on = w > tol
    wp = np.where(on, w, 0.0)
    sqrt = (V * np.sqrt(wp)) @ dagger(V)
    inv = np.where(on, 1.0 / np.sqrt(np.where(on, w, 1.0)), 0.0)
    inv_sqrt = (V * inv) @ dagger(V)
    basis = V[:, on][:, ::-1]
    return PSDInfo(min_eig, sqrt, inv_sqrt, basis @ dagger(basis), basis, int(on.sum()))


def min_eig_h(A: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitian_part(A))[0])


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return haar_isometry(d, d, rng)


def haar_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    G = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)
    Q, R = np.linalg.qr(G)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = d if rank is None else rank
    G = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = G @ dagger(G)
    return rho / np.trace(rho).real
