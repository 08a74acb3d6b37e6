"""Block decomposition of finite-dimensional matrix *-algebras.

An algebra is given by a spanning list of square matrices. The decomposition
returns, for each simple summand M_{d1} (x) 1_{d2}, an isometry ``G`` whose
columns are ordered as (first factor, second factor) so that every algebra
element A satisfies ``G^dag A G = a (x) 1_{d2}``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matcore import cluster_values, dagger, hermitian_part


class StructureError(RuntimeError):
    """Decomposition failed; ``stage`` names the step."""

    def __init__(self, message: str, stage: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def orthonormal_span(mats, tol: float = 1e-9) -> np.ndarray:
    """Columns: orthonormal basis (in vec form) of the span of ``mats``."""
    A = np.column_stack([np.asarray(m).ravel() for m in mats])
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))
    return U[:, :r]


def closure_residual(basis: np.ndarray, n: int) -> float:
    """Largest distance of a product (or adjoint) of basis elements from the span."""
    mats = [basis[:, k].reshape(n, n) for k in range(basis.shape[1])]
    res = 0.0
    for A in mats:
        for X in [dagger(A)] + [A @ B for B in mats]:
            x = X.ravel()
            res = max(res, float(np.linalg.norm(x - basis @ (dagger(basis) @ x))))
    return res


def center(basis: np.ndarray, n: int, tol: float = 1e-8) -> list[np.ndarray]:
    """Elements of the algebra commuting with all of it."""
    mats = [basis[:, k].reshape(n, n) for k in range(basis.shape[1])]
    rows = []
    for B in mats:
        rows.append(np.column_stack([(A @ B - B @ A).ravel() for A in mats]))
    C = np.vstack(rows)
    _, s, Vh = np.linalg.svd(C)
    m = len(mats)
    s_full = np.concatenate([s, np.zeros(m - len(s))]) if len(s) < m else s
    null = Vh[s_full <= tol * max(1.0, s_full[0])]
    return [sum(v[k] * mats[k] for k in range(m)) for v in np.conj(null)]


@dataclass
class SimpleBlock:
    d1: int
    d2: int
    G: np.ndarray  # n x (d1 d2) isometry, columns ordered (a, m) -> a*d2 + m


def _eig_groups(H: np.ndarray, tol: float):
    w, V = np.linalg.eigh(H)
    groups = cluster_values(w.astype(complex), tol)
    groups.sort(key=lambda g: w[g[0]])
    return w, V, groups


def _random_hermitian(mats, rng) -> np.ndarray:
    H = sum(rng.standard_normal() * hermitian_part(A) + rng.standard_normal() * hermitian_part(1j * A) for A in mats)
    return H / max(np.linalg.norm(H), 1e-300)


def decompose(mats, seed: int = 0, max_retries: int = 5, tol: float = 1e-7) -> list[SimpleBlock]:
    """Wedderburn decomposition of the *-algebra spanned by ``mats``."""
    mats = [np.asarray(m, dtype=complex) for m in mats]
    n = mats[0].shape[0]
    basis = orthonormal_span(mats)
    res = closure_residual(basis, n)
    if res > 1e-6:
        raise StructureError(f"span is not closed under products (residual {res:.2e})", "closure")
    amats = [basis[:, k].reshape(n, n) for k in range(basis.shape[1])]
    cen = center(basis, n)
    if not cen:
        raise StructureError("empty center", "center")
    rng = np.random.default_rng(seed)
    last = None
    for attempt in range(max_retries):
        try:
            return _decompose_once(amats, cen, n, rng, tol)
        except StructureError as exc:  # degenerate random draw
            last = exc
    raise StructureError(f"retries exhausted: {last}", last.stage if last else "blocks")


def _decompose_once(amats, cen, n, rng, tol) -> list[SimpleBlock]:
    # coarse blocks: eigenspaces of a random Hermitian central element
    Z = _random_hermitian(cen, rng)
    w, V, groups = _eig_groups(Z, tol)
    if len(groups) != len(cen):
        raise StructureError(f"{len(groups)} eigenvalue groups for a {len(cen)}-dimensional center", "center")
    gap = min((abs(w[g[0]] - w[h[0]]) for g in groups for h in groups if g is not h), default=1.0)
    if gap < 1e3 * tol:
        raise StructureError("central eigenvalues too close", "center")
    blocks = []
    H = _random_hermitian(amats, rng)
    Y = sum((rng.standard_normal() + 1j * rng.standard_normal()) * A for A in amats)
    for g in groups:
        Vi = V[:, g]
        Hi = dagger(Vi) @ H @ Vi
        wi, Wi, sub = _eig_groups(Hi, tol)
        sizes = {len(s) for s in sub}
        if len(sizes) != 1:
            raise StructureError(f"unequal eigenvalue multiplicities {sorted(len(s) for s in sub)}", "multiplicity")
        d2 = sizes.pop()
        d1 = len(sub)
        if d1 > 1:
            sgap = min(abs(wi[a[0]] - wi[b[0]]) for a in sub for b in sub if a is not b)
            if sgap < 1e3 * tol:
                raise StructureError("block eigenvalues too close", "multiplicity")
        F = [Vi @ Wi[:, s] for s in sub]  # each n x d2
        Yi = Y
        cols = [F[0]]
        for a in range(1, d1):
            # Pi_a Y Pi_1 is a multiple of the matrix unit |a><1| (x) 1
            E = F[a] @ (dagger(F[a]) @ Yi @ F[0])
            nrm = np.linalg.norm(E) / np.sqrt(d2)
            if nrm < 1e-6:
                raise StructureError("degenerate matrix-unit probe", "alignment")
            cols.append(E / nrm)
        G = np.column_stack([c[:, m] for c in cols for m in range(d2)])
        # orthonormality sanity check (columns ordered a*d2 + m)
        err = np.linalg.norm(dagger(G) @ G - np.eye(d1 * d2))
        if err > 1e-6:
            raise StructureError(f"tensor basis not orthonormal ({err:.2e})", "alignment")
        blocks.append(SimpleBlock(d1, d2, G))
    return blocks
