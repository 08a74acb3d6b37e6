"""Qubit channels in the Bloch picture: r -> M r + c."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import Channel, from_bloch, phi_minus, phi_plus


@dataclass(frozen=True)
class CanonicalForm:
    P: np.ndarray
    L: np.ndarray
    Q: np.ndarray
    l: np.ndarray
    t: np.ndarray | None
    sign_det: int


def special_svd(M, c=None) -> CanonicalForm:
    """M = P L Q with P, Q in SO(3) and L = diag(s1, s2, sgn(det M) s3)."""
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise ValueError("need a real 3x3 matrix")
    U, s, Vt = np.linalg.svd(M)
    l = s.copy()
    # move negative determinants of the rotation factors into the last value
    if np.linalg.det(U) < 0:
        U[:, 2] *= -1
        l[2] *= -1
    if np.linalg.det(Vt) < 0:
        Vt[2, :] *= -1
        l[2] *= -1
    det = np.linalg.det(M)
    sd = 0 if s[2] <= 1e-14 * max(1.0, s[0]) else int(np.sign(det))
    t = None if c is None else U.T @ np.asarray(c, dtype=float)
    return CanonicalForm(U, np.diag(l), Vt, l, t, sd)


def bloch_of(phi: Channel) -> tuple[np.ndarray, np.ndarray]:
    b = phi.bloch
    return b.M, b.c


@dataclass(frozen=True)
class PureFixResult:
    kind: str  # "Fix", "Invert" or "Neither"
    n: np.ndarray | None
    residual: float


def _null_vectors(A: np.ndarray, tol: float) -> np.ndarray:
    _, s, Vt = np.linalg.svd(A)
    return Vt[s <= tol].T


def fixes_or_inverts_pure(phi: Channel, tol: float = 1e-7, null_tol: float = 1e-8) -> PureFixResult:
    """Look for a unit Bloch vector n with M n + c = n (Fix) or, if c = 0, M n = -n (Invert)."""
    M, c = bloch_of(phi)
    A = np.eye(3) - M
    n0, *_ = np.linalg.lstsq(A, c, rcond=None)
    consistent = np.linalg.norm(A @ n0 - c) <= tol
    if consistent:
        K = _null_vectors(A, null_tol)
        r0 = np.linalg.norm(n0)
        if K.shape[1] == 0:
            if abs(r0 - 1) <= tol:
                n = n0 / r0
                return PureFixResult("Fix", n, float(np.linalg.norm(M @ n + c - n)))
        elif r0 <= 1 + tol:
            # n0 is orthogonal to the kernel, so the kernel direction can fill up to unit norm
            y = np.sqrt(max(0.0, 1 - r0 * r0))
            k = K[:, 0] * np.sign(K[np.argmax(np.abs(K[:, 0])), 0])
            n = n0 + y * k
            n = n / np.linalg.norm(n)
            return PureFixResult("Fix", n, float(np.linalg.norm(M @ n + c - n)))
    if np.linalg.norm(c) <= tol:
        K = _null_vectors(M + np.eye(3), null_tol)
        if K.shape[1]:
            n = K[:, 0]
            # n and -n are both inverted; orient the largest component positive
            n = n * np.sign(n[np.argmax(np.abs(n))])
            return PureFixResult("Invert", n, float(np.linalg.norm(M @ n + n)))
    return PureFixResult("Neither", None, float("nan"))


@dataclass(frozen=True)
class PositivityCheck:
    norm_M: float
    unital_forced: bool
    max_sq_bound: float  # max of |M n|^2 + |c|^2 over the probes
    max_image_norm: float  # max of |M n + c| over the probes
    ok: bool


def positivity_norm_check(phi: Channel, n_samples: int = 2000, seed: int = 0, tol: float = 1e-9) -> PositivityCheck:
    """Bounds any positive trace-preserving qubit map must satisfy."""
    M, c = bloch_of(phi)
    _, s, Vt = np.linalg.svd(M)
    rng = np.random.default_rng(seed)
    N = rng.standard_normal((n_samples, 3))
    N /= np.linalg.norm(N, axis=1, keepdims=True)
    N = np.vstack([N, Vt, -Vt])
    img = N @ M.T
    sq = np.sum(img ** 2, axis=1) + c @ c
    imn = np.linalg.norm(img + c, axis=1)
    norm_M = float(s[0])
    forced = norm_M >= 1 - 1e-8
    ok = bool(sq.max() <= 1 + tol and imn.max() <= 1 + tol and (not forced or np.linalg.norm(c) <= 1e-7))
    return PositivityCheck(norm_M, forced, float(sq.max()), float(imn.max()), ok)


def rotation_to(n) -> np.ndarray:
    """The smallest rotation O in SO(3) with O e3 = n (identity when n = e3)."""
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    k = np.cross([0.0, 0.0, 1.0], n)
    s, c = np.linalg.norm(k), n[2]
    if s < 1e-12:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    k = k / s
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * K + (1 - c) * K @ K


def rot_z(g: float) -> np.ndarray:
    cg, sg = np.cos(g), np.sin(g)
    return np.array([[cg, -sg, 0.0], [sg, cg, 0.0], [0.0, 0.0, 1.0]])


class FitError(RuntimeError):
    """The channel does not fit the expected qubit ES family."""


@dataclass
class ESFit:
    family: str  # "Plus" or "Minus"
    params: dict
    O: np.ndarray
    residual: float
    ambiguous: bool = False
    notes: list = field(default_factory=list)

    def rebuild(self) -> Channel:
        if self.family == "Plus":
            base = phi_plus(**self.params, validate=False)
        else:
            base = phi_minus(**self.params, validate=False)
        b = base.bloch
        return from_bloch(self.O @ b.M @ self.O.T, self.O @ b.c)


def es_qubit_param_fit(phi: Channel, tol: float = 1e-8) -> ESFit:
    """Recover (lambda, theta, alpha, mu) or (lambda, theta) and the rotation O."""
    M, c = bloch_of(phi)
    pf = fixes_or_inverts_pure(phi)
    if pf.kind == "Neither":
        raise FitError("channel neither fixes nor inverts a pure state")
    O1 = rotation_to(pf.n)
    Mp = O1.T @ M @ O1
    A = Mp[:2, :2]
    if pf.kind == "Fix":
        a, b = Mp[0, 2], Mp[1, 2]
        g = np.arctan2(b, a)
        # conjugating by a z rotation turns (a, b) into (alpha, 0)
        O = O1 @ rot_z(g)
        Mq = rot_z(g).T @ Mp @ rot_z(g)
        A = Mq[:2, :2]
        lam = float(np.sqrt(max(0.0, np.linalg.det(A))))
        theta = float(np.arctan2(A[0, 1], A[0, 0]))
        params = {"lam": lam, "theta": theta, "alpha": float(Mq[0, 2]), "mu": float(Mq[2, 2])}
        fam = "Plus"
    else:
        lam = float(np.sqrt(max(0.0, -np.linalg.det(A))))
        theta = float(np.arctan2(A[0, 1], A[0, 0]))
        params = {"lam": lam, "theta": theta}
        O = O1
        fam = "Minus"
    fit = ESFit(fam, params, O, 0.0)
    rb = fit.rebuild().bloch
    fit.residual = float(np.linalg.norm(rb.M - M) + np.linalg.norm(rb.c - c))
    if fam == "Plus" and lam >= 1 - 1e-8:
        fit.ambiguous = True
        fit.notes.append("lambda = 1: the Plus and Minus families coincide; Plus reported")
    if fam == "Plus":
        p = params
        bound = (1 - p["mu"]) * (p["mu"] - p["lam"] ** 2)
        if p["alpha"] ** 2 > bound + tol:
            fit.notes.append(f"recovered parameters violate alpha^2 <= (1-mu)(mu-lambda^2): {p['alpha']**2} > {bound}")
    if fit.residual > tol:
        raise FitError(f"rebuild residual {fit.residual:.2e} above {tol:.0e}")
    return fit


def alpha_recursion(lam: float, theta: float, alpha: float, mu: float, n: int) -> tuple[float, float]:
    """(alpha_n, beta_n) of the n-th power of phi_plus, before the beta gauge."""
    # third column of M^n: (I + M + ... ) structure gives v_{k+1} = A v_k + mu^k (alpha, 0)
    A = lam * np.array([[np.cos(theta), np.sin(theta)], [-np.sin(theta), np.cos(theta)]])
    v = np.zeros(2)
    for k in range(n):
        v = A @ v + mu ** k * np.array([alpha, 0.0])
    return float(v[0]), float(v[1])
