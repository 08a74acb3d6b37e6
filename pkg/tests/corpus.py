"""Seeded test corpora and independent oracles shared by the test modules."""
from __future__ import annotations

import numpy as np

from entsaving.channels import (
    HolevoForm,
    amplitude_damping,
    holevo_channel,
    phi_minus,
    phi_plus,
    random_cptp,
    simple_aes,
)
from entsaving.classify import block_first_factor
from entsaving.matcore import dagger, haar_unitary, random_density


def qubit_corpus(n: int, seed0: int = 0):
    """Random qubit channels mixed with structured ones (unitary, phi_minus, phi_plus, AD)."""
    out = []
    for k in range(n):
        seed = seed0 + k
        rng = np.random.default_rng(seed)
        kind = k % 8
        if kind in (0, 1, 2, 3):
            out.append(random_cptp(2, kind + 1, seed))
        elif kind == 4:
            out.append(phi_minus(rng.uniform(0.05, 1.0), rng.uniform(0, 2 * np.pi)))
        elif kind == 5:
            lam = rng.uniform(0.05, 0.95)
            mu = rng.uniform(lam ** 2, 1.0)
            amax = np.sqrt((1 - mu) * (mu - lam ** 2))
            out.append(phi_plus(lam, rng.uniform(0, 2 * np.pi), rng.uniform(0, 1) * amax, mu))
        elif kind == 6:
            out.append(amplitude_damping(rng.uniform(0.01, 0.99)))
        else:
            out.append(random_cptp(2, 2, seed))
    return out


def random_blocks(rng, d_max: int = 6):
    """Block list with at least one d1 > 1 and sum d1*d2 <= d_max."""
    while True:
        blocks = []
        room = d_max
        while room > 0 and len(blocks) < 4:
            d1 = int(rng.integers(1, min(3, room) + 1))
            d2 = int(rng.integers(1, max(1, room // d1) + 1))
            d2 = min(d2, 2)
            if d1 * d2 > room:
                break
            blocks.append((d1, d2))
            room -= d1 * d2
            if rng.random() < 0.2:
                break
        if any(d1 > 1 for d1, _ in blocks):
            return blocks


def random_perm(rng, blocks):
    """Random permutation that only pairs blocks of equal d1."""
    perm = list(range(len(blocks)))
    for d1 in {b[0] for b in blocks}:
        idx = [i for i, b in enumerate(blocks) if b[0] == d1]
        shuffled = list(rng.permutation(idx))
        for i, j in zip(idx, shuffled):
            perm[i] = int(j)
    return perm


def simple_aes_instance(seed: int, d_max: int = 6, embed: bool = False):
    """Seeded simple AES channel in a random basis; returns (channel, generator data)."""
    rng = np.random.default_rng(seed)
    dims = random_blocks(rng, d_max)
    blocks = [(d1, d2, random_density(d2, rng) if d2 > 1 else 1) for d1, d2 in dims]
    perm = random_perm(rng, dims)
    unitaries = [haar_unitary(d1, rng) for d1, _ in dims]
    r = sum(d1 * d2 for d1, d2 in dims)
    d = r + (int(rng.integers(1, d_max - r + 1)) if embed and r < d_max else 0)
    basis = haar_unitary(d, rng)
    phi = simple_aes(blocks, unitaries, perm, d=d, basis=basis)
    return phi, phi.provenance.data


def census_counts(phi, gen) -> tuple[int, int]:
    """Kernel dimensions of the superoperator on diagonal-block and off-diagonal-block operators."""
    W = gen["basis"]
    sizes = [b[0] * b[1] for b in gen["blocks"]]
    off = np.cumsum([0] + sizes)
    G = [W[:, off[i]:off[i + 1]] for i in range(len(sizes))]
    S = phi.super

    def kernel_on(pairs):
        cols = []
        for i, j in pairs:
            for a in range(sizes[i]):
                for b in range(sizes[j]):
                    X = np.outer(G[i][:, a], np.conj(G[j][:, b]))
                    cols.append(X.flatten(order="F"))
        B = np.column_stack(cols)
        s = np.linalg.svd(S @ B, compute_uv=False)
        return int(B.shape[1] - np.sum(s > 1e-9))

    nb = len(sizes)
    first = kernel_on([(i, i) for i in range(nb)])
    second = kernel_on([(i, j) for i in range(nb) for j in range(nb) if i != j]) if nb > 1 else 0
    return first, second


def _frame(rec_block, gen_G, d1, d2):
    """Unitary F with rec first-factor frame -> gen first-factor frame."""
    class _B:
        pass
    gb = _B()
    gb.G, gb.d1, gb.d2 = gen_G, d1, d2
    ys = []
    for a in range(d1):
        E = np.zeros((d1, d1), dtype=complex)
        E[a, 0] = 1
        X = rec_block.G @ np.kron(E, np.eye(d2)) @ dagger(rec_block.G)
        ys.append(block_first_factor(X, gb) / d2)
    w, V = np.linalg.eigh(ys[0])
    f0 = V[:, -1]
    F = np.column_stack([ys[a] @ f0 for a in range(d1)])
    return F


def phase_distance(A, B) -> float:
    """1 - |<A, B>| / d for unitaries, zero iff equal up to a phase."""
    return float(1 - abs(np.trace(dagger(A) @ B)) / A.shape[0])


def structure_mismatch(fs, gen) -> dict:
    """Compare a recovered FixedStructure with simple_aes generator data."""
    W = gen["basis"]
    dims = [(b[0], b[1]) for b in gen["blocks"]]
    sizes = [d1 * d2 for d1, d2 in dims]
    off = np.cumsum([0] + sizes)
    Gg = [W[:, off[i]:off[i + 1]] for i in range(len(sizes))]
    Pg = [g @ dagger(g) for g in Gg]
    # match recovered blocks to generator blocks by their projectors
    match = []
    for b in fs.blocks:
        dist = [np.linalg.norm(b.P - P) for P in Pg]
        match.append(int(np.argmin(dist)))
    out = {
        "bijective": sorted(match) == list(range(len(Gg))),
        "proj_err": max(np.linalg.norm(b.P - Pg[m]) for b, m in zip(fs.blocks, match)),
        "dims_ok": all((b.d1, b.d2) == dims[m] for b, m in zip(fs.blocks, match)),
    }
    if not (out["bijective"] and out["dims_ok"]):
        return out
    out["perm_ok"] = all(match[fs.perm[i]] == gen["perm"][match[i]] for i in range(len(match)))
    F = [_frame(b, Gg[m], b.d1, b.d2) for b, m in zip(fs.blocks, match)]
    u_err = 0.0
    rho_err = 0.0
    for i, (b, m) in enumerate(zip(fs.blocks, match)):
        j = fs.perm[i]
        Ug = gen["unitaries"][m]
        Ur = F[i] @ fs.unitaries[i] @ dagger(F[j])
        u_err = max(u_err, phase_distance(Ug, Ur))
        rg = np.atleast_2d(gen["blocks"][m][2])
        rho_err = max(rho_err, float(np.max(np.abs(np.linalg.eigvalsh(rg) - np.linalg.eigvalsh(b.rho2)))))
    out["unitary_err"] = u_err
    out["rho2_err"] = rho_err
    return out


def holevo_with_pure_fixed_point(d: int, seed: int):
    """Measure-and-prepare channel that fixes |0><0|."""
    rng = np.random.default_rng(seed)
    n_out = int(rng.integers(2, 4))
    # random POVM on the complement of |0>
    G = rng.standard_normal((n_out * (d - 1), d - 1)) + 1j * rng.standard_normal((n_out * (d - 1), d - 1))
    Q, _ = np.linalg.qr(G)
    effects = []
    for k in range(n_out):
        A = Q[k * (d - 1):(k + 1) * (d - 1), :]
        E = np.zeros((d, d), dtype=complex)
        E[1:, 1:] = dagger(A) @ A
        effects.append(E)
    effects[0][0, 0] = 1.0
    states = [np.diag([1.0] + [0.0] * (d - 1)).astype(complex)]
    states += [random_density(d, rng) for _ in range(n_out - 1)]
    return holevo_channel(HolevoForm(states, effects))


def depolarizing_choi(lam: float) -> np.ndarray:
    """Trace-1 Choi matrix of the qubit depolarizing channel, written out directly."""
    eps = np.zeros(4)
    eps[0] = eps[3] = 1 / np.sqrt(2)
    return lam * np.outer(eps, eps) + (1 - lam) * np.eye(4) / 4


def pt_second(R: np.ndarray, d: int = 2) -> np.ndarray:
    """Partial transpose on the second factor, by explicit index loops."""
    out = np.zeros_like(R)
    for i in range(d):
        for j in range(d):
            for k in range(d):
                for l in range(d):
                    out[i * d + k, j * d + l] = R[i * d + l, j * d + k]
    return out
