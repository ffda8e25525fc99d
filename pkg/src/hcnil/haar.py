"""Haar sampling on compact groups and the group-average side of the identity."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .chevalley import Representation, cartan_involution
from .estimate import DEFAULT_CHUNK, Estimate, run_chunks

__all__ = [
    "GroupElement",
    "SamplerConfig",
    "group_size",
    "haar_matrices",
    "sample_haar",
    "adjoint_action",
    "lhs_mc",
    "DEFAULT_WALK_STEPS",
]

DEFAULT_WALK_STEPS = 200
METHODS = ("exact-qr", "random-walk")


@lru_cache(maxsize=None)
def _metric_factor(rep: Representation):
    """``T`` with ``T^H T`` the K-invariant Hermitian metric of ``rep`` (None for unitary reps)."""
    if rep.kind == "defining":
        return None
    sc = rep.sc
    basis = np.eye(sc.dim)
    # <x, y> = -B(theta x, y), positive definite and preserved by K
    th = cartan_involution(sc, basis)
    P = -th @ sc.killing_matrix
    P = (P + P.conj().T) / 2
    L = np.linalg.cholesky(P)
    return L.conj().T


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Element of the compact group acting through ``rep`` (``rep`` is None for plain U(N))."""

    rep: Representation | None
    matrix: np.ndarray

    def inverse_matrix(self) -> np.ndarray:
        T = None if self.rep is None else _metric_factor(self.rep)
        if T is None:
            return self.matrix.conj().T
        return np.linalg.inv(self.matrix)

    def unitarity_error(self) -> float:
        """``|| k^H P k - P ||`` for the invariant metric ``P`` (identity for defining reps)."""
        k = self.matrix
        T = None if self.rep is None else _metric_factor(self.rep)
        if T is None:
            return float(np.linalg.norm(k.conj().T @ k - np.eye(len(k)), 2))
        u = T @ k @ np.linalg.inv(T)
        return float(np.linalg.norm(u.conj().T @ u - np.eye(len(k)), 2))

    def form_error(self) -> float:
        """``|| k^T form k - form ||`` for orthogonal and symplectic families, else 0."""
        if self.rep is None or self.rep.form is None:
            return 0.0
        f = self.rep.form
        return float(np.linalg.norm(self.matrix.T @ f @ self.matrix - f, 2))


def group_size(family: str, rank: int) -> int:
    return {"U": rank, "A": rank + 1, "B": 2 * rank + 1, "C": 2 * rank, "D": 2 * rank}[family]


@dataclass(frozen=True)
class SamplerConfig:
    """Sampler for the compact group of ``family`` and ``rank`` ("U" is the full unitary group U(rank))."""

    family: str
    rank: int
    method: str = "exact-qr"
    steps: int = DEFAULT_WALK_STEPS
    step_size: float = 1.0
    seed: int = 0

    def __post_init__(self):
        fam = self.family.upper()
        object.__setattr__(self, "family", fam)
        if fam not in "UABCDEFG" or len(fam) != 1:
            raise ValueError(f"unknown group family {self.family!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown sampler method {self.method!r}")
        if self.method == "exact-qr" and fam not in "UABCD":
            raise ValueError(f"exact-qr sampling is not available for family {fam}; use random-walk")
        if self.method == "random-walk" and self.steps < 50:
            raise ValueError("random-walk needs at least 50 steps")
        if self.rank < 1:
            raise ValueError("rank must be positive")

    @classmethod
    def parse(cls, text: str, family: str, rank: int, seed: int = 0) -> SamplerConfig:
        """``"qr"`` or ``"walk:N"`` (N steps)."""
        if text == "qr":
            return cls(family, rank, "exact-qr", seed=seed)
        if text.startswith("walk"):
            _, _, n = text.partition(":")
            return cls(family, rank, "random-walk", steps=int(n) if n else DEFAULT_WALK_STEPS, seed=seed)
        raise ValueError(f"unknown sampler {text!r} (expected qr or walk:N)")


def _ginibre(rng, n, size):
    return (rng.standard_normal((n, size, size)) + 1j * rng.standard_normal((n, size, size))) / math.sqrt(2)


def _haar_unitary(rng, n, size):
    q, r = np.linalg.qr(_ginibre(rng, n, size))
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[:, None, :]


def _haar_special_unitary(rng, n, size):
    q = _haar_unitary(rng, n, size)
    q[:, :, -1] /= np.linalg.det(q)[:, None]
    return q


def _haar_special_orthogonal(rng, n, size):
    out = np.empty((n, size, size))
    todo = np.arange(n)
    while todo.size:
        g = rng.standard_normal((todo.size, size, size))
        q, r = np.linalg.qr(g)
        d = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
        q = q * d[:, None, :]
        ok = np.linalg.det(q) > 0
        out[todo[ok]] = q[ok]
        todo = todo[~ok]
    return out


@lru_cache(maxsize=None)
def _orthogonal_to_form(size: int) -> np.ndarray:
    """Unitary ``P`` with ``P^T J P = I`` for the antidiagonal ``J``."""
    P = np.zeros((size, size), dtype=complex)
    s = 1 / math.sqrt(2)
    for i in range(size // 2):
        j = size - 1 - i
        P[i, i], P[j, i] = s, s
        P[i, j], P[j, j] = 1j * s, -1j * s
    if size % 2:
        P[size // 2, size // 2] = 1
    return P


def _haar_symplectic(rng, n, size):
    """Quaternionic Gram-Schmidt in the standard form, then permuted to the antidiagonal form."""
    m = size // 2
    omega = np.block([[np.zeros((m, m)), np.eye(m)], [-np.eye(m), np.zeros((m, m))]])
    S = np.zeros((n, size, size), dtype=complex)
    for j in range(m):
        v = (rng.standard_normal((n, size)) + 1j * rng.standard_normal((n, size))) / math.sqrt(2)
        if j:
            cols = np.concatenate([S[:, :, :j], S[:, :, m : m + j]], axis=2)
            v = v - np.einsum("nab,nb->na", cols, np.einsum("nab,na->nb", cols.conj(), v))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        S[:, :, j] = v
        S[:, :, m + j] = -(omega @ v.conj().T).T
    # e_j -> u_j, f_j -> u_{size-1-j}
    perm = list(range(m)) + [size - 1 - j for j in range(m)]
    Q = np.zeros((size, size))
    Q[perm, np.arange(size)] = 1
    return Q @ S @ Q.T


def _exact(cfg: SamplerConfig, rng, n):
    size = group_size(cfg.family, cfg.rank)
    if cfg.family == "U":
        return _haar_unitary(rng, n, size)
    if cfg.family == "A":
        return _haar_special_unitary(rng, n, size)
    if cfg.family in "BD":
        P = _orthogonal_to_form(size)
        return P @ _haar_special_orthogonal(rng, n, size) @ P.conj().T
    return _haar_symplectic(rng, n, size)


@lru_cache(maxsize=None)
def _walk_basis(cfg: SamplerConfig, rep: Representation | None):
    """Orthonormal basis of the compact Lie algebra as anti-Hermitian matrices in unitary coordinates."""
    if cfg.family == "U":
        N = cfg.rank
        mats = []
        for i in range(N):
            m = np.zeros((N, N), dtype=complex)
            m[i, i] = 1j
            mats.append(m)
        for i in range(N):
            for j in range(i + 1, N):
                a = np.zeros((N, N), dtype=complex)
                a[i, j], a[j, i] = 1, -1
                mats.append(a / math.sqrt(2))
                mats.append(1j * np.abs(a) / math.sqrt(2))
        return np.array(mats), None
    T = _metric_factor(rep)
    sc = rep.sc
    kb = sc.compact_basis
    # Gram of -B on k (real, positive definite), orthonormalise
    G = np.real(-np.einsum("ai,ij,bj->ab", kb, sc.killing_matrix, kb))
    L = np.linalg.cholesky(G)
    on = np.linalg.solve(L, kb)
    mats = rep(on)
    if T is not None:
        mats = T @ mats @ np.linalg.inv(T)
    return mats, T


def _rotation(X, angle):
    """``exp(t X)`` for anti-Hermitian ``X`` with ``t`` chosen so the largest rotation angle is ``angle``."""
    lam, V = np.linalg.eigh(-1j * X)
    lam = lam * (angle / np.max(np.abs(lam), axis=-1, keepdims=True))
    return (V * np.exp(1j * lam)[..., None, :]) @ V.conj().swapaxes(-1, -2)


def _walk(cfg: SamplerConfig, rep, rng, n):
    mats, T = _walk_basis(cfg, rep)
    size = mats.shape[-1]
    k = np.broadcast_to(np.eye(size, dtype=complex), (n, size, size)).copy()
    for _ in range(cfg.steps):
        c = rng.standard_normal((n, len(mats)))
        k = k @ _rotation(np.tensordot(c, mats, axes=([1], [0])), cfg.step_size)
    if T is not None:
        k = np.linalg.solve(T, k) @ T
    return k


def haar_matrices(cfg: SamplerConfig, rng, n: int, rep: Representation | None = None) -> np.ndarray:
    """Stack of ``n`` group matrices. ``rep`` is required for random walks outside "U"."""
    if cfg.method == "exact-qr":
        return _exact(cfg, rng, n)
    if cfg.family != "U" and rep is None:
        raise ValueError("random-walk sampling needs the representation")
    return _walk(cfg, rep, rng, n)


def sample_haar(cfg: SamplerConfig, rng=None, rep: Representation | None = None) -> GroupElement:
    """One group element; ``rng`` defaults to a generator seeded from ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    return GroupElement(rep, haar_matrices(cfg, rng, 1, rep)[0])


def adjoint_action(k: GroupElement, X) -> np.ndarray:
    """``Ad_k X`` as a Chevalley coefficient vector (conjugation in the representation)."""
    if k.rep is None:
        raise ValueError("group element carries no algebra representation")
    m = k.matrix @ k.rep(X) @ k.inverse_matrix()
    try:
        return k.rep.coefficients(m, tol=1e-10)
    except ValueError as exc:
        raise ValueError(f"adjoint action left the algebra: {exc}") from None


def _check_sampler(p, cfg: SamplerConfig):
    alg = p.alg
    if cfg.family != alg.family or cfg.rank != alg.rank:
        raise ValueError(f"sampler is for {cfg.family}{cfg.rank} but the problem is {alg.label}")
    if p.F.rep is not alg.rep:
        raise ValueError("F and the sampler use different representations")
    if cfg.method == "exact-qr" and alg.rep.kind != "defining":
        raise ValueError("exact-qr sampling needs the defining representation")


def lhs_mc(p, cfg: SamplerConfig, samples: int, seed=None, threads: int = 1, chunk: int = DEFAULT_CHUNK) -> Estimate:
    """Haar average of ``F(H, Ad_k J) exp(gamma B(H, Ad_k J))``.

    ``seed`` defaults to ``cfg.seed``.  Results depend only on
    ``(seed, samples, chunk)``.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")
    _check_sampler(p, cfg)
    rep = p.alg.rep
    Hm = rep(p.alg.sc.element(h=p.H))
    Jm = rep(p.alg.sc.element(h=p.J))
    gamma = complex(p.gamma)
    unitary = _metric_factor(rep) is None

    def draw(rng, n):
        k = haar_matrices(cfg, rng, n, rep)
        kinv = k.conj().swapaxes(-1, -2) if unitary else np.linalg.inv(k)
        Jk = k @ Jm @ kinv
        b = rep.killing(Hm, Jk)
        return p.F.evaluate(Hm, Jk) * np.exp(gamma * b)

    flags = ("approximate-haar",) if cfg.method == "random-walk" else ()
    acc = run_chunks(draw, samples, cfg.seed if seed is None else seed, chunk=chunk, threads=threads)
    return acc.estimate(flags)
