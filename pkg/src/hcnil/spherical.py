"""Right-hand side of the nilpotent integral identity and related checks.

For ``H, J`` in the Cartan subalgebra and an Ad-invariant ``F`` the compact
group average of ``F(H, Ad_k J) exp(gamma B(H, Ad_k J))`` equals

    C_g / |W| * sum_w exp(gamma B(H, J_w)) / (Delta(H) Delta(J_w)) * <F(H + N, J_w + N^theta)>

where the bracket is the normalised Gaussian average over ``N`` in n+ with
weight ``exp(gamma B(N, N^theta))`` and
``C_g = |W| prod m_j! prod_{alpha>0} <alpha,alpha> / (2 gamma)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .algebra import LieAlgebra, load_algebra
from .chevalley import cartan_involution
from .estimate import DEFAULT_CHUNK, Estimate
from .gaussian import NilpotentGaussianSpec, Polynomial, mc_expectation, sample_nilpotent, wick_expectation, z_nplus
from .haar import GroupElement
from .invariants import InvariantPolynomial, parse_invariant
from .rootsys import RootSystem, WeylElement, delta, exponents, weyl_act, weyl_group

__all__ = [
    "DegenerateInput",
    "NonRegular",
    "SphericalProblem",
    "WeylTerm",
    "RHSBreakdown",
    "MatrixPolynomial",
    "hc_constant",
    "simplified_constant",
    "nilpotent_polynomial",
    "nilpotent_factor",
    "rhs_eval",
    "hc_f1",
    "iz_determinant",
    "iz_cross_check",
    "generalized_schur",
    "RatioCheck",
    "complex_weyl_ratio_check",
    "nilpotent_average_mc",
    "weyl_invariance_check",
]

REGULARITY_TOL = 1e-8


class DegenerateInput(ValueError):
    """A Cartan element is not regular (some root vanishes on it)."""


class NonRegular(ValueError):
    """Element is not ad-regular; the non-regular decomposition is not supported."""


def _require_regular(rs: RootSystem, H, name: str):
    vals = np.asarray(H, dtype=complex) @ rs.root_values[: rs.n_pos].T
    k = int(np.argmin(np.abs(vals)))
    if abs(vals[k]) <= REGULARITY_TOL:
        raise DegenerateInput(f"{name} is not regular: root {rs.roots[k]} vanishes on it (Delta = 0)")


@dataclass(frozen=True, eq=False)
class SphericalProblem:
    alg: LieAlgebra
    H: np.ndarray
    J: np.ndarray
    gamma: complex
    F: InvariantPolynomial

    def __post_init__(self):
        r = self.alg.rank
        H = np.asarray(self.H, dtype=complex)
        J = np.asarray(self.J, dtype=complex)
        if H.shape != (r,) or J.shape != (r,):
            raise ValueError(f"H and J need {r} coroot coefficients")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "J", J)
        if self.F.rep is None:
            object.__setattr__(self, "F", parse_invariant(self.F.source, self.alg.rep))

    @classmethod
    def build(cls, label: str, H, J, gamma, F: str = "1", rep: str = "auto") -> SphericalProblem:
        alg = load_algebra(label, rep)
        return cls(alg, np.asarray(H), np.asarray(J), gamma, parse_invariant(F, alg.rep))

    @property
    def rs(self) -> RootSystem:
        return self.alg.rs

    def require_regular(self):
        _require_regular(self.rs, self.H, "H")
        _require_regular(self.rs, self.J, "J")


def _check_gamma(gamma):
    if gamma == 0:
        raise ValueError("gamma must be non-zero")


def hc_constant(rs: RootSystem, gamma) -> complex:
    """``|W| prod m_j! prod_{alpha>0} <alpha,alpha> / (2 gamma)``.

    ``|W|`` is taken as ``prod (m_j + 1)`` so that no enumeration is needed.

    >>> from hcnil.rootsys import build_root_system
    >>> hc_constant(build_root_system("A1"), 2.0)
    (0.25+0j)
    """
    _check_gamma(gamma)
    coeff = Fraction(1)
    for mj in exponents(rs):
        coeff *= math.factorial(mj + 1)  # (m+1) * m!
    for r in rs.pos_roots:
        coeff *= rs.norm2(r) / 2
    return float(coeff) / complex(gamma) ** rs.n_pos


def simplified_constant(rs: RootSystem) -> float:
    """``prod m_j! / pi^{dim n+}``, the prefactor of the unnormalised form."""
    return math.prod(math.factorial(m) for m in exponents(rs)) / math.pi**rs.n_pos


class MatrixPolynomial:
    """Matrix-valued polynomial: ``sum_k mono_k * M_k`` with a stack of coefficient matrices."""

    def __init__(self, exps: np.ndarray, mats: np.ndarray):
        self.exps = np.asarray(exps, dtype=np.int64)
        self.mats = np.asarray(mats, dtype=complex)

    @classmethod
    def affine(cls, const, coeffs, var_offset: int, nvars: int) -> MatrixPolynomial:
        """``const + sum_i v_{var_offset + i} coeffs[i]``."""
        k = len(coeffs)
        exps = np.zeros((k + 1, nvars), dtype=np.int64)
        for i in range(k):
            exps[i + 1, var_offset + i] = 1
        return cls(exps, np.concatenate([np.asarray(const)[None], np.asarray(coeffs)]))

    def __matmul__(self, other: MatrixPolynomial) -> MatrixPolynomial:
        k1, k2 = len(self.exps), len(other.exps)
        exps = (self.exps[:, None, :] + other.exps[None, :, :]).reshape(k1 * k2, -1)
        mats = np.einsum("aij,bjk->abik", self.mats, other.mats).reshape(k1 * k2, *self.mats.shape[1:])
        uniq, inv = np.unique(exps, axis=0, return_inverse=True)
        out = np.zeros((len(uniq),) + mats.shape[1:], dtype=complex)
        np.add.at(out, inv.ravel(), mats)
        return MatrixPolynomial(uniq, out)

    def trace(self) -> Polynomial:
        tr = np.trace(self.mats, axis1=-2, axis2=-1)
        return Polynomial(self.exps.shape[1], {tuple(int(v) for v in e): complex(t) for e, t in zip(self.exps, tr)
                                                if abs(t) > 0})


def nilpotent_polynomial(alg: LieAlgebra, F: InvariantPolynomial, H, J) -> Polynomial:
    """Expand ``F(H + N, J + N^theta)`` as a polynomial in ``n_alpha`` and ``conj(n_alpha)``.

    With ``N = sum n_alpha E_alpha`` we have ``N^theta = -sum conj(n_alpha) E_{-alpha}``.
    """
    rep, sc, rs = alg.rep, alg.sc, alg.rs
    p = rs.n_pos
    nv = 2 * p
    Xc = rep(sc.element(h=H))
    Yc = rep(sc.element(h=J))
    up = np.array([rep.images[sc.root_index(r)] for r in rs.pos_roots])
    down = np.array([-rep.images[sc.root_index(-r)] for r in rs.pos_roots])
    X = MatrixPolynomial.affine(Xc, up, 0, nv)
    Y = MatrixPolynomial.affine(Yc, down, p, nv)
    total = Polynomial(nv)
    cache = {}
    for coeff, words in F.terms:
        term = Polynomial.constant(nv, coeff)
        for w in words:
            if w not in cache:
                m = X if w[0] == "X" else Y
                for letter in w[1:]:
                    m = m @ (X if letter == "X" else Y)
                cache[w] = m.trace()
            term = term * cache[w]
        total = total + term
    return total


def _nil_matrices(alg: LieAlgebra, n):
    rep, sc, rs = alg.rep, alg.sc, alg.rs
    up = np.array([rep.images[sc.root_index(r)] for r in rs.pos_roots])
    down = np.array([rep.images[sc.root_index(-r)] for r in rs.pos_roots])
    N = np.tensordot(n, up, axes=([-1], [0]))
    Nth = -np.tensordot(np.conj(n), down, axes=([-1], [0]))
    return N, Nth


def nilpotent_factor(alg: LieAlgebra, F: InvariantPolynomial, H, J, gamma, method: str = "exact-wick",
                     samples: int = 100_000, seed=None):
    """Normalised Gaussian average of ``F(H + N, J + N^theta)`` over n+.

    Returns a complex number for ``exact-wick`` and an :class:`Estimate` for
    ``gaussian-mc``.
    """
    spec = NilpotentGaussianSpec(alg.rs, gamma)
    if F.is_constant:
        c = sum(coeff for coeff, _ in F.terms)
        return complex(c) if method == "exact-wick" else Estimate(complex(c), 0.0, samples)
    if method == "exact-wick":
        return wick_expectation(nilpotent_polynomial(alg, F, H, J), spec)
    if method == "gaussian-mc":
        if complex(gamma).imag != 0:
            raise ValueError("gaussian-mc needs real gamma")
        Xc = alg.rep(alg.sc.element(h=H))
        Yc = alg.rep(alg.sc.element(h=J))

        def f(n):
            N, Nth = _nil_matrices(alg, n)
            return F.evaluate(Xc + N, Yc + Nth)

        return mc_expectation(f, spec, samples, seed)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class WeylTerm:
    word: tuple[int, ...]
    sign: int
    J_w: np.ndarray
    phase: complex
    denominator: complex
    nilpotent: complex
    nilpotent_stderr: float = 0.0

    @property
    def value(self) -> complex:
        return self.phase / self.denominator * self.nilpotent


@dataclass(frozen=True)
class RHSBreakdown:
    terms: tuple[WeylTerm, ...]
    prefactor: complex
    total: complex
    simplified_total: complex
    stderr: float = 0.0
    method: str = "exact-wick"
    extras: dict = field(default_factory=dict)

    def recompute(self) -> complex:
        return self.prefactor * sum(t.value for t in self.terms)


def rhs_eval(p: SphericalProblem, method: str = "exact-wick", samples: int = 100_000, seed=0,
             rtol: float = 1e-12) -> RHSBreakdown:
    """Evaluate the Weyl-sum side of the identity term by term.

    The normalised form (constant ``C_g/|W|`` with the nilpotent Gaussian
    average) and the unnormalised form (``prod m_j!/pi^{dim n+}`` with the raw
    Gaussian integral) are both assembled and required to agree to ``rtol``.
    """
    p.require_regular()
    gamma = complex(p.gamma)
    if method == "gaussian-mc" and gamma.imag != 0:
        raise ValueError("gaussian-mc needs real gamma")
    if method not in ("exact-wick", "gaussian-mc"):
        raise ValueError(f"unknown method {method!r}")
    alg, rs = p.alg, p.rs
    W = alg.weyl
    C = hc_constant(rs, gamma)
    pref = C / len(W)
    zn = z_nplus(rs, gamma)
    dH = complex(delta(rs, p.H))
    if method == "gaussian-mc":
        root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        seeds = root.spawn(len(W))
    else:
        seeds = [None] * len(W)
    terms = []
    var = 0.0
    for w, ss in zip(W, seeds):
        Jw = weyl_act(w, p.J)
        phase = complex(np.exp(gamma * alg.killing_h(p.H, Jw)))
        den = dH * complex(delta(rs, Jw))
        nil = nilpotent_factor(alg, p.F, p.H, Jw, gamma, method, samples, ss)
        se = 0.0
        if isinstance(nil, Estimate):
            se = nil.stderr
            nil = nil.value
        terms.append(WeylTerm(w.word, w.sign, Jw, phase, den, complex(nil), se))
        var += (abs(phase / den) * se) ** 2
    total = pref * sum(t.value for t in terms)
    simplified = simplified_constant(rs) * sum(t.phase / t.denominator * (zn * t.nilpotent) for t in terms)
    # relative to the summed magnitudes: the Weyl sum may cancel heavily
    scale = max(abs(pref) * sum(abs(t.value) for t in terms), 1e-300)
    if abs(total - simplified) > rtol * scale:
        raise AssertionError(f"constant conventions disagree: {total} vs {simplified}")
    return RHSBreakdown(tuple(terms), pref, total, simplified, abs(pref) * math.sqrt(var), method)


def hc_f1(p: SphericalProblem) -> complex:
    """Closed form of the identity for F = 1 (no nilpotent integral)."""
    p.require_regular()
    alg, rs = p.alg, p.rs
    gamma = complex(p.gamma)
    dH = complex(delta(rs, p.H))
    s = 0j
    for w in alg.weyl:
        Jw = weyl_act(w, p.J)
        s += np.exp(gamma * alg.killing_h(p.H, Jw)) / (dH * complex(delta(rs, Jw)))
    return complex(hc_constant(rs, gamma) / len(alg.weyl) * s)


def _vandermonde(x):
    x = np.asarray(x)
    out = 1.0 + 0j
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            out *= x[i] - x[j]
    return out


def iz_determinant(x, y, gamma) -> complex:
    """``det(exp(gamma x_i y_j)) / (Delta(x) Delta(y))`` with ``Delta(x) = prod_{i<j} (x_i - x_j)``.

    >>> round(iz_determinant([0.5], [2.0], 1.0).real, 12) == round(math.e, 12)
    True
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if len(x) != len(y):
        raise ValueError("x and y must have equal length")
    dx, dy = _vandermonde(x), _vandermonde(y)
    if dx == 0 or dy == 0:
        raise ValueError("repeated entries: the determinant formula needs distinct x_i and distinct y_j")
    m = np.exp(complex(gamma) * np.outer(x, y))
    return complex(np.linalg.det(m) / (dx * dy))


def iz_cross_check(p: SphericalProblem, constant=None):
    """Compare :func:`hc_f1` with the determinant formula for type A.

    Diagonal entries of ``rho(H)`` and ``rho(J)`` in the defining
    representation play the role of ``x`` and ``y`` and the coupling becomes
    ``gamma * index_ratio``.  If ``constant`` is None it is fitted from this
    problem.  Returns ``(hc_value, det_value, constant, relative_error)``.
    """
    alg = p.alg
    if alg.family != "A" or alg.rep.kind != "defining":
        raise ValueError("determinant cross-check needs a type A algebra in its defining representation")
    x = np.diag(alg.rep(alg.sc.element(h=p.H)))
    y = np.diag(alg.rep(alg.sc.element(h=p.J)))
    det_val = iz_determinant(x, y, complex(p.gamma) * alg.rep.index_ratio)
    hc = hc_f1(p)
    if constant is None:
        constant = hc / det_val
    rel = abs(hc - constant * det_val) / max(abs(hc), 1e-300)
    return hc, det_val, constant, rel


def _lex_order(vals):
    return sorted(range(len(vals)), key=lambda i: (round(vals[i].real, 12), round(vals[i].imag, 12)))


def generalized_schur(M, alg: LieAlgebra, tol: float = REGULARITY_TOL):
    """Write an ad-regular ``M`` as ``Ad_k(H + N)`` with k compact, H Cartan and N in n+.

    Works in the defining representation of a classical algebra: the
    eigenvectors of ``rho(M)`` (eigenvalues sorted lexicographically by real
    then imaginary part, paired to respect the invariant form) are QR
    factorised and the unitary factor is ``k``.  Returns
    ``(GroupElement, H coefficients, N coefficient vector)``.
    """
    rep, sc = alg.rep, alg.sc
    if rep.kind != "defining":
        raise ValueError("generalized_schur needs a classical defining representation")
    M = np.asarray(M, dtype=complex)
    m = rep(M)
    size = m.shape[0]
    lam, V = np.linalg.eig(m)
    gaps = np.abs(lam[:, None] - lam[None, :])
    np.fill_diagonal(gaps, np.inf)
    scale = max(1.0, float(np.max(np.abs(lam))))
    if np.min(gaps) <= tol * scale:
        raise NonRegular("element is not ad-regular (repeated eigenvalues)")
    # a perturbed Jordan block has split eigenvalues but almost parallel eigenvectors
    if np.linalg.cond(V) > 1 / tol:
        raise NonRegular("element is not ad-regular (eigenvectors nearly dependent)")
    order = _lex_order(lam)
    lam, V = lam[order], V[:, order]
    fam = alg.family
    if fam in "BCD":
        form = rep.form
        n = size // 2
        # pair column i with its mirror so that V^T form V = form
        for i in range(n):
            j = size - 1 - i
            pairing = V[:, i] @ form @ V[:, j]
            V[:, j] = V[:, j] * form[i, j] / pairing
        if size % 2:
            mid = size // 2
            V[:, mid] = V[:, mid] / np.sqrt(V[:, mid] @ form @ V[:, mid])
        if fam in "BD" and np.real(np.linalg.det(V)) < 0:
            if size % 2:
                V[:, size // 2] *= -1
            else:
                V[:, [n - 1, n]] = V[:, [n, n - 1]]
                lam[[n - 1, n]] = lam[[n, n - 1]]
    Q, R = np.linalg.qr(V)
    ph = np.diag(R) / np.abs(np.diag(R))
    Q = Q * ph[None, :]
    if fam == "A":
        Q[:, -1] /= np.linalg.det(Q)
    T = Q.conj().T @ m @ Q
    Hm = np.diag(np.diag(T))
    Nm = np.triu(T, 1)
    H = rep.coefficients(Hm, tol=1e-7)[: alg.rank]
    Nvec = rep.coefficients(Nm, tol=1e-7)
    Nvec[: alg.rank] = 0
    Nvec[alg.rank + alg.rs.n_pos :] = 0
    return GroupElement(rep, Q), np.real_if_close(H, tol=1e6), Nvec


# -- complex Weyl integration checks -----------------------------------------


def _cartan_sampler(alg: LieAlgebra, gamma: float):
    # density exp(-gamma z^T G conj(z)) on h_C, G the Killing Gram on coroots
    G = alg.cartan_gram.astype(float)
    L = np.linalg.cholesky(np.linalg.inv(gamma * G))

    def draw(rng, n):
        xi = (rng.standard_normal((n, alg.rank)) + 1j * rng.standard_normal((n, alg.rank))) / math.sqrt(2)
        return xi @ L.T

    return draw


def _theta_matrix(alg: LieAlgebra, x):
    return alg.rep(cartan_involution(alg.sc, x))


class _RatioSums:
    __slots__ = ("n", "d", "nn", "dd", "nd", "count")

    def __init__(self):
        self.n = self.d = self.nd = 0j
        self.nn = self.dd = 0.0
        self.count = 0

    def add(self, num, den):
        self.n += complex(num.sum())
        self.d += complex(den.sum())
        self.nn += float(np.sum(np.abs(num) ** 2))
        self.dd += float(np.sum(np.abs(den) ** 2))
        self.nd += complex(np.sum(num * np.conj(den)))
        self.count += num.size

    def estimate(self) -> Estimate:
        # delta method for a self-normalised ratio
        r = self.n / self.d
        resid = self.nn - 2 * (np.conj(r) * self.nd).real + abs(r) ** 2 * self.dd
        return Estimate(complex(r), math.sqrt(max(resid, 0.0)) / abs(self.d), self.count)


def _ratio_run(draw, samples, seed, chunk=DEFAULT_CHUNK) -> Estimate:
    sizes = [chunk] * (samples // chunk) + ([samples % chunk] if samples % chunk else [])
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    acc = _RatioSums()
    for ss, n in zip(root.spawn(len(sizes)), sizes):
        acc.add(*draw(np.random.default_rng(ss), n))
    return acc.estimate()


@dataclass(frozen=True)
class RatioCheck:
    g_side: Estimate
    h_side: Estimate
    z: float
    passed: bool


def complex_weyl_ratio_check(F1: str | InvariantPolynomial, F2: str | InvariantPolynomial, alg: LieAlgebra,
                             b: float = -0.5, samples: int = 1_000_000, seed=0, z_tol: float = 3.0) -> RatioCheck:
    """Ratio of integrals of ``P_i(M, M^theta) exp(-2b B(M, M^theta))`` computed two ways.

    The g-side samples ``M`` from its own Gaussian weight; the h-side samples
    ``H + N`` with ``H`` in h_C and ``N`` in n+ and reweights by
    ``|Delta(H)|^2``.  The unknown volume constant cancels in the ratio.
    ``b`` must be negative for the weight to be integrable.
    """
    if b >= 0:
        raise ValueError("non-integrable weight: need b < 0 so that exp(-2b B(M, M^theta)) decays")
    if samples <= 0:
        raise ValueError("samples must be positive")
    gamma = -2.0 * b
    P1 = F1 if isinstance(F1, InvariantPolynomial) else parse_invariant(F1, alg.rep)
    P2 = F2 if isinstance(F2, InvariantPolynomial) else parse_invariant(F2, alg.rep)
    rs = alg.rs
    cartan = _cartan_sampler(alg, gamma)
    all_norms = np.array([float(rs.norm2(r)) for r in rs.roots])
    spec = NilpotentGaussianSpec(rs, gamma)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    ss_g, ss_h = root.spawn(2)

    def draw_g(rng, n):
        z = cartan(rng, n)
        m = rng.standard_normal((n, len(all_norms))) + 1j * rng.standard_normal((n, len(all_norms)))
        m *= np.sqrt(all_norms / (4 * gamma))
        M = np.concatenate([z, m], axis=1)
        X, Y = alg.rep(M), _theta_matrix(alg, M)
        return P1.evaluate(X, Y), P2.evaluate(X, Y)

    def draw_h(rng, n):
        z = cartan(rng, n)
        nil = sample_nilpotent(spec, rng, n)
        M = np.concatenate([z, nil, np.zeros((n, rs.n_pos))], axis=1)
        X, Y = alg.rep(M), _theta_matrix(alg, M)
        w = np.abs(delta(rs, z)) ** 2
        return P1.evaluate(X, Y) * w, P2.evaluate(X, Y) * w

    g_est = _ratio_run(draw_g, samples, ss_g)
    h_est = _ratio_run(draw_h, samples, ss_h)
    se = math.hypot(g_est.stderr, h_est.stderr)
    diff = abs(g_est.value - h_est.value)
    zscore = 0.0 if diff == 0 else (diff / se if se > 0 else math.inf)
    return RatioCheck(g_est, h_est, zscore, zscore < z_tol)


def nilpotent_average_mc(P: str | InvariantPolynomial, alg: LieAlgebra, H, gamma: float, samples: int,
                         seed=0) -> Estimate:
    """Gaussian average over n+ of ``P(H + N, (H + N)^theta)``.

    Up to the Weyl-invariant factor ``exp(gamma B(H, H^theta)) Z_{n+}`` this is
    the n+-integral of ``P(M, M^theta) exp(gamma B(M, M^theta))`` at ``M = H + N``.
    """
    P = P if isinstance(P, InvariantPolynomial) else parse_invariant(P, alg.rep)
    spec = NilpotentGaussianSpec(alg.rs, gamma)
    Hm = alg.rep(alg.sc.element(h=H))
    Hth = _theta_matrix(alg, alg.sc.element(h=H))

    def f(n):
        N, Nth = _nil_matrices(alg, n)
        return P.evaluate(Hm + N, Hth + Nth)

    return mc_expectation(f, spec, samples, seed)


def weyl_invariance_check(P, alg: LieAlgebra, H, gamma: float, samples: int, seed=0, z_tol: float = 3.0):
    """Compare the n+-average at ``H`` and at every ``w(H)``.

    Returns a list of ``(word, estimate, z)`` with ``z`` the combined-error
    z-score against the estimate at ``H``.
    """
    H = np.asarray(H, dtype=complex)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    ss = root.spawn(len(alg.weyl))
    base = nilpotent_average_mc(P, alg, H, gamma, samples, ss[0])
    out = []
    for w, s in zip(alg.weyl, ss):
        if not w.word:
            out.append((w.word, base, 0.0))
            continue
        est = nilpotent_average_mc(P, alg, weyl_act(w, H), gamma, samples, s)
        zsc = abs(est.value - base.value) / math.hypot(est.stderr, base.stderr)
        out.append((w.word, est, zsc))
    return out
