"""Gaussian moments: real and complex ensembles, Wick calculus on n+, and Z_{n+}."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .estimate import DEFAULT_CHUNK, Accumulator, Estimate, run_chunks
from .rootsys import RootSystem

__all__ = [
    "QuadraticParams",
    "Polynomial",
    "GaussPolynomial",
    "NilpotentGaussianSpec",
    "generating_function",
    "moment_real",
    "moment_complex",
    "moment_real_mc",
    "moment_complex_mc",
    "wick_expectation",
    "mc_expectation",
    "sample_nilpotent",
    "z_nplus",
    "z_nplus_mc",
]


@dataclass(frozen=True)
class QuadraticParams:
    """Coefficients of ``a<x,x> + 2b<x,y> + c<y,y>``."""

    a: complex
    b: complex
    c: complex

    @property
    def delta(self) -> complex:
        return self.a * self.c - self.b * self.b

    @property
    def in_real_domain(self) -> bool:
        """Real integral converges: real a, c > 0 and ac > b^2."""
        a, b, c = (complex(v) for v in (self.a, self.b, self.c))
        if max(abs(a.imag), abs(b.imag), abs(c.imag)) > 0:
            return False
        return a.real > 0 and c.real > 0 and a.real * c.real > b.real**2

    @property
    def complex_form(self) -> np.ndarray:
        """Matrix of the exponent in real/imaginary coordinates of ``z = x + iy``."""
        a, b, c = (complex(v) for v in (self.a, self.b, self.c))
        return np.array([[a + c + 2 * b, 1j * (a - c)], [1j * (a - c), 2 * b - a - c]])

    @property
    def in_complex_domain(self) -> bool:
        """Complex integral converges: the real part of the exponent form is positive definite.

        This is a sufficient condition; it implies ``Re(a + c + 2b) > 0``.
        """
        re = self.complex_form.real
        return bool(np.all(np.linalg.eigvalsh(re) > 0))

    def _require_nonsingular(self):
        if self.delta == 0:
            raise ValueError("singular quadratic parameters: ac - b^2 = 0")


def generating_function(A, B, qp: QuadraticParams) -> complex:
    """Moment generating function shared by the real and complex ensembles."""
    qp._require_nonsingular()
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    d = qp.delta
    quad = qp.c / d * (A @ A) + qp.a / d * (B @ B) - 2 * qp.b / d * (A @ B)
    return complex(np.exp(0.25 * quad))


class Polynomial:
    """Sparse polynomial with complex coefficients.

    Monomials are exponent tuples of fixed length ``nvars``.  For moments over
    ``V x V`` the first half of the variables are the ``x`` (or ``z``)
    coordinates and the second half the ``y`` (or ``conj z``) coordinates.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms=None):
        self.nvars = nvars
        self.terms = {}
        for k, v in (terms or {}).items():
            if len(k) != nvars:
                raise ValueError("monomial length does not match nvars")
            if v != 0:
                self.terms[tuple(k)] = self.terms.get(tuple(k), 0) + v

    @classmethod
    def constant(cls, nvars, value=1) -> Polynomial:
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars, i, coeff=1) -> Polynomial:
        key = [0] * nvars
        key[i] = 1
        return cls(nvars, {tuple(key): coeff})

    @property
    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=0)

    def __len__(self):
        return len(self.terms)

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return Polynomial(self.nvars, {k: v for k, v in out.items() if v != 0})

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial(self.nvars, {k: v * other for k, v in self.terms.items()})
        out = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                out[k] = out.get(k, 0) + v1 * v2
        return Polynomial(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = Polynomial.constant(self.nvars)
        for _ in range(n):
            out = out * self
        return out

    def __call__(self, values) -> np.ndarray:
        """Evaluate at points; ``values`` has trailing axis ``nvars``."""
        values = np.asarray(values)
        out = np.zeros(values.shape[:-1], dtype=complex)
        for k, v in self.terms.items():
            term = np.full(values.shape[:-1], v, dtype=complex)
            for i, e in enumerate(k):
                if e:
                    term = term * values[..., i] ** e
            out += term
        return out

    def __repr__(self):
        return f"Polynomial({self.nvars}, {len(self.terms)} terms, degree {self.degree})"


# In the nilpotent-Gaussian setting the first half of the variables are the
# n_alpha and the second half their complex conjugates.
GaussPolynomial = Polynomial


def _pair_moment(p, q, sxx, syy, sxy):
    # p! q! [A^p B^q] exp(sxx A^2/2 + syy B^2/2 + sxy A B)
    total = 0
    for k in range(min(p, q) + 1):
        if (p - k) % 2 or (q - k) % 2:
            continue
        i, j = (p - k) // 2, (q - k) // 2
        total += (sxx / 2) ** i * (syy / 2) ** j * sxy**k / (math.factorial(i) * math.factorial(j) * math.factorial(k))
    return math.factorial(p) * math.factorial(q) * total


def _moment_symbolic(F: Polynomial, qp: QuadraticParams) -> complex:
    qp._require_nonsingular()
    if F.nvars % 2:
        raise ValueError("F must have an even number of variables (x and y halves)")
    n = F.nvars // 2
    d = qp.delta
    sxx, syy, sxy = qp.c / (2 * d), qp.a / (2 * d), -qp.b / (2 * d)
    total = 0j
    for k, v in F.terms.items():
        term = v
        for j in range(n):
            term *= _pair_moment(k[j], k[n + j], sxx, syy, sxy)
            if term == 0:
                break
        total += term
    return complex(total)


def moment_real(F: Polynomial, qp: QuadraticParams) -> complex:
    """Normalised real Gaussian moment of ``F(x, y)``.

    Evaluated by applying ``F(d/dA, d/dB)`` to the generating function at
    zero; the result is a polynomial in ``a/delta, b/delta, c/delta`` and is
    defined whenever ``delta != 0``.
    """
    return _moment_symbolic(F, qp)


def moment_complex(F: Polynomial, qp: QuadraticParams) -> complex:
    """Normalised complex Gaussian moment of ``F(z, conj z)``; same polynomial as :func:`moment_real`."""
    return _moment_symbolic(F, qp)


def _ratio_estimate(num, den, flags) -> Estimate:
    # self-normalised importance sampling, delta-method standard error
    n = num.size
    r = num.sum() / den.sum()
    resid = num - r * den
    se = math.sqrt(float(np.sum(np.abs(resid) ** 2))) / float(abs(den.sum()))
    return Estimate(complex(r), se * math.sqrt(n / max(n - 1, 1)), n, tuple(flags))


def moment_real_mc(F: Polynomial, qp: QuadraticParams, samples: int, seed, broaden: float = 1.5) -> Estimate:
    """Monte Carlo of the literal real integral (importance sampling from a wide isotropic Gaussian)."""
    if not qp.in_real_domain:
        raise ValueError("parameters outside the real convergence domain")
    n = F.nvars // 2
    a, b, c = (complex(v).real for v in (qp.a, qp.b, qp.c))
    lam = np.linalg.eigvalsh(np.array([[a, b], [b, c]])).min()
    s2 = broaden / (2 * lam)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((samples, n)) * math.sqrt(s2)
    y = rng.standard_normal((samples, n)) * math.sqrt(s2)
    expo = -(a * np.sum(x * x, 1) + c * np.sum(y * y, 1) + 2 * b * np.sum(x * y, 1))
    logq = -(np.sum(x * x, 1) + np.sum(y * y, 1)) / (2 * s2)
    w = np.exp(expo - logq)
    vals = F(np.concatenate([x, y], axis=1))
    return _ratio_estimate(vals * w, w, ())


def moment_complex_mc(F: Polynomial, qp: QuadraticParams, samples: int, seed, broaden: float = 1.5) -> Estimate:
    """Monte Carlo of the literal complex integral over ``z = x + iy``."""
    if not qp.in_complex_domain:
        raise ValueError("parameters outside the complex convergence domain")
    n = F.nvars // 2
    form = qp.complex_form
    lam = np.linalg.eigvalsh(form.real).min()
    s2 = broaden / (2 * lam)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((samples, n)) * math.sqrt(s2)
    y = rng.standard_normal((samples, n)) * math.sqrt(s2)
    z = x + 1j * y
    a, b, c = (complex(v) for v in (qp.a, qp.b, qp.c))
    zz = np.sum(z * z, 1)
    expo = -(a * zz + c * np.conj(zz) + 2 * b * np.sum(z * np.conj(z), 1))
    logq = -(np.sum(x * x, 1) + np.sum(y * y, 1)) / (2 * s2)
    w = np.exp(expo - logq)
    vals = F(np.concatenate([z, np.conj(z)], axis=1))
    return _ratio_estimate(vals * w, w, ())


@dataclass(frozen=True, eq=False)
class NilpotentGaussianSpec:
    """Complex Gaussian on n+ with weight ``exp(gamma B(N, N^theta))``.

    In coordinates ``N = sum n_alpha E_alpha`` the weight factorises as
    ``prod exp(-2 gamma |n_alpha|^2 / <alpha,alpha>)``.
    """

    rs: RootSystem
    gamma: complex

    def __post_init__(self):
        if complex(self.gamma).real <= 0:
            raise ValueError("nilpotent Gaussian needs Re(gamma) > 0")

    @cached_property
    def norms(self) -> tuple[Fraction, ...]:
        return tuple(self.rs.norm2(r) for r in self.rs.pos_roots)

    @cached_property
    def variances(self) -> np.ndarray:
        """``E |n_alpha|^2 = <alpha,alpha> / (2 gamma)`` per positive root."""
        return np.array([float(x) for x in self.norms]) / (2 * complex(self.gamma))

    @property
    def nvars(self) -> int:
        return 2 * self.rs.n_pos


def wick_expectation(P: Polynomial, spec: NilpotentGaussianSpec) -> complex:
    """Exact normalised expectation of ``P(n, conj n)``.

    Pairing rule ``E[n_a conj(n_b)] = delta_ab var_a`` with no holomorphic or
    antiholomorphic self-pairings; for independent roots the matchings of
    ``n_a^p conj(n_a)^q`` collapse to ``delta_pq p! var_a^p``.
    """
    p = spec.rs.n_pos
    if P.nvars != 2 * p:
        raise ValueError(f"polynomial has {P.nvars} variables, expected {2 * p}")
    var = spec.variances
    total = 0j
    fact = {}
    for k, v in P.terms.items():
        term = v
        for i in range(p):
            e = k[i]
            if e != k[p + i]:
                term = 0
                break
            if e:
                if e not in fact:
                    fact[e] = math.factorial(e)
                term = term * fact[e] * var[i] ** e
        total += term
    return complex(total)


def sample_nilpotent(spec: NilpotentGaussianSpec, rng, n: int, gamma_ref=None) -> np.ndarray:
    """Draw ``n`` samples of the coordinates ``n_alpha`` for real ``gamma_ref`` (defaults to Re gamma)."""
    g = complex(spec.gamma).real if gamma_ref is None else float(gamma_ref)
    var = np.array([float(x) for x in spec.norms]) / (2 * g)
    p = spec.rs.n_pos
    xi = rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p))
    return xi * np.sqrt(var / 2)


def mc_expectation(f, spec: NilpotentGaussianSpec, samples: int, seed, chunk: int = DEFAULT_CHUNK,
                   threads: int = 1) -> Estimate:
    """Monte Carlo expectation of ``f(n)`` where ``n`` has shape ``(batch, n_pos)``.

    Non-real ``gamma`` is handled by reweighting samples drawn at
    ``Re(gamma)``; the estimate then carries the ``"reweighted"`` flag.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")
    g = complex(spec.gamma)
    norms = np.array([float(x) for x in spec.norms])
    reweight = g.imag != 0

    def draw(rng, n):
        s = sample_nilpotent(spec, rng, n)
        vals = np.asarray(f(s), dtype=complex)
        if reweight:
            r2 = np.sum(np.abs(s) ** 2 / norms, axis=1)
            w = (g / g.real) ** len(norms) * np.exp(-2j * g.imag * r2)
            vals = vals * w
        return vals

    acc = run_chunks(draw, samples, seed, chunk=chunk, threads=threads)
    return acc.estimate(("reweighted",) if reweight else ())


def _check_gamma(gamma):
    if gamma == 0:
        raise ValueError("gamma must be non-zero")


def z_nplus(rs: RootSystem, gamma) -> complex:
    """Gaussian integral over n+ of ``exp(gamma B(N, N^theta))``: ``prod pi <a,a> / (2 gamma)``."""
    _check_gamma(gamma)
    norms = Fraction(1)
    for r in rs.pos_roots:
        norms *= rs.norm2(r)
    return float(norms) * (math.pi / (2 * complex(gamma))) ** rs.n_pos


def z_nplus_mc(rs: RootSystem, gamma: float, samples: int, seed, ref_var: float | None = None) -> Estimate:
    """Importance-sampling estimate of :func:`z_nplus` against a reference complex Gaussian."""
    _check_gamma(gamma)
    p = rs.n_pos
    norms = np.array([float(rs.norm2(r)) for r in rs.pos_roots])
    s2 = ref_var if ref_var is not None else 1.5 * float(norms.max()) / (2 * gamma)

    def draw(rng, n):
        xi = rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p))
        z = xi * math.sqrt(s2 / 2)
        r2 = np.abs(z) ** 2
        log_target = np.sum(-2 * gamma * r2 / norms, axis=1)
        log_ref = np.sum(-r2 / s2 - math.log(math.pi * s2), axis=1)
        return np.exp(log_target - log_ref)

    return run_chunks(draw, samples, seed).estimate()
