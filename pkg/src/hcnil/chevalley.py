"""Chevalley basis structure constants, Killing form and matrix representations.

Basis order is fixed throughout the package: the simple coroots
``H_1 .. H_r`` followed by the root vectors ``E_alpha`` in the order of
``RootSystem.roots`` (positive roots first).  Algebra elements are plain
complex coefficient vectors over that basis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .rootsys import RootSystem, build_root_system, parse_label

__all__ = [
    "StructureConstants",
    "Representation",
    "ChevalleyError",
    "chevalley_constants",
    "cartan_involution",
    "dagger",
    "adjoint_rep",
    "defining_rep",
    "format_matrix",
]


class ChevalleyError(RuntimeError):
    pass


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _neg(a):
    return tuple(-x for x in a)


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


class _NTable:
    """Signed structure constants ``N_{a,b}`` on root pairs.

    Signs on extraspecial pairs are +1; everything else follows from
    antisymmetry, ``N_{-a,-b} = -N_{a,b}``, the three-root relation
    ``N_{a,b}/|c|^2 = N_{b,c}/|a|^2 = N_{c,a}/|b|^2`` (a+b+c = 0) and the
    four-root relation for a+b+c+d = 0.
    """

    def __init__(self, rs: RootSystem):
        self.rs = rs
        self.is_pos = {r.coords: r.positive for r in rs.roots}
        self.norm = {r.coords: rs.norm2(r) for r in rs.roots}
        self.order = {r.coords: k for k, r in enumerate(rs.pos_roots)}
        self.extraspecial = {}
        pos = [r.coords for r in rs.pos_roots]
        for xi in pos:
            for r in pos:  # already in increasing total order
                s = _sub(xi, r)
                if s in self.is_pos and self.is_pos[s]:
                    self.extraspecial[xi] = (r, s)
                    break
        self._memo = {}

    def p(self, a, b):
        # largest p with b - p*a a root
        p = 0
        cur = _sub(b, a)
        while self.rs.is_root(cur):
            p += 1
            cur = _sub(cur, a)
        return p

    def __call__(self, a, b) -> Fraction:
        s = _add(a, b)
        if not self.rs.is_root(s):
            return Fraction(0)
        pa, pb = self.is_pos[a], self.is_pos[b]
        if pa and pb:
            return self._positive(a, b)
        if not pa and not pb:
            return -self._positive(_neg(a), _neg(b))
        if not pa:
            return -self(b, a)
        # a > 0, b < 0, a + b = s; use c = -s so that a + b + c = 0
        c = _neg(s)
        if self.is_pos[s]:
            # N_{a,b} = |c|^2/|a|^2 * N_{b,c}, both b and c negative
            return self.norm[c] / self.norm[a] * self(b, c)
        # N_{a,b} = |c|^2/|b|^2 * N_{c,a}, both c and a positive
        return self.norm[c] / self.norm[b] * self._positive(c, a)

    def _positive(self, a, b):
        key = (a, b)
        if key in self._memo:
            return self._memo[key]
        xi = _add(a, b)
        r, s = self.extraspecial[xi]
        if (a, b) == (r, s):
            val = Fraction(self.p(r, s) + 1)
        elif (a, b) == (s, r):
            val = -Fraction(self.p(r, s) + 1)
        else:
            mr, ms = _neg(r), _neg(s)
            t = Fraction(0)
            br, ar = _sub(b, r), _sub(a, r)
            if self.rs.is_root(br):
                t += self(b, mr) * self(a, ms) / self.norm[br]
            if self.rs.is_root(ar):
                t += self(mr, a) * self(b, ms) / self.norm[ar]
            n_rs = Fraction(self.p(r, s) + 1)
            val = self.norm[xi] * t / n_rs  # N_{-r,-s} = -N_{r,s}
        self._memo[key] = val
        return val


@dataclass(frozen=True, eq=False)
class StructureConstants:
    """Integer bracket table of a Chevalley basis.

    ``table[i, j, k]`` is the coefficient of basis vector ``k`` in
    ``[b_i, b_j]``.
    """

    rs: RootSystem
    table: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.table.shape[0]

    @property
    def rank(self) -> int:
        return self.rs.rank

    def root_index(self, root) -> int:
        """Basis index of ``E_root``."""
        return self.rs.rank + self.rs.index(root)

    def basis_labels(self) -> list[str]:
        return [f"H{i + 1}" for i in range(self.rank)] + [f"E{r}" for r in self.rs.roots]

    # -- elements -----------------------------------------------------------
    def element(self, h=None, e=None) -> np.ndarray:
        """Build a coefficient vector from Cartan coefficients and a root -> coefficient map."""
        x = np.zeros(self.dim, dtype=complex)
        if h is not None:
            x[: self.rank] = h
        for root, c in (e or {}).items():
            x[self.root_index(root)] += c
        return x

    def basis_vector(self, i: int) -> np.ndarray:
        x = np.zeros(self.dim, dtype=complex)
        x[i] = 1
        return x

    def split(self, x):
        """Return the (h, n+, n-) parts of ``x`` as coefficient vectors."""
        r, p = self.rank, self.rs.n_pos
        h, npl, nmi = np.zeros_like(x), np.zeros_like(x), np.zeros_like(x)
        h[..., :r] = x[..., :r]
        npl[..., r : r + p] = x[..., r : r + p]
        nmi[..., r + p :] = x[..., r + p :]
        return h, npl, nmi

    def _check(self, x):
        if np.shape(x)[-1] != self.dim:
            raise ValueError(f"basis mismatch: expected {self.dim} coefficients, got {np.shape(x)[-1]}")

    # -- operations ---------------------------------------------------------
    def bracket(self, x, y) -> np.ndarray:
        self._check(x)
        self._check(y)
        return np.einsum("i,j,ijk->k", x, y, self.table)

    def ad(self, x) -> np.ndarray:
        """Matrix of ``ad x`` acting on coefficient vectors (columns = inputs)."""
        self._check(x)
        return np.einsum("i,ijk->kj", x, self.table)

    @cached_property
    def ad_basis(self) -> np.ndarray:
        """Integer stack ``ad(b_i)`` for every basis vector."""
        return np.transpose(self.table, (0, 2, 1)).copy()

    @cached_property
    def killing_matrix(self) -> np.ndarray:
        """Exact integer Gram matrix ``B(b_i, b_j) = tr(ad b_i ad b_j)``."""
        ad = self.ad_basis
        return np.einsum("iab,jba->ij", ad, ad)

    def killing(self, x, y):
        self._check(x)
        self._check(y)
        return x @ self.killing_matrix @ y

    def killing_dual_form(self) -> list[list[Fraction]]:
        """Inner products ``<alpha_i, alpha_j>`` of simple roots induced by the Killing form."""
        r = self.rank
        gram = self.killing_matrix[:r, :r]
        if round(np.linalg.det(gram.astype(float))) == 0:
            raise ChevalleyError("singular Killing form on the Cartan subalgebra")
        from .rootsys import _fraction_inverse

        ginv = _fraction_inverse([[Fraction(int(v)) for v in row] for row in gram])
        a = self.rs.cartan.entries
        vals = [[Fraction(a[j][i]) for j in range(r)] for i in range(r)]
        return [
            [sum(vals[i][p] * ginv[p][q] * vals[k][q] for p in range(r) for q in range(r)) for k in range(r)]
            for i in range(r)
        ]

    def jacobi_violations(self, limit: int = 10) -> list[tuple[int, int, int]]:
        """Basis triples violating the Jacobi identity (exact integer check)."""
        t = self.table
        # [[x,y],z] + [[y,z],x] + [[z,x],y] over all triples
        a = np.einsum("ijl,lkm->ijkm", t, t)
        s = a + np.transpose(a, (1, 2, 0, 3)) + np.transpose(a, (2, 0, 1, 3))
        bad = np.argwhere(np.any(s != 0, axis=-1))
        return [tuple(int(v) for v in b) for b in bad[:limit]]

    @cached_property
    def compact_basis(self) -> np.ndarray:
        """Real basis of the compact form: ``i H_j``, then ``X_a, Y_a`` per positive root."""
        out = []
        for j in range(self.rank):
            out.append(1j * self.basis_vector(j))
        for r in self.rs.pos_roots:
            ep = self.basis_vector(self.root_index(r))
            em = self.basis_vector(self.root_index(-r))
            out.append(ep - em)
            out.append(1j * (ep + em))
        return np.array(out)


def chevalley_constants(rs: RootSystem | str) -> StructureConstants:
    """Build the Chevalley-basis bracket table of ``rs``.

    Raises ``ChevalleyError`` naming a violating triple if the resulting
    table is not antisymmetric or fails the Jacobi identity.
    """
    if isinstance(rs, str):
        rs = build_root_system(rs)
    r, nroot = rs.rank, len(rs.roots)
    dim = r + nroot
    table = np.zeros((dim, dim, dim), dtype=np.int64)
    nt = _NTable(rs)
    vals = rs.root_values
    for k, alpha in enumerate(rs.roots):
        for i in range(r):
            table[i, r + k, r + k] = vals[k, i]
            table[r + k, i, r + k] = -vals[k, i]
    for ka, a in enumerate(rs.roots):
        for kb, b in enumerate(rs.roots):
            s = _add(a.coords, b.coords)
            if not any(s):
                co = rs.coroot(a)
                table[r + ka, r + kb, :r] = co
            elif rs.is_root(s):
                n = nt(a.coords, b.coords)
                if n.denominator != 1 or abs(n) != nt.p(a.coords, b.coords) + 1:
                    raise ChevalleyError(f"bad structure constant N{a}{b} = {n}")
                table[r + ka, r + kb, r + rs.index(s)] = int(n)
    sc = StructureConstants(rs, table)
    if np.any(table + np.transpose(table, (1, 0, 2))):
        bad = np.argwhere(np.any(table + np.transpose(table, (1, 0, 2)), axis=-1))[0]
        raise ChevalleyError(f"antisymmetry violated on basis pair {tuple(bad)}")
    return sc


def cartan_involution(sc: StructureConstants, x) -> np.ndarray:
    """Antilinear involution ``E_a -> -E_{-a}``, ``H -> -H`` (with conjugated coefficients)."""
    x = np.asarray(x, dtype=complex)
    r, p = sc.rank, sc.rs.n_pos
    out = np.empty_like(x)
    out[..., :r] = -np.conj(x[..., :r])
    out[..., r : r + p] = -np.conj(x[..., r + p :])
    out[..., r + p :] = -np.conj(x[..., r : r + p])
    return out


def dagger(sc: StructureConstants, x) -> np.ndarray:
    return -cartan_involution(sc, x)


@dataclass(frozen=True, eq=False)
class Representation:
    """Matrix representation of a Chevalley basis.

    ``images[i]`` is the matrix of basis vector ``i``; ``index_ratio`` is the
    constant ``c`` with ``B(x, y) = c * tr(rho(x) rho(y))``.
    """

    sc: StructureConstants
    kind: str
    images: np.ndarray = field(repr=False)
    index_ratio: float
    family: str | None = None
    form: np.ndarray | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.images.shape[-1]

    def __call__(self, x) -> np.ndarray:
        """Matrix of an element (or a stack of elements)."""
        return np.tensordot(np.asarray(x), self.images, axes=([-1], [0]))

    @cached_property
    def _solver(self):
        flat = self.images.reshape(self.sc.dim, -1).T
        return np.linalg.pinv(flat), flat

    def coefficients(self, m, tol: float = 1e-10) -> np.ndarray:
        """Re-expand a matrix (or stack) in the Chevalley basis.

        Raises ``ValueError`` when the matrix is not in the represented
        algebra to within ``tol`` (relative to its norm).
        """
        m = np.asarray(m)
        pinv, flat = self._solver
        vec = m.reshape(m.shape[:-2] + (-1,))
        x = vec @ pinv.T
        resid = np.linalg.norm(x @ flat.T - vec, axis=-1)
        scale = np.maximum(1.0, np.linalg.norm(vec, axis=-1))
        if np.any(resid > tol * scale):
            raise ValueError(f"matrix outside the represented algebra (residual {float(np.max(resid)):.3g})")
        # drop pseudo-inverse round-off so exact inputs give exact coordinates
        x = np.where(np.abs(x) < 64 * np.finfo(float).eps * scale[..., None], 0, x)
        return x

    def bracket_residual(self) -> float:
        """Max operator-norm residual of ``[rho x, rho y] - rho [x, y]`` over basis pairs."""
        im = self.images
        comm = np.einsum("iab,jbc->ijac", im, im)
        comm = comm - np.transpose(comm, (1, 0, 2, 3))
        target = np.tensordot(self.sc.table, im, axes=([2], [0]))
        return float(np.max(np.linalg.norm(comm - target, ord=2, axis=(-2, -1))))

    def trace_form(self, x, y):
        return np.trace(self(x) @ self(y), axis1=-2, axis2=-1)

    def killing(self, mx, my):
        """Killing form of two represented matrices (stacks broadcast)."""
        return self.index_ratio * np.einsum("...ab,...ba->...", mx, my)


def adjoint_rep(sc: StructureConstants) -> Representation:
    return Representation(sc, "adjoint", sc.ad_basis.astype(float), 1.0, family=None)


def _unit(n, i, j):
    m = np.zeros((n, n))
    m[i, j] = 1.0
    return m


def _simple_generators(family: str, n: int):
    """Standard matrices for the simple positive root vectors and the invariant form."""
    if family == "A":
        size = n + 1
        return size, [_unit(size, i, i + 1) for i in range(n)], None
    if family in ("B", "D"):
        size = 2 * n + 1 if family == "B" else 2 * n
        form = np.fliplr(np.eye(size))
        pr = lambda i: size - 1 - i  # noqa: E731

        def pair(a, b):
            return _unit(size, a, b) - _unit(size, pr(b), pr(a))

        gens = [pair(i, i + 1) for i in range(n - 1)]
        if family == "B":
            gens.append(math.sqrt(2.0) * pair(n - 1, n))
        else:
            gens.append(pair(n - 2, pr(n - 1)))
        return size, gens, form
    if family == "C":
        size = 2 * n
        form = np.zeros((size, size))
        for i in range(size):
            form[i, size - 1 - i] = 1.0 if i < n else -1.0
        gens = [_unit(size, i, i + 1) - _unit(size, size - 2 - i, size - 1 - i) for i in range(n - 1)]
        gens.append(_unit(size, n - 1, n))
        return size, gens, form
    raise ValueError(f"no defining representation for family {family!r}; use the adjoint representation")


def _measure_index(sc, images, rng):
    xs = rng.standard_normal((32, sc.dim)) + 1j * rng.standard_normal((32, sc.dim))
    ys = rng.standard_normal((32, sc.dim)) + 1j * rng.standard_normal((32, sc.dim))
    mx = np.tensordot(xs, images, axes=([-1], [0]))
    my = np.tensordot(ys, images, axes=([-1], [0]))
    tr = np.einsum("sab,sba->s", mx, my)
    kil = np.einsum("si,ij,sj->s", xs, sc.killing_matrix, ys)
    c = np.vdot(tr, kil) / np.vdot(tr, tr)
    return float(c.real)


def defining_rep(family: str, n: int | None = None, sc: StructureConstants | None = None) -> Representation:
    """Defining matrix representation of a classical algebra.

    ``family`` may be a full label (``"B2"``) or a family letter with ``n``.
    The simple root vectors are the standard realisations (antidiagonal
    invariant forms for B, C and D, so that positive root vectors are strictly
    upper triangular and the Cartan subalgebra is diagonal); the remaining
    basis images are generated with the structure constants of ``sc`` and the
    lowering operators are transposes.
    """
    if n is None:
        family, n = parse_label(family)
    family = family.upper()
    if family not in "ABCD":
        raise ValueError(f"no defining representation for family {family!r}; use the adjoint representation")
    if sc is None:
        sc = chevalley_constants(f"{family}{n}")
    elif sc.rs.label != f"{family}{n}":
        raise ValueError(f"structure constants are for {sc.rs.label}, not {family}{n}")
    rs = sc.rs
    size, gens, form = _simple_generators(family, n)
    r = rs.rank
    images = np.zeros((sc.dim, size, size))
    for i, e in enumerate(gens):
        images[r + rs.index(rs.simple_root(i))] = e
        images[r + rs.index(-rs.simple_root(i))] = e.T
        images[i] = e @ e.T - e.T @ e
    # non-simple roots: E_xi = [E_{alpha_i}, E_beta] / N_{alpha_i, beta}
    for sign in (1, -1):
        for root in rs.pos_roots:
            if root.height == 1:
                continue
            xi = tuple(sign * c for c in root.coords)
            for i in range(r):
                ai = tuple(sign * int(k == i) for k in range(r))
                beta = _sub(xi, ai)
                if rs.is_root(beta):
                    ka, kb, kx = r + rs.index(ai), r + rs.index(beta), r + rs.index(xi)
                    nval = sc.table[ka, kb, kx]
                    images[kx] = (images[ka] @ images[kb] - images[kb] @ images[ka]) / nval
                    break
    cmat = sc.rs.cartan.as_array()
    for i in range(r):
        for j in range(r):
            ej = images[sc.root_index(rs.simple_root(j))]
            got = images[i] @ ej - ej @ images[i]
            if not np.allclose(got, cmat[i, j] * ej):
                raise ChevalleyError(f"generator images violate [H_{i + 1}, E_{j + 1}] relation")
    ratio = _measure_index(sc, images, np.random.default_rng(0))
    rep = Representation(sc, "defining", images, ratio, family=family, form=form)
    return rep


def format_matrix(m, precision: int = 4) -> str:
    """Plain-text grid for debugging output."""
    m = np.asarray(m)
    cells = []
    for row in m:
        out = []
        for v in row:
            v = complex(v)
            if abs(v.imag) < 10 ** (-precision):
                out.append(f"{v.real:.{precision}g}")
            else:
                out.append(f"{v.real:.{precision}g}{v.imag:+.{precision}g}i")
        cells.append(out)
    width = max(len(c) for row in cells for c in row)
    return "\n".join(" ".join(c.rjust(width) for c in row) for row in cells)
