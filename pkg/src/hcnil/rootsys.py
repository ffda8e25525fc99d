"""Root systems, Weyl groups, exponents and the Weyl denominator.

Conventions
-----------
Cartan matrices follow the Bourbaki numbering of simple roots and the
Kac index convention ``A[i][j] = alpha_j(H_i)`` where ``H_i`` is the coroot
of the i-th simple root.  Roots are integer coordinate tuples over the
simple roots; Cartan elements are coefficient vectors over the simple
coroots ``H_1 .. H_r``.
"""
from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

__all__ = [
    "CartanMatrix",
    "Root",
    "RootSystem",
    "WeylElement",
    "WeylGroupTooLarge",
    "InvalidCartanMatrix",
    "cartan_matrix",
    "parse_label",
    "build_root_system",
    "weyl_group",
    "weyl_act",
    "exponents",
    "coxeter_exponents",
    "delta",
    "DEFAULT_WEYL_CAP",
]

DEFAULT_WEYL_CAP = 10**6


class InvalidCartanMatrix(ValueError):
    pass


class WeylGroupTooLarge(RuntimeError):
    pass


_LABEL_RE = re.compile(r"^\s*([A-Ga-g])\s*(\d+)\s*$")
_MIN_RANK = {"A": 1, "B": 2, "C": 2, "D": 3}
_EXCEPTIONAL = {("G", 2), ("F", 4), ("E", 6), ("E", 7), ("E", 8)}


def parse_label(label: str) -> tuple[str, int]:
    """Split an algebra label such as ``"b3"`` into ``("B", 3)``."""
    m = _LABEL_RE.match(label)
    if not m:
        raise ValueError(f"unknown algebra label {label!r}")
    family, rank = m.group(1).upper(), int(m.group(2))
    if family in _MIN_RANK:
        if rank < _MIN_RANK[family]:
            raise ValueError(f"unknown algebra label {label!r}: rank too small for {family}")
    elif (family, rank) not in _EXCEPTIONAL:
        raise ValueError(f"unknown algebra label {label!r}")
    return family, rank


def _chain(n):
    a = [[0] * n for _ in range(n)]
    for i in range(n):
        a[i][i] = 2
        if i + 1 < n:
            a[i][i + 1] = a[i + 1][i] = -1
    return a


def _catalog(family, n):
    if family == "A":
        return _chain(n)
    if family == "B":
        a = _chain(n)
        a[n - 1][n - 2] = -2  # alpha_n short
        return a
    if family == "C":
        a = _chain(n)
        a[n - 2][n - 1] = -2  # alpha_n long
        return a
    if family == "D":
        a = _chain(n)
        a[n - 2][n - 1] = a[n - 1][n - 2] = 0
        a[n - 3][n - 1] = a[n - 1][n - 3] = -1
        return a
    if family == "G":
        return [[2, -3], [-1, 2]]  # alpha_1 short
    if family == "F":
        return [[2, -1, 0, 0], [-1, 2, -1, 0], [0, -2, 2, -1], [0, 0, -1, 2]]
    if family == "E":
        # Bourbaki: 1-3-4-5-6-7-8 chain, node 2 attached to node 4.
        a = [[0] * n for _ in range(n)]
        edges = [(1, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (2, 4)]
        for i in range(n):
            a[i][i] = 2
        for i, j in edges:
            if i <= n and j <= n:
                a[i - 1][j - 1] = a[j - 1][i - 1] = -1
        return a
    raise ValueError(family)


@dataclass(frozen=True)
class CartanMatrix:
    label: str
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        _validate_cartan(self.entries)

    @property
    def rank(self) -> int:
        return len(self.entries)

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)


def cartan_matrix(label: str) -> CartanMatrix:
    """Standard (Bourbaki-numbered) Cartan matrix for ``label``."""
    family, rank = parse_label(label)
    entries = tuple(tuple(row) for row in _catalog(family, rank))
    return CartanMatrix(f"{family}{rank}", entries)


def _symmetrizer(a):
    # d_i a_ij = d_j a_ji; propagate over the (connected) Dynkin graph.
    n = len(a)
    d = [None] * n
    d[0] = Fraction(1)
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in range(n):
            if a[i][j] != 0 and i != j:
                dj = d[i] * a[i][j] / a[j][i]
                if d[j] is None:
                    d[j] = dj
                    queue.append(j)
                elif d[j] != dj:
                    raise InvalidCartanMatrix("not symmetrizable")
    if any(x is None for x in d):
        raise InvalidCartanMatrix("Dynkin diagram is not connected (reducible algebra)")
    return d


def _validate_cartan(a):
    n = len(a)
    if n == 0 or any(len(row) != n for row in a):
        raise InvalidCartanMatrix("Cartan matrix must be square and non-empty")
    for i in range(n):
        if a[i][i] != 2:
            raise InvalidCartanMatrix(f"diagonal entry ({i},{i}) must equal 2")
        for j in range(n):
            if i == j:
                continue
            if a[i][j] not in (0, -1, -2, -3):
                raise InvalidCartanMatrix(f"off-diagonal entry ({i},{j}) must lie in {{0,-1,-2,-3}}")
            if (a[i][j] == 0) != (a[j][i] == 0):
                raise InvalidCartanMatrix(f"entry ({i},{j}) is zero but ({j},{i}) is not")
    d = _symmetrizer(a)
    sym = np.array([[float(d[i] * a[i][j]) for j in range(n)] for i in range(n)])
    if np.linalg.eigvalsh(0.5 * (sym + sym.T)).min() <= 0:
        raise InvalidCartanMatrix("Cartan matrix is not of finite type (not positive definite)")


@dataclass(frozen=True)
class Root:
    coords: tuple[int, ...]

    @property
    def height(self) -> int:
        return sum(self.coords)

    @property
    def positive(self) -> bool:
        return all(c >= 0 for c in self.coords) and any(self.coords)

    def __neg__(self) -> Root:
        return Root(tuple(-c for c in self.coords))

    def __str__(self):
        return "(" + ",".join(str(c) for c in self.coords) + ")"


def _order_key(coords):
    # Total order on positive roots: height, then lexicographic coordinates.
    return (sum(coords), coords)


@dataclass(frozen=True, eq=False)
class RootSystem:
    """Finite crystallographic root system attached to a Cartan matrix.

    ``roots`` lists the positive roots in the documented total order
    (height, then lexicographic coordinates) followed by their negatives in
    the same order.  ``inner`` holds the Killing-induced inner products of
    the simple roots as exact fractions.
    """

    cartan: CartanMatrix
    roots: tuple[Root, ...]
    inner: tuple[tuple[Fraction, ...], ...]
    _index: dict = field(repr=False, compare=False)

    @property
    def rank(self) -> int:
        return self.cartan.rank

    @property
    def label(self) -> str:
        return self.cartan.label

    @property
    def pos_roots(self) -> tuple[Root, ...]:
        return self.roots[: len(self.roots) // 2]

    @property
    def n_pos(self) -> int:
        return len(self.roots) // 2

    @property
    def dim(self) -> int:
        return self.rank + len(self.roots)

    def index(self, root) -> int:
        coords = root.coords if isinstance(root, Root) else tuple(root)
        return self._index[coords]

    def is_root(self, coords) -> bool:
        return tuple(coords) in self._index

    def simple_root(self, i: int) -> Root:
        return Root(tuple(int(k == i) for k in range(self.rank)))

    def ip(self, a, b) -> Fraction:
        """Inner product of two roots (or any integer weight vectors over the simple roots)."""
        a = a.coords if isinstance(a, Root) else a
        b = b.coords if isinstance(b, Root) else b
        n = self.rank
        return sum((a[i] * b[j] * self.inner[i][j] for i in range(n) for j in range(n)
                    if a[i] and b[j]), Fraction(0))

    def norm2(self, a) -> Fraction:
        return self.ip(a, a)

    @cached_property
    def root_values(self) -> np.ndarray:
        """Integer matrix ``V[k, j] = roots[k](H_j)``."""
        c = np.array([r.coords for r in self.roots], dtype=np.int64)
        return c @ self.cartan.as_array().T

    def coroot(self, root) -> tuple[int, ...]:
        """Coefficients of ``H_alpha`` over the simple coroots."""
        a = root.coords if isinstance(root, Root) else tuple(root)
        na = self.norm2(a)
        out = []
        for j, c in enumerate(a):
            v = c * self.inner[j][j] / na
            if v.denominator != 1:
                raise AssertionError("non-integral coroot coefficient")
            out.append(int(v))
        return tuple(out)

    def evaluate(self, root, H):
        """``alpha(H)`` for a Cartan element given by coroot coefficients."""
        k = self.index(root)
        return sum(int(v) * h for v, h in zip(self.root_values[k], H))

    def reflect(self, root, i: int) -> tuple[int, ...]:
        a = root.coords if isinstance(root, Root) else tuple(root)
        pairing = sum(a[k] * self.cartan.entries[i][k] for k in range(self.rank))
        out = list(a)
        out[i] -= pairing
        return tuple(out)


def _closure(cartan: CartanMatrix):
    n = cartan.rank
    a = cartan.entries
    simple = [tuple(int(k == i) for k in range(n)) for i in range(n)]
    seen = set(simple)
    queue = deque(simple)
    while queue:
        beta = queue.popleft()
        for i in range(n):
            pairing = sum(beta[k] * a[i][k] for k in range(n))
            img = list(beta)
            img[i] -= pairing
            img = tuple(img)
            if img not in seen:
                seen.add(img)
                queue.append(img)
    return seen


def build_root_system(cartan: CartanMatrix | str) -> RootSystem:
    """Generate the full root set of ``cartan`` by simple-reflection closure.

    The Killing form on the Cartan subalgebra is ``B(H, H') = sum over all
    roots of alpha(H) alpha(H')`` (the trace of ``ad H ad H'``, which is
    diagonal on the root spaces and zero on h).  The inner products on the
    dual space are obtained by inverting its Gram matrix on the coroots.
    """
    if isinstance(cartan, str):
        cartan = cartan_matrix(cartan)
    roots = _closure(cartan)
    pos = sorted((r for r in roots if all(c >= 0 for c in r)), key=_order_key)
    if 2 * len(pos) != len(roots):
        raise InvalidCartanMatrix("root closure is not symmetric; Cartan matrix is invalid")
    ordered = [Root(r) for r in pos] + [Root(tuple(-c for c in r)) for r in pos]
    index = {r.coords: k for k, r in enumerate(ordered)}

    n = cartan.rank
    a = cartan.entries
    vals = [[sum(r.coords[k] * a[j][k] for k in range(n)) for j in range(n)] for r in ordered]
    gram = [[Fraction(sum(v[i] * v[j] for v in vals)) for j in range(n)] for i in range(n)]
    ginv = _fraction_inverse(gram)
    # simple root alpha_i corresponds to the row vector (alpha_i(H_j))_j = A[j][i]
    simple_vals = [[Fraction(a[j][i]) for j in range(n)] for i in range(n)]
    inner = tuple(
        tuple(
            sum(simple_vals[i][p] * ginv[p][q] * simple_vals[k][q] for p in range(n) for q in range(n))
            for k in range(n)
        )
        for i in range(n)
    )
    return RootSystem(cartan, tuple(ordered), inner, index)


def _fraction_inverse(m):
    n = len(m)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular Gram matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


@dataclass(frozen=True, eq=False)
class WeylElement:
    """Weyl group element.

    ``word`` is a reduced word in the simple reflections (applied right to
    left, ``w = s_{word[0]} ... s_{word[-1]}``), ``perm[k]`` is the index of
    ``w(roots[k])`` and ``hmat`` is the integer matrix of the action on
    coroot coefficients.  Equality is by permutation.
    """

    word: tuple[int, ...]
    perm: tuple[int, ...]
    hmat: np.ndarray = field(repr=False)

    @property
    def sign(self) -> int:
        return -1 if len(self.word) % 2 else 1

    def __eq__(self, other):
        return isinstance(other, WeylElement) and self.perm == other.perm

    def __hash__(self):
        return hash(self.perm)


def _simple_reflection_data(rs: RootSystem):
    n = rs.rank
    perms, mats = [], []
    for i in range(n):
        perms.append(tuple(rs.index(rs.reflect(r, i)) for r in rs.roots))
        m = np.eye(n, dtype=np.int64)
        # s_i(H) = H - alpha_i(H) H_i,  alpha_i(H) = sum_j h_j A[j][i]
        m[i, :] -= rs.cartan.as_array()[:, i]
        mats.append(m)
    return perms, mats


def weyl_group(rs: RootSystem, cap: int = DEFAULT_WEYL_CAP) -> list[WeylElement]:
    """Enumerate the Weyl group by breadth-first closure of simple reflections.

    Elements come out in order of length, so every stored word is reduced.
    """
    perms, mats = _simple_reflection_data(rs)
    n = rs.rank
    identity = tuple(range(len(rs.roots)))
    elements = [WeylElement((), identity, np.eye(n, dtype=np.int64))]
    seen = {identity}
    queue = deque(elements)
    while queue:
        w = queue.popleft()
        for i in range(n):
            p = perms[i]
            perm = tuple(p[k] for k in w.perm)
            if perm in seen:
                continue
            seen.add(perm)
            if len(seen) > cap:
                raise WeylGroupTooLarge(
                    f"Weyl group too large: found at least {len(seen)} elements (cap {cap})"
                )
            x = WeylElement((i,) + w.word, perm, mats[i] @ w.hmat)
            elements.append(x)
            queue.append(x)
    return elements


def weyl_act(w: WeylElement, H):
    """Act with ``w`` on a Cartan element given by coroot coefficients.

    Works with numpy arrays (any dtype, trailing axis = coefficients) and
    with plain sequences of exact numbers such as ``Fraction``.
    """
    m = w.hmat
    if isinstance(H, np.ndarray):
        if H.shape[-1] != m.shape[0]:
            raise ValueError(f"dimension mismatch: expected {m.shape[0]} coefficients, got {H.shape[-1]}")
        return H @ m.T
    if len(H) != m.shape[0]:
        raise ValueError(f"dimension mismatch: expected {m.shape[0]} coefficients, got {len(H)}")
    return [sum(int(m[i, j]) * H[j] for j in range(len(H))) for i in range(len(H))]


def exponents(rs: RootSystem) -> list[int]:
    """Exponents as the dual partition of the positive-root height counts.

    >>> exponents(build_root_system("G2"))
    [1, 5]
    """
    counts = {}
    for r in rs.pos_roots:
        counts[r.height] = counts.get(r.height, 0) + 1
    top = max(counts)
    out = []
    for h in range(1, top + 1):
        nxt = counts.get(h + 1, 0)
        out.extend([h] * (counts[h] - nxt))
    return sorted(out)


def coxeter_exponents(rs: RootSystem) -> list[int]:
    """Exponents from the eigenvalue phases of a Coxeter element."""
    _, mats = _simple_reflection_data(rs)
    c = np.eye(rs.rank)
    for m in mats:
        c = c @ m
    h = len(rs.roots) // rs.rank
    phases = np.angle(np.linalg.eigvals(c)) % (2 * math.pi)
    return sorted(int(round(p * h / (2 * math.pi))) % h for p in phases)


def delta(rs: RootSystem, H):
    """Product of ``alpha(H)`` over the positive roots.

    Exact when ``H`` holds exact numbers; a numpy array with trailing axis
    of length ``rank`` is evaluated in a vectorised way.
    """
    if isinstance(H, np.ndarray):
        vals = H @ rs.root_values[: rs.n_pos].T
        return np.prod(vals, axis=-1)
    out = 1
    for k in range(rs.n_pos):
        out = out * sum(int(v) * h for v, h in zip(rs.root_values[k], H))
    return out
