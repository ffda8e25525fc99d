"""Bundle of root system, structure constants and a working representation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .chevalley import Representation, StructureConstants, adjoint_rep, chevalley_constants, defining_rep
from .rootsys import DEFAULT_WEYL_CAP, RootSystem, build_root_system, exponents, parse_label, weyl_group

__all__ = ["LieAlgebra", "load_algebra"]


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    rs: RootSystem
    sc: StructureConstants
    rep: Representation

    @property
    def label(self) -> str:
        return self.rs.label

    @property
    def family(self) -> str:
        return self.label[0]

    @property
    def rank(self) -> int:
        return self.rs.rank

    @cached_property
    def weyl(self):
        return weyl_group(self.rs, DEFAULT_WEYL_CAP)

    @cached_property
    def exponents(self) -> list[int]:
        return exponents(self.rs)

    @cached_property
    def cartan_gram(self) -> np.ndarray:
        """Killing form on the simple coroots (integer matrix)."""
        r = self.rank
        return self.sc.killing_matrix[:r, :r]

    def killing_h(self, H, J):
        """Killing form of two Cartan elements given by coroot coefficients (broadcasts)."""
        return np.einsum("...i,ij,...j->...", np.asarray(H), self.cartan_gram, np.asarray(J))

    def cartan_element(self, H) -> np.ndarray:
        return self.sc.element(h=H)

    def nilpotent_element(self, n) -> np.ndarray:
        """Algebra vector(s) ``sum n_alpha E_alpha`` over positive roots."""
        n = np.asarray(n, dtype=complex)
        r, p = self.rank, self.rs.n_pos
        out = np.zeros(n.shape[:-1] + (self.sc.dim,), dtype=complex)
        out[..., r : r + p] = n
        return out

    @cached_property
    def rho_check(self) -> np.ndarray:
        """Coroot coefficients of the element with ``alpha_i(H) = 1`` for every simple root."""
        a = self.rs.cartan.as_array().astype(float)
        # alpha_i(H) = sum_j h_j A[j][i]
        return np.linalg.solve(a.T, np.ones(self.rank))

    def default_pair(self):
        """Regular pair (H, J) along rho-check, scaled so that B(H, J) = 5.6.

        For A1 this is ``H = H_alpha``, ``J = 0.7 H_alpha``.
        """
        rc = self.rho_check
        s = 2 * math.sqrt(2 / float(self.killing_h(rc, rc)))
        H = s * rc
        return H.astype(complex), (0.7 * H).astype(complex)


@lru_cache(maxsize=None)
def load_algebra(label: str, rep: str = "auto") -> LieAlgebra:
    """Build (and cache) the algebra for ``label``.

    ``rep="auto"`` uses the defining representation for classical families
    and the adjoint representation for exceptional ones.
    """
    family, rank = parse_label(label)
    rs = build_root_system(f"{family}{rank}")
    sc = chevalley_constants(rs)
    if rep == "auto":
        rep = "defining" if family in "ABCD" else "adjoint"
    if rep == "defining":
        r = defining_rep(family, rank, sc=sc)
    elif rep == "adjoint":
        r = adjoint_rep(sc)
    else:
        raise ValueError(f"unknown representation kind {rep!r}")
    return LieAlgebra(rs, sc, r)
