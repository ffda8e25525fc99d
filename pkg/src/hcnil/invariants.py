"""Trace-word invariant polynomials and their text syntax.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := scalar | [scalar '*'] trace ('*' trace)*
    trace  := 'tr(' word ')'
    word   := ('X' | 'Y')+            (letters separated by spaces)
    scalar := decimal literal

A leading sign is allowed on the first term.  A bare scalar term is a
constant, so ``"1"`` is the function that is identically one.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .chevalley import Representation

__all__ = ["DSLSyntaxError", "InvariantPolynomial", "parse_invariant"]


class DSLSyntaxError(ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(?P<tr>tr\()|(?P<op>[-+*)])|(?P<letter>[XY])(?![A-Za-z0-9_]))")


class _Parser:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def _skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self._skip()
        if self.pos >= len(self.text):
            return None, None, self.pos
        m = _TOKEN.match(self.text, self.pos)
        if not m:
            raise DSLSyntaxError(f"unexpected character {self.text[self.pos]!r}", self.pos)
        kind = m.lastgroup
        return kind, m.group(kind), self.pos

    def take(self):
        kind, val, start = self.peek()
        if kind is not None:
            m = _TOKEN.match(self.text, self.pos)
            self.pos = m.end()
        return kind, val, start

    def expect(self, kind, val=None):
        k, v, start = self.take()
        if k != kind or (val is not None and v != val):
            what = "end of input" if k is None else repr(v)
            raise DSLSyntaxError(f"expected {val or kind}, found {what}", start)
        return v

    def parse(self):
        terms = []
        sign = 1.0
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            sign = -1.0 if val == "-" else 1.0
        terms.append(self.term(sign))
        while True:
            kind, val, start = self.peek()
            if kind is None:
                break
            if kind == "op" and val in "+-":
                self.take()
                terms.append(self.term(-1.0 if val == "-" else 1.0))
            else:
                raise DSLSyntaxError(f"unexpected {val!r}", start)
        return terms

    def term(self, sign):
        kind, val, start = self.peek()
        coeff = sign
        words = []
        if kind == "num":
            self.take()
            coeff *= float(val)
            k2, v2, _ = self.peek()
            if not (k2 == "op" and v2 == "*"):
                return coeff, ()
            self.take()
        elif kind is None:
            raise DSLSyntaxError("expected term, found end of input", start)
        words.append(self.trace())
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val == "*":
                self.take()
                words.append(self.trace())
            else:
                break
        return coeff, tuple(words)

    def trace(self):
        self.expect("tr", "tr(")
        letters = []
        while True:
            kind, val, start = self.peek()
            if kind == "letter":
                self.take()
                letters.append(val)
            elif kind == "op" and val == ")":
                if not letters:
                    raise DSLSyntaxError("empty trace word", start)
                self.take()
                return tuple(letters)
            else:
                what = "end of input" if kind is None else repr(val)
                raise DSLSyntaxError(f"expected X, Y or ')', found {what}", start)


@dataclass(frozen=True, eq=False)
class InvariantPolynomial:
    """Sum of products of traces of words in two matrix slots ``X`` and ``Y``."""

    source: str
    terms: tuple[tuple[float, tuple[tuple[str, ...], ...]], ...]
    rep: Representation | None = None

    @property
    def degree(self) -> int:
        return max((sum(len(w) for w in words) for _, words in self.terms), default=0)

    @property
    def is_constant(self) -> bool:
        return all(not words for _, words in self.terms)

    def evaluate(self, X, Y) -> np.ndarray:
        """Evaluate on matrices (or broadcastable stacks) ``X = rho(x)``, ``Y = rho(y)``."""
        X = np.asarray(X)
        Y = np.asarray(Y)
        shape = np.broadcast_shapes(X.shape[:-2], Y.shape[:-2])
        cache = {}
        out = np.zeros(shape, dtype=complex)
        for coeff, words in self.terms:
            val = np.full(shape, coeff, dtype=complex)
            for w in words:
                if w not in cache:
                    m = X if w[0] == "X" else Y
                    for letter in w[1:]:
                        m = m @ (X if letter == "X" else Y)
                    cache[w] = np.trace(m, axis1=-2, axis2=-1)
                val = val * cache[w]
            out = out + val
        return out

    def __call__(self, x, y):
        """Evaluate on algebra coefficient vectors using the attached representation."""
        if self.rep is None:
            raise ValueError("no representation attached")
        return self.evaluate(self.rep(x), self.rep(y))

    def __str__(self):
        return self.source


def parse_invariant(dsl: str, rep: Representation | None = None) -> InvariantPolynomial:
    """Parse the trace-word syntax into an :class:`InvariantPolynomial`.

    >>> parse_invariant("2*tr(X X Y)*tr(X Y) - tr(Y Y)").terms
    ((2.0, (('X', 'X', 'Y'), ('X', 'Y'))), (-1.0, (('Y', 'Y'),)))
    """
    terms = _Parser(dsl).parse()
    return InvariantPolynomial(dsl, tuple(terms), rep)
