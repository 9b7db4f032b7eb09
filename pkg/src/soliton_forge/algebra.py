"""Exact polynomial kernel for the expansion method.

Two layers:

* :class:`ParamPoly` -- multivariate polynomials with :class:`fractions.Fraction`
  coefficients in the fixed, ordered symbol list
  ``A, B, C, n, m, alpha, eta, a0, a1, ...``.
* :class:`PhiPoly` -- polynomials in the expansion variable
  ``phi = G'/(G' + G + A)`` whose coefficients are ParamPolys.

Differentiation with respect to the wave variable never touches ``G``: the
auxiliary equation ``G'' + B G' + C G + A C = 0`` closes into the Riccati
relation returned by :func:`phi_derivative_rule`, so ``d/dxi`` acts on a
PhiPoly through the chain rule alone.

The text format (``str`` / :func:`parse`) is canonical: monomials sorted by
descending total degree then descending exponents in symbol order, factors
joined by ``*`` and powers written with ``^``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np

BASE_SYMBOLS = ("A", "B", "C", "n", "m", "alpha", "eta")
_A_INDEX = re.compile(r"a(\d+)$")

Monomial = tuple  # tuple[tuple[int, int], ...], sorted by symbol index, exps > 0


def symbol_index(name: str) -> int:
    if name in BASE_SYMBOLS:
        return BASE_SYMBOLS.index(name)
    match = _A_INDEX.match(name)
    if match is None:
        raise KeyError(f"unknown symbol {name!r}")
    return len(BASE_SYMBOLS) + int(match.group(1))


def symbol_name(index: int) -> str:
    if index < len(BASE_SYMBOLS):
        return BASE_SYMBOLS[index]
    return f"a{index - len(BASE_SYMBOLS)}"


def _mono_mul(u: Monomial, v: Monomial) -> Monomial:
    if not u:
        return v
    if not v:
        return u
    exps = dict(u)
    for idx, e in v:
        exps[idx] = exps.get(idx, 0) + e
    return tuple(sorted(exps.items()))


def _mono_key(mono: Monomial, width: int):
    dense = [0] * width
    for idx, e in mono:
        dense[idx] = e
    return (-sum(dense), tuple(-e for e in dense))


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"exact coefficient required, got {type(value).__name__}")


class ParamPoly:
    """Immutable sparse polynomial over the rationals.

    Zero terms are never stored, so two polynomials are equal exactly when
    their term maps are equal.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        clean = {}
        for mono, coeff in (terms or {}).items():
            c = _as_fraction(coeff)
            if c != 0:
                clean[tuple(mono)] = c
        self._terms = clean
        self._hash = None

    # -- constructors -------------------------------------------------
    @classmethod
    def const(cls, value) -> "ParamPoly":
        return cls({(): value})

    @classmethod
    def symbol(cls, name: str, power: int = 1) -> "ParamPoly":
        if power < 0:
            raise ValueError("negative powers are not polynomial")
        if power == 0:
            return cls.const(1)
        return cls({((symbol_index(name), power),): 1})

    @classmethod
    def coerce(cls, value) -> "ParamPoly":
        if isinstance(value, ParamPoly):
            return value
        return cls.const(value)

    # -- inspection ---------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def symbols(self) -> set[str]:
        return {symbol_name(idx) for mono in self._terms for idx, _ in mono}

    def degree_in(self, name: str) -> int:
        idx = symbol_index(name)
        return max((dict(mono).get(idx, 0) for mono in self._terms), default=0)

    # -- ring operations ----------------------------------------------
    def __add__(self, other):
        other = ParamPoly.coerce(other)
        out = dict(self._terms)
        for mono, c in other._terms.items():
            out[mono] = out.get(mono, 0) + c
        return ParamPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return ParamPoly({mono: -c for mono, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-ParamPoly.coerce(other))

    def __rsub__(self, other):
        return ParamPoly.coerce(other) - self

    def __mul__(self, other):
        other = ParamPoly.coerce(other)
        out: dict = {}
        for u, cu in self._terms.items():
            for v, cv in other._terms.items():
                w = _mono_mul(u, v)
                out[w] = out.get(w, 0) + cu * cv
        return ParamPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomial")
        result = ParamPoly.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = ParamPoly.const(other)
        if not isinstance(other, ParamPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # -- evaluation ---------------------------------------------------
    def substitute(self, values: Mapping[str, object]) -> "ParamPoly":
        """Exact partial substitution of rational values."""
        bound = {symbol_index(k): _as_fraction(v) for k, v in values.items()}
        out: dict = {}
        for mono, c in self._terms.items():
            keep = []
            for idx, e in mono:
                if idx in bound:
                    c = c * bound[idx] ** e
                else:
                    keep.append((idx, e))
            key = tuple(keep)
            out[key] = out.get(key, 0) + c
        return ParamPoly(out)

    def evaluate(self, values: Mapping[str, float]):
        """Numeric value; every symbol present must be bound."""
        total = 0.0
        for mono, c in self._terms.items():
            term = float(c)
            for idx, e in mono:
                term = term * values[symbol_name(idx)] ** e
            total = total + term
        return total

    # -- text ---------------------------------------------------------
    def sorted_terms(self) -> list:
        width = 1 + max((idx for mono in self._terms for idx, _ in mono), default=0)
        return sorted(self._terms.items(), key=lambda item: _mono_key(item[0], width))

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for i, (mono, c) in enumerate(self.sorted_terms()):
            factors = [
                symbol_name(idx) if e == 1 else f"{symbol_name(idx)}^{e}" for idx, e in mono
            ]
            mag = abs(c)
            if mag != 1 or not factors:
                factors.insert(0, str(mag))
            body = "*".join(factors)
            if i == 0:
                parts.append(f"-{body}" if c < 0 else body)
            else:
                parts.append(f"- {body}" if c < 0 else f"+ {body}")
        return " ".join(parts)

    def __repr__(self):
        return f"ParamPoly({str(self)!r})"


# ---------------------------------------------------------------------------
# parser for the canonical text format (accepts any factor order, parentheses,
# unary signs and division by nonzero rational constants)

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9_]*)|(\*\*|[-+*/^()]))")


def _tokenize(text: str) -> list:
    tokens, pos = [], 0
    text = text.strip()
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None or match.end() == pos:
            raise ValueError(f"cannot parse polynomial near {text[pos:pos + 20]!r}")
        num, name, op = match.groups()
        if num is not None:
            tokens.append(("num", int(num)))
        elif name is not None:
            tokens.append(("sym", name))
        else:
            tokens.append(("op", "^" if op == "**" else op))
        pos = match.end()
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, op):
        tok = self.take()
        if tok != ("op", op):
            raise ValueError(f"expected {op!r}, got {tok[1]!r}")

    def expr(self) -> ParamPoly:
        result = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            _, op = self.take()
            rhs = self.term()
            result = result + rhs if op == "+" else result - rhs
        return result

    def term(self) -> ParamPoly:
        result = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            _, op = self.take()
            rhs = self.unary()
            if op == "*":
                result = result * rhs
            else:
                if rhs.symbols() or rhs.is_zero():
                    raise ValueError("division only by nonzero constants")
                result = result * ParamPoly.const(1 / rhs.terms[()])
        return result

    def unary(self) -> ParamPoly:
        if self.peek() == ("op", "-"):
            self.take()
            return -self.unary()
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> ParamPoly:
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, value = self.take()
            if kind != "num":
                raise ValueError("exponent must be a nonnegative integer")
            base = base ** value
        return base

    def atom(self) -> ParamPoly:
        kind, value = self.take()
        if kind == "num":
            return ParamPoly.const(value)
        if kind == "sym":
            return ParamPoly.symbol(value)
        if (kind, value) == ("op", "("):
            inner = self.expr()
            self.expect(")")
            return inner
        raise ValueError(f"unexpected token {value!r}")


def parse(text: str) -> ParamPoly:
    """Parse a ParamPoly; ``str(parse(s))`` is the canonical rendering of ``s``."""
    parser = _Parser(_tokenize(text))
    result = parser.expr()
    if parser.pos != len(parser.tokens):
        raise ValueError(f"trailing input in {text!r}")
    return result


# ---------------------------------------------------------------------------


def _trim(coeffs: Iterable[ParamPoly]) -> tuple:
    coeffs = [ParamPoly.coerce(c) for c in coeffs]
    while coeffs and coeffs[-1].is_zero():
        coeffs.pop()
    return tuple(coeffs)


class PhiPoly:
    """Immutable element of ParamPoly[phi]; ``coeffs[i]`` multiplies ``phi**i``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence = ()):
        object.__setattr__(self, "coeffs", _trim(coeffs))

    def __setattr__(self, name, value):
        raise AttributeError("PhiPoly is immutable")

    @classmethod
    def phi(cls) -> "PhiPoly":
        return cls([0, 1])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, i: int) -> ParamPoly:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else ParamPoly()

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other):
        other = _as_phipoly(other)
        size = max(len(self.coeffs), len(other.coeffs))
        return PhiPoly([self.coeff(i) + other.coeff(i) for i in range(size)])

    __radd__ = __add__

    def __neg__(self):
        return PhiPoly([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-_as_phipoly(other))

    def __rsub__(self, other):
        return _as_phipoly(other) - self

    def __mul__(self, other):
        other = _as_phipoly(other)
        if self.is_zero() or other.is_zero():
            return PhiPoly()
        out = [ParamPoly() for _ in range(len(self.coeffs) + len(other.coeffs) - 1)]
        for i, p in enumerate(self.coeffs):
            if p.is_zero():
                continue
            for j, q in enumerate(other.coeffs):
                out[i + j] = out[i + j] + p * q
        return PhiPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        result = PhiPoly([1])
        for _ in range(k):
            result = result * self
        return result

    def __eq__(self, other):
        if not isinstance(other, PhiPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def formal_derivative(self) -> "PhiPoly":
        return PhiPoly([c * i for i, c in enumerate(self.coeffs)][1:])

    def substitute(self, values: Mapping[str, object]) -> "PhiPoly":
        return PhiPoly([c.substitute(values) for c in self.coeffs])

    def numeric_coeffs(self, values: Mapping[str, float]) -> np.ndarray:
        return np.array([c.evaluate(values) for c in self.coeffs], dtype=float)

    def evaluate(self, phi, values: Mapping[str, float]):
        """Horner evaluation at numeric ``phi`` (scalar or array)."""
        result = np.zeros_like(np.asarray(phi, dtype=float))
        for c in reversed(self.numeric_coeffs(values)):
            result = result * phi + c
        return result if np.ndim(result) else float(result)

    def symbols(self) -> set[str]:
        return set().union(*(c.symbols() for c in self.coeffs)) if self.coeffs else set()

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for i, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            label = "1" if i == 0 else ("phi" if i == 1 else f"phi^{i}")
            parts.append(f"({c})*{label}" if i else f"({c})")
        return " + ".join(parts)

    def __repr__(self):
        return f"PhiPoly({str(self)!r})"


def _as_phipoly(value) -> PhiPoly:
    if isinstance(value, PhiPoly):
        return value
    return PhiPoly([ParamPoly.coerce(value)])


def poly_add(p: PhiPoly, q) -> PhiPoly:
    return p + q


def poly_mul(p: PhiPoly, q) -> PhiPoly:
    return p * q


def poly_scale(p: PhiPoly, q: ParamPoly) -> PhiPoly:
    return PhiPoly([c * q for c in p.coeffs])


@lru_cache(maxsize=None)
def phi_derivative_rule() -> PhiPoly:
    """Return D with dphi/dxi = D(phi).

    Writing H = G + A turns the auxiliary equation into H'' + B H' + C H = 0.
    With psi = H'/H we have psi' = -(psi^2 + B psi + C) and phi = psi/(1 + psi),
    hence phi' = (1 - phi)^2 psi' with psi = phi/(1 - phi):

        D(phi) = (B - C - 1) phi^2 + (2C - B) phi - C

    ``A`` drops out, as it must.
    """
    B, C = ParamPoly.symbol("B"), ParamPoly.symbol("C")
    return PhiPoly([-C, 2 * C - B, B - C - 1])


def differentiate(p: PhiPoly, k: int = 1) -> PhiPoly:
    """k-th derivative with respect to xi, via dphi/dxi = D(phi)."""
    if k < 0:
        raise ValueError("derivative order must be nonnegative")
    rule = phi_derivative_rule()
    for _ in range(k):
        p = p.formal_derivative() * rule
    return p
