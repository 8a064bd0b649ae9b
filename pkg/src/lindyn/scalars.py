"""Exact arithmetic in the field Q(sqrt(d1), ..., sqrt(dm), i).

A :class:`Scalar` is a finite sum of terms ``q * sqrt(d) * i^e`` with rational
``q``, squarefree radicand ``d >= 1`` (``d == 1`` is the rational part) and
``e in {0, 1}``.  The representation is canonical, so equality is dictionary
equality and rational-independence questions reduce to exact linear algebra
over the coefficient vectors.  Numeric evaluation goes through mpmath at a
configurable precision; a fast ``complex`` path exists for bulk sampling.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import mpmath

from .errors import ParseError

Key = tuple[int, bool]  # (squarefree radicand, imaginary flag)

_RATIONAL_KEY: Key = (1, False)


@lru_cache(maxsize=None)
def square_free_split(n: int) -> tuple[int, int]:
    """Split ``n >= 1`` as ``g*g*d`` with ``d`` squarefree; returns ``(g, d)``."""
    if n < 1:
        raise ValueError("radicand must be >= 1")
    g, d = 1, 1
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            g *= p ** (e // 2)
            if e % 2:
                d *= p
        p += 1 if p == 2 else 2
    return g, d * n


@lru_cache(maxsize=None)
def smallest_prime_factor(n: int) -> int:
    p = 2
    while p * p <= n:
        if n % p == 0:
            return p
        p += 1 if p == 2 else 2
    return n


def _mul_key(k1: Key, k2: Key) -> tuple[Key, Fraction]:
    """Product of two basis elements as (key, rational cofactor)."""
    d1, i1 = k1
    d2, i2 = k2
    g = math.gcd(d1, d2)
    coeff = Fraction(g)
    if i1 and i2:
        coeff = -coeff
    return ((d1 // g) * (d2 // g), i1 != i2), coeff


class Scalar:
    """Immutable element of Q(sqrt(d1), ..., sqrt(dm), i) in canonical form."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: dict[Key, Fraction] | None = None):
        clean = {}
        if terms:
            for key, coeff in terms.items():
                if coeff:
                    clean[key] = coeff
        self._terms = dict(sorted(clean.items()))
        self._hash = None

    # -- constructors -------------------------------------------------

    @staticmethod
    def from_fraction(q) -> "Scalar":
        q = Fraction(q)
        return Scalar({_RATIONAL_KEY: q})

    @staticmethod
    def from_int(n: int) -> "Scalar":
        return Scalar.from_fraction(n)

    @staticmethod
    def zero() -> "Scalar":
        return Scalar()

    @staticmethod
    def one() -> "Scalar":
        return Scalar.from_int(1)

    @staticmethod
    def i() -> "Scalar":
        return Scalar({(1, True): Fraction(1)})

    @staticmethod
    def sqrt_int(n: int) -> "Scalar":
        """Exact square root of a nonnegative integer."""
        if n < 0:
            raise ValueError("sqrt of a negative integer is not supported")
        if n == 0:
            return Scalar.zero()
        g, d = square_free_split(n)
        return Scalar({(d, False): Fraction(g)})

    # -- structure ----------------------------------------------------

    @property
    def terms(self) -> dict[Key, Fraction]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_real(self) -> bool:
        return all(not imag for (_, imag) in self._terms)

    def is_rational(self) -> bool:
        return all(k == _RATIONAL_KEY for k in self._terms)

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self._terms.get(_RATIONAL_KEY, Fraction(0))

    def radicands(self) -> set[int]:
        return {d for (d, _) in self._terms if d > 1}

    def real_part(self) -> "Scalar":
        return Scalar({k: c for k, c in self._terms.items() if not k[1]})

    def imag_part(self) -> "Scalar":
        """Imaginary part as a real scalar (coefficient of i)."""
        return Scalar({(d, False): c for (d, imag), c in self._terms.items() if imag})

    def conjugate(self) -> "Scalar":
        return Scalar({k: (-c if k[1] else c) for k, c in self._terms.items()})

    def _flip_prime(self, p: int) -> "Scalar":
        """Galois conjugation sending sqrt(d) to -sqrt(d) whenever p divides d."""
        return Scalar({k: (-c if k[0] % p == 0 else c) for k, c in self._terms.items()})

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        terms = dict(self._terms)
        for k, c in other._terms.items():
            terms[k] = terms.get(k, Fraction(0)) + c
        return Scalar(terms)

    __radd__ = __add__

    def __neg__(self):
        return Scalar({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        terms: dict[Key, Fraction] = {}
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                key, extra = _mul_key(k1, k2)
                c = c1 * c2 * extra
                if c:
                    terms[key] = terms.get(key, Fraction(0)) + c
        return Scalar(terms)

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        """Multiplicative inverse by repeated conjugation over each extension."""
        if self.is_zero():
            raise ZeroDivisionError("scalar division by zero")
        num = Scalar.one()
        cur = self
        if not cur.is_real():
            conj = cur.conjugate()
            num *= conj
            cur *= conj
        while True:
            prime = None
            for d, _ in cur._terms:
                if d > 1:
                    prime = smallest_prime_factor(d)
                    break
            if prime is None:
                break
            flipped = cur._flip_prime(prime)
            num *= flipped
            cur *= flipped
        return num * Scalar.from_fraction(1 / cur.as_fraction())

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = Scalar.one()
        base = self
        while n:
            if n & 1:
                result *= base
            base *= base
            n >>= 1
        return result

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self._terms.items()))
        return self._hash

    # -- evaluation ---------------------------------------------------

    def evaluate(self, prec: int = 128) -> mpmath.mpc:
        """Numeric value accurate to within 2**(1-prec) of the true value."""
        guard = 16 + max(
            (abs(c.numerator).bit_length() for c in self._terms.values()), default=0
        )
        with mpmath.workprec(prec + guard):
            re = mpmath.mpf(0)
            im = mpmath.mpf(0)
            for (d, imag), c in self._terms.items():
                v = mpmath.mpf(c.numerator) / c.denominator
                if d > 1:
                    v *= _cached_sqrt(d, prec + guard)
                if imag:
                    im += v
                else:
                    re += v
            return mpmath.mpc(re, im)

    def to_complex(self) -> complex:
        """Fast double-precision value for bulk numeric work."""
        re = 0.0
        im = 0.0
        for (d, imag), c in self._terms.items():
            v = c.numerator / c.denominator
            if d > 1:
                v *= math.sqrt(d)
            if imag:
                im += v
            else:
                re += v
        return complex(re, im)

    # -- rendering ----------------------------------------------------

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for (d, imag), c in self._terms.items():
            factors = []
            if abs(c) != 1 or (d == 1 and not imag):
                factors.append(str(abs(c)))
            if d > 1:
                factors.append(f"sqrt({d})")
            if imag:
                factors.append("i")
            body = "*".join(factors)
            if not parts:
                parts.append(body if c > 0 else "-" + body)
            else:
                parts.append((" + " if c > 0 else " - ") + body)
        return "".join(parts)

    def __repr__(self):
        return f"Scalar({self})"


def _coerce(value) -> "Scalar":
    if isinstance(value, Scalar):
        return value
    if isinstance(value, (int, Fraction)):
        return Scalar.from_fraction(value)
    return NotImplemented


@lru_cache(maxsize=None)
def _cached_sqrt(d: int, prec: int):
    with mpmath.workprec(prec):
        return mpmath.sqrt(d)


# -- parsing ----------------------------------------------------------

_TOKEN_SPEC = ("(", ")", "+", "-", "*", "/")


def _tokenize(text: str) -> list:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in _TOKEN_SPEC:
            tokens.append(ch)
            i += 1
        elif ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(int(text[i:j]))
            i = j
        elif text.startswith("sqrt", i):
            tokens.append("sqrt")
            i += 4
        elif ch == "i":
            tokens.append("i")
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r} in {text!r}")
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise ParseError(f"expected {expected!r}, found {tok!r}")
        self.pos += 1
        return tok

    def parse_expr(self) -> Scalar:
        value = self.parse_term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.parse_term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def parse_term(self) -> Scalar:
        value = self.parse_unary()
        while self.peek() in ("*", "/"):
            op = self.take()
            rhs = self.parse_unary()
            if op == "*":
                value = value * rhs
            else:
                if rhs.is_zero():
                    raise ParseError("division by zero")
                value = value / rhs
        return value

    def parse_unary(self) -> Scalar:
        if self.peek() == "-":
            self.take()
            return -self.parse_unary()
        return self.parse_atom()

    def parse_atom(self) -> Scalar:
        tok = self.peek()
        if isinstance(tok, int):
            self.take()
            return Scalar.from_int(tok)
        if tok == "i":
            self.take()
            return Scalar.i()
        if tok == "sqrt":
            self.take()
            self.take("(")
            inner = self.parse_expr()
            self.take(")")
            if not inner.is_rational():
                raise ParseError("nested radicals are not supported")
            q = inner.as_fraction()
            if q.denominator != 1 or q < 0:
                raise ParseError("sqrt argument must be a nonnegative integer")
            return Scalar.sqrt_int(int(q))
        if tok == "(":
            self.take()
            inner = self.parse_expr()
            self.take(")")
            return inner
        raise ParseError(f"unexpected token {tok!r}")


def parse_scalar(text: str) -> Scalar:
    """Parse an expression built from integers, + - * /, sqrt(k) and i."""
    parser = _Parser(_tokenize(text))
    value = parser.parse_expr()
    if parser.peek() is not None:
        raise ParseError(f"trailing input at token {parser.peek()!r}")
    return value


# -- rational linear algebra over the coefficient vectors -------------


def rational_nullspace(rows: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    """Basis of {x : M x = 0} for a matrix of Fractions, by exact RREF."""
    if not rows:
        return []
    m = [list(map(Fraction, row)) for row in rows]
    nrows, ncols = len(m), len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, nrows) if m[i][c] != 0), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        pv = m[r][c]
        m[r] = [x / pv for x in m[r]]
        for i in range(nrows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for row_idx, pc in enumerate(pivots):
            vec[pc] = -m[row_idx][fc]
        basis.append(vec)
    return basis


def integerize(vec: Sequence[Fraction]) -> list[int]:
    """Scale a rational vector to coprime integers, first nonzero positive."""
    denom = math.lcm(*(f.denominator for f in vec)) if vec else 1
    ints = [int(f * denom) for f in vec]
    g = math.gcd(*ints) if any(ints) else 1
    ints = [v // g for v in ints]
    first = next((v for v in ints if v != 0), 0)
    if first < 0:
        ints = [-v for v in ints]
    return ints


def is_rationally_independent(
    values: Iterable[Scalar],
) -> tuple[bool, list[int] | None]:
    """Decide whether real scalars admit a nonzero rational relation.

    Returns ``(True, None)`` when independent, else ``(False, relation)`` with
    a nonzero integer tuple ``q`` such that ``sum(q[i] * values[i]) == 0``.
    """
    values = list(values)
    for v in values:
        if not v.is_real():
            raise ValueError(f"rational independence requires real values, got {v}")
    keys = sorted({k for v in values for k in v._terms})
    if not keys:
        keys = [_RATIONAL_KEY]
    # rows indexed by basis key, columns by value: kernel vectors are relations
    rows = [[v._terms.get(k, Fraction(0)) for v in values] for k in keys]
    kernel = rational_nullspace(rows)
    if not kernel:
        return True, None
    return False, integerize(kernel[0])


# -- numeric comparison plumbing ---------------------------------------


class NumericScalar:
    """Floating snapshot of a (possibly exact) value at a given precision."""

    __slots__ = ("re", "im", "prec", "source")

    def __init__(self, re, im, prec: int = 53, source: Scalar | None = None):
        self.re = re
        self.im = im
        self.prec = prec
        self.source = source

    @staticmethod
    def from_exact(value: Scalar, prec: int = 128) -> "NumericScalar":
        z = value.evaluate(prec)
        return NumericScalar(z.real, z.imag, prec, source=value)

    @staticmethod
    def from_complex(z: complex, prec: int = 53) -> "NumericScalar":
        return NumericScalar(z.real, z.imag, prec)

    def as_complex(self) -> complex:
        return complex(float(self.re), float(self.im))

    def close_to(self, other: "NumericScalar", tol: float) -> bool:
        dz = abs(self.as_complex() - other.as_complex())
        return dz <= tol

    def __repr__(self):
        return f"NumericScalar({self.as_complex()}, prec={self.prec})"


def stable_compare(a: Scalar, b: Scalar, tol: float = 1e-24, prec: int = 128) -> int:
    """Three-way compare of real scalars via evaluation, re-checked at 2*prec.

    Returns -1, 0 or +1; raises if the verdict flips when precision doubles.
    """
    if not (a.is_real() and b.is_real()):
        raise ValueError("stable_compare requires real scalars")
    diff = a - b
    if diff.is_zero():
        return 0

    def decide(p):
        v = diff.evaluate(p).real
        if abs(v) <= tol:
            return 0
        return 1 if v > 0 else -1

    first, second = decide(prec), decide(2 * prec)
    if first != second:
        raise ArithmeticError(
            f"comparison of {a} and {b} unstable under precision doubling"
        )
    return first
