"""Exact univariate polynomials over the rationals or a prime field F_p.

Coefficients are stored lowest degree first.  Over F_p a scalar is an int in
``range(p)``; over Q it is a ``fractions.Fraction``.  The zero polynomial is
the empty tuple and has degree ``-inf`` (reported as ``None`` by ``degree``).
"""

from __future__ import annotations

import functools
import itertools
import math
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

INF = math.inf


class FieldMismatch(ValueError):
    pass


class UnsupportedFactorization(ValueError):
    pass


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    i = 3
    while i * i <= n:
        if n % i == 0:
            return False
        i += 2
    return True


@dataclass(frozen=True)
class FieldSpec:
    """K = Q (p == 0) or K = F_p (p prime)."""

    p: int = 0

    def __post_init__(self):
        if self.p != 0 and not _is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")

    @classmethod
    def rationals(cls) -> "FieldSpec":
        return cls(0)

    @classmethod
    def prime(cls, p: int) -> "FieldSpec":
        return cls(p)

    @property
    def kind(self) -> str:
        return "Q" if self.p == 0 else "Fp"

    @property
    def is_prime_field(self) -> bool:
        return self.p != 0

    def __str__(self) -> str:
        return "Q" if self.p == 0 else f"F_{self.p}"

    def elem(self, v):
        if self.p:
            if isinstance(v, Fraction):
                if v.denominator % self.p == 0:
                    raise ZeroDivisionError(f"{v} has no image in F_{self.p}")
                return v.numerator * pow(v.denominator, -1, self.p) % self.p
            return int(v) % self.p
        return Fraction(v)

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero scalar")
        if self.p:
            return pow(int(a), -1, self.p)
        return 1 / Fraction(a)

    def scalars(self) -> range:
        if not self.p:
            raise ValueError("Q is infinite")
        return range(self.p)

    def to_json(self) -> dict:
        return {"kind": "Q"} if self.p == 0 else {"kind": "Fp", "p": self.p}

    @classmethod
    def from_json(cls, d: dict) -> "FieldSpec":
        kind = d.get("kind")
        if kind in ("Q", "Rationals", "rationals"):
            return cls(0)
        if kind in ("Fp", "PrimeField", "prime"):
            return cls(int(d["p"]))
        raise ValueError(f"unknown field kind {kind!r}")


def _strip(coeffs: list) -> tuple:
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


class Poly:
    __slots__ = ("coeffs", "field", "_hash")

    def __init__(self, coeffs: Iterable, field: FieldSpec):
        self.coeffs = _strip([field.elem(c) for c in coeffs])
        self.field = field
        self._hash = None

    @classmethod
    def _raw(cls, coeffs: tuple, field: FieldSpec) -> "Poly":
        obj = cls.__new__(cls)
        obj.coeffs = coeffs
        obj.field = field
        obj._hash = None
        return obj

    @classmethod
    def zero(cls, field: FieldSpec) -> "Poly":
        return cls._raw((), field)

    @classmethod
    def const(cls, c, field: FieldSpec) -> "Poly":
        return cls([c], field)

    @classmethod
    def one(cls, field: FieldSpec) -> "Poly":
        return cls([1], field)

    @classmethod
    def x(cls, field: FieldSpec) -> "Poly":
        return cls([0, 1], field)

    @classmethod
    def monomial(cls, n: int, field: FieldSpec, c=1) -> "Poly":
        return cls([0] * n + [c], field)

    # -- basic queries -------------------------------------------------

    def degree(self) -> int | None:
        return len(self.coeffs) - 1 if self.coeffs else None

    @property
    def deg(self) -> int:
        """Degree, with -1 standing in for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_one(self) -> bool:
        return self.coeffs == (1,)

    def is_constant(self) -> bool:
        return len(self.coeffs) <= 1

    def lc(self):
        return self.coeffs[-1] if self.coeffs else self.field.elem(0)

    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1] == 1

    def monic(self) -> "Poly":
        if not self.coeffs:
            return self
        return self.scale(self.field.inv(self.coeffs[-1]))

    def __getitem__(self, i: int):
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return self.field.elem(0)

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.field == other.field and self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.coeffs == Poly([other], self.field).coeffs
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.field.p, self.coeffs))
        return self._hash

    def sort_key(self) -> tuple:
        """Order by degree, then coefficients from the top down."""
        return (len(self.coeffs), tuple(reversed([_coeff_key(c) for c in self.coeffs])))

    def __lt__(self, other: "Poly") -> bool:
        return self.sort_key() < other.sort_key()

    # -- arithmetic ----------------------------------------------------

    def _check(self, other: "Poly") -> None:
        if self.field != other.field:
            raise FieldMismatch(f"field mismatch: {self.field} vs {other.field}")

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return Poly([other], self.field)
        raise TypeError(f"cannot combine Poly with {type(other).__name__}")

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        p = self.field.p
        for i, c in enumerate(b):
            out[i] = (out[i] + c) % p if p else out[i] + c
        return Poly._raw(_strip(out), self.field)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        p = self.field.p
        return Poly._raw(tuple((-c) % p if p else -c for c in self.coeffs), self.field)

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Poly":
        other = self._coerce(other)
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return Poly.zero(self.field)
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x == 0:
                continue
            for j, y in enumerate(b):
                out[i + j] += x * y
        p = self.field.p
        if p:
            out = [c % p for c in out]
        return Poly._raw(_strip(out), self.field)

    __rmul__ = __mul__

    def scale(self, c) -> "Poly":
        c = self.field.elem(c)
        if c == 0:
            return Poly.zero(self.field)
        p = self.field.p
        return Poly._raw(tuple((x * c) % p if p else x * c for x in self.coeffs), self.field)

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative exponent")
        result = Poly.one(self.field)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __divmod__(self, other) -> tuple["Poly", "Poly"]:
        return euclid_div(self, self._coerce(other))

    def __floordiv__(self, other) -> "Poly":
        return euclid_div(self, self._coerce(other))[0]

    def __mod__(self, other) -> "Poly":
        return euclid_div(self, self._coerce(other))[1]

    def divides(self, other: "Poly") -> bool:
        if self.is_zero():
            return other.is_zero()
        return euclid_div(other, self)[1].is_zero()

    def derivative(self) -> "Poly":
        return Poly([i * c for i, c in enumerate(self.coeffs)][1:], self.field)

    def __call__(self, x):
        acc = self.field.elem(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        if self.field.p:
            acc %= self.field.p
        return acc

    def compose(self, g: "Poly") -> "Poly":
        acc = Poly.zero(self.field)
        for c in reversed(self.coeffs):
            acc = acc * g + Poly([c], self.field)
        return acc

    def powmod(self, n: int, m: "Poly") -> "Poly":
        result = Poly.one(self.field) % m
        base = self % m
        while n:
            if n & 1:
                result = (result * base) % m
            base = (base * base) % m
            n >>= 1
        return result

    # -- text ----------------------------------------------------------

    def __str__(self) -> str:
        return poly_print(self)

    def __repr__(self) -> str:
        return f"Poly({poly_print(self)!r}, {self.field})"

    @classmethod
    def parse(cls, text: str, field: FieldSpec) -> "Poly":
        return poly_parse(text, field)


def _coeff_key(c):
    return c if isinstance(c, int) else (c.numerator, c.denominator)


# -- module-level operations -------------------------------------------


def poly_arith(lhs: Poly, rhs: Poly, op: str) -> Poly:
    lhs._check(rhs)
    if op == "add":
        return lhs + rhs
    if op == "sub":
        return lhs - rhs
    if op == "mul":
        return lhs * rhs
    raise ValueError(f"unknown op {op!r}")


def euclid_div(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    """Return (q, r) with num = q*den + r and deg r < deg den."""
    num._check(den)
    if den.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    field = num.field
    p = field.p
    r = list(num.coeffs)
    dd = len(den.coeffs) - 1
    if len(r) - 1 < dd:
        return Poly.zero(field), num
    inv_lc = field.inv(den.coeffs[-1])
    q = [0] * (len(r) - dd)
    dc = den.coeffs
    for k in range(len(r) - 1, dd - 1, -1):
        c = r[k]
        if c == 0:
            continue
        c = (c * inv_lc) % p if p else c * inv_lc
        q[k - dd] = c
        for i, d in enumerate(dc):
            r[k - dd + i] -= c * d
            if p:
                r[k - dd + i] %= p
    return Poly._raw(_strip(q), field), Poly._raw(_strip(r[:dd]), field)


def poly_gcd_bezout(a: Poly, b: Poly) -> tuple[Poly, Poly, Poly]:
    """Monic g with g = u*a + v*b."""
    a._check(b)
    field = a.field
    if a.is_zero() and b.is_zero():
        raise ValueError("gcd of two zero polynomials")
    r0, r1 = a, b
    s0, s1 = Poly.one(field), Poly.zero(field)
    t0, t1 = Poly.zero(field), Poly.one(field)
    while not r1.is_zero():
        q, r = euclid_div(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    c = field.inv(r0.lc())
    return r0.scale(c), s0.scale(c), t0.scale(c)


def poly_gcd(a: Poly, b: Poly) -> Poly:
    if a.is_zero() and b.is_zero():
        return a
    return poly_gcd_bezout(a, b)[0]


def poly_lcm(a: Poly, b: Poly) -> Poly:
    if a.is_zero() or b.is_zero():
        return Poly.zero(a.field)
    return ((a * b) // poly_gcd(a, b)).monic()


def poly_valuation(a: Poly, f: Poly, check: bool = True) -> float | int:
    """Largest e with f^e | a; infinity for a = 0."""
    if check and not is_irreducible(f):
        raise ValueError(f"{f} is not irreducible")
    if a.is_zero():
        return INF
    e = 0
    while True:
        q, r = euclid_div(a, f)
        if not r.is_zero():
            return e
        a = q
        e += 1


# -- factorization -----------------------------------------------------


@dataclass(frozen=True)
class Factorization:
    unit: object
    factors: dict  # monic irreducible Poly -> multiplicity

    def expand(self, field: FieldSpec) -> Poly:
        out = Poly.const(self.unit, field)
        for f, e in self.factors.items():
            out = out * f**e
        return out

    def items(self) -> list[tuple[Poly, int]]:
        return sorted(self.factors.items(), key=lambda kv: kv[0].sort_key())

    def __str__(self) -> str:
        parts = []
        if self.unit != 1 or not self.factors:
            parts.append(str(self.unit))
        for f, e in self.items():
            parts.append(f"({f})" + (f"^{e}" if e > 1 else ""))
        return "*".join(parts)


RATIONAL_FACTOR_BOUND = 4


def poly_factor(a: Poly, q_degree_bound: int = RATIONAL_FACTOR_BOUND, seed: int = 0) -> Factorization:
    """Factor a nonzero polynomial into monic irreducibles."""
    if a.is_zero():
        raise ValueError("cannot factor the zero polynomial")
    fac = _factor_cached(a.monic(), q_degree_bound, seed)
    return Factorization(a.lc(), dict(fac.factors))


@functools.lru_cache(maxsize=65536)
def _factor_cached(a: Poly, q_degree_bound: int, seed: int) -> Factorization:
    unit = a.lc()
    m = a.monic()
    if m.deg == 0:
        return Factorization(unit, {})
    if a.field.p:
        factors = _factor_fp(m, random.Random(seed))
    else:
        if m.deg > q_degree_bound:
            raise UnsupportedFactorization(
                f"factorization over Q is limited to degree <= {q_degree_bound}; got degree {m.deg}"
            )
        factors = _factor_q(m)
    out: dict = {}
    for f in factors:
        out[f] = out.get(f, 0) + 1
    return Factorization(unit, out)


def irreducible_factors(a: Poly) -> list[Poly]:
    return [f for f, _ in poly_factor(a).items()]


def is_irreducible(f: Poly) -> bool:
    if f.deg < 1:
        return False
    fac = poly_factor(f)
    return len(fac.factors) == 1 and next(iter(fac.factors.values())) == 1


def _pth_root(f: Poly) -> Poly:
    p = f.field.p
    return Poly([f.coeffs[i] for i in range(0, len(f.coeffs), p)], f.field)


def _squarefree_fp(f: Poly) -> list[tuple[Poly, int]]:
    """Square-free decomposition of a monic f over F_p."""
    out = []
    p = f.field.p
    i = 1
    w = f
    c = poly_gcd(f, f.derivative())
    w = f // c
    while not w.is_one():
        y = poly_gcd(w, c)
        z = w // y
        if not z.is_one():
            out.append((z.monic(), i))
        i += 1
        w = y
        c = c // y
    if not c.is_one():
        for g, e in _squarefree_fp(_pth_root(c.monic())):
            out.append((g, e * p))
    return out


def _ddf(f: Poly) -> list[tuple[Poly, int]]:
    """Distinct-degree factorization of a square-free monic f."""
    out = []
    field = f.field
    p = field.p
    x = Poly.x(field)
    h = x % f
    d = 0
    rest = f
    while rest.deg >= 2 * (d + 1):
        d += 1
        h = h.powmod(p, rest)
        g = poly_gcd(rest, h - x)
        if not g.is_one():
            out.append((g, d))
            rest = rest // g
            h = h % rest
    if rest.deg > 0:
        out.append((rest, rest.deg))
    return out


def _edf(f: Poly, d: int, rng: random.Random) -> list[Poly]:
    """Split a product of distinct degree-d irreducibles (Cantor-Zassenhaus)."""
    if f.deg == d:
        return [f]
    field = f.field
    p = field.p
    n = f.deg
    while True:
        r = Poly([rng.randrange(p) for _ in range(n)], field)
        if r.deg < 1:
            continue
        if p == 2:
            # trace map r + r^2 + ... + r^(2^(d-1))
            t = r % f
            acc = t
            for _ in range(d - 1):
                t = (t * t) % f
                acc = acc + t
            g = poly_gcd(f, acc)
        else:
            e = (p**d - 1) // 2
            g = poly_gcd(f, r.powmod(e, f) - Poly.one(field))
        if 0 < g.deg < n:
            return _edf(g.monic(), d, rng) + _edf((f // g).monic(), d, rng)


def _factor_fp(f: Poly, rng: random.Random) -> list[Poly]:
    out = []
    for g, e in _squarefree_fp(f):
        for h, d in _ddf(g):
            for irr in _edf(h.monic(), d, rng):
                out.extend([irr.monic()] * e)
    return out


def _divisors(n: int) -> list[int]:
    n = abs(n)
    small = [d for d in range(1, math.isqrt(n) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


def _primitive_int(f: Poly) -> list[int]:
    den = 1
    for c in f.coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [int(c * den) for c in f.coeffs]
    g = 0
    for c in ints:
        g = math.gcd(g, c)
    return [c // g for c in ints]


def _rational_root(f: Poly) -> Fraction | None:
    ints = _primitive_int(f)
    if ints[0] == 0:
        return Fraction(0)
    for q in _divisors(ints[-1]):
        for p_ in _divisors(ints[0]):
            for s in (1, -1):
                r = Fraction(s * p_, q)
                if f(r) == 0:
                    return r
    return None


def _lagrange(points: list[tuple[int, int]], field: FieldSpec) -> Poly:
    out = Poly.zero(field)
    for i, (xi, yi) in enumerate(points):
        term = Poly.const(yi, field)
        for j, (xj, _) in enumerate(points):
            if i != j:
                term = term * Poly([Fraction(-xj, xi - xj), Fraction(1, xi - xj)], field)
        out = out + term
    return out


def _quadratic_factor(f: Poly) -> Poly | None:
    """Kronecker search for a monic quadratic factor of a quartic with no rational root."""
    field = f.field
    ints = _primitive_int(f)
    fi = Poly(ints, field)
    xs = [0, 1, -1]
    vals = [int(fi(x)) for x in xs]
    choices = [[s * d for d in _divisors(v) for s in (1, -1)] for v in vals]
    for combo in itertools.product(*choices):
        g = _lagrange(list(zip(xs, combo)), field)
        if g.deg != 2:
            continue
        if any(c.denominator != 1 for c in g.coeffs):
            continue
        if g.divides(fi):
            return g.monic()
    return None


def _factor_q(f: Poly) -> list[Poly]:
    if f.deg == 1:
        return [f]
    r = _rational_root(f)
    if r is not None:
        lin = Poly([-r, 1], f.field)
        return [lin] + _factor_q((f // lin).monic())
    if f.deg <= 3:
        return [f]
    g = _quadratic_factor(f)
    if g is None:
        return [f]
    return _factor_q(g) + _factor_q((f // g).monic())


def monic_polys(field: FieldSpec, degree: int) -> Iterator[Poly]:
    for tail in itertools.product(range(field.p), repeat=degree):
        yield Poly(list(tail) + [1], field)


def irreducibles(field: FieldSpec, degree: int) -> list[Poly]:
    """All monic irreducibles of the given degree over F_p, in sort order."""
    return sorted((f for f in monic_polys(field, degree) if is_irreducible(f)), key=Poly.sort_key)


# -- text syntax -------------------------------------------------------


def _scalar_str(c) -> str:
    if isinstance(c, Fraction):
        return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    return str(c)


def poly_print(f: Poly) -> str:
    if f.is_zero():
        return "0"
    parts = []
    for i in range(len(f.coeffs) - 1, -1, -1):
        c = f.coeffs[i]
        if c == 0:
            continue
        neg = isinstance(c, Fraction) and c < 0
        mag = -c if neg else c
        if i == 0:
            body = _scalar_str(mag)
        else:
            mono = "X" if i == 1 else f"X^{i}"
            body = mono if mag == 1 else f"{_scalar_str(mag)}*{mono}"
        if not parts:
            parts.append(("-" if neg else "") + body)
        else:
            parts.append(("-" if neg else "+") + body)
    return "".join(parts)


_TERM = re.compile(r"\s*([+-])?\s*(?:(\d+)(?:\s*/\s*(\d+))?\s*(\*)?\s*)?(X(?:\s*\^\s*(\d+))?)?\s*")


class PolySyntaxError(ValueError):
    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} at offset {offset}")
        self.offset = offset


def poly_parse(text: str, field: FieldSpec) -> Poly:
    f, end = poly_parse_prefix(text, 0, field)
    if end != len(text.rstrip()) and text[end:].strip():
        raise PolySyntaxError("unexpected character", end)
    return f


def poly_parse_prefix(text: str, pos: int, field: FieldSpec) -> tuple[Poly, int]:
    """Parse the longest polynomial starting at pos; return (poly, end offset)."""
    coeffs: dict[int, object] = {}
    first = True
    n = len(text)
    while True:
        m = _TERM.match(text, pos)
        sign, num, den, star, xpart, exp = m.groups()
        if num is None and xpart is None:
            if first:
                raise PolySyntaxError("expected a polynomial term", _skip_ws(text, pos))
            break
        if not first and sign is None:
            break
        if star and xpart is None:
            raise PolySyntaxError("expected X after '*'", m.end())
        c = Fraction(int(num), int(den)) if den is not None else Fraction(int(num) if num else 1)
        if den is not None and int(den) == 0:
            raise PolySyntaxError("zero denominator", pos)
        if sign == "-":
            c = -c
        k = 0 if xpart is None else (int(exp) if exp is not None else 1)
        coeffs[k] = coeffs.get(k, 0) + c
        first = False
        pos = m.end()
        if pos >= n:
            break
    top = max(coeffs) if coeffs else -1
    return Poly([coeffs.get(i, 0) for i in range(top + 1)], field), pos


def _skip_ws(text: str, pos: int) -> int:
    while pos < len(text) and text[pos].isspace():
        pos += 1
    return pos
