"""Formulas over theta (the endomorphism language) and over R_C-modules.

A term is a finite map from variable names to coefficients.  A coefficient is
either a Poly (meaning sum c_i * T^i applied to the variable) or an RcElem
(an R_C action applied to the variable).  Terms are always kept collected:
one coefficient per variable, zero coefficients dropped.

Grammar::

    formula := conj ('|' conj)*
    conj    := unary ('&' unary)*
    unary   := '!' unary | ('E'|'A') var '.' formula | '(' formula ')' | atom
    atom    := term ('=' | '!=') term
    term    := ['-'] item (('+'|'-') item)*
    item    := [scalar '*'] (var | 'T' ['^' n] '(' var ')') | rc '(' var ')' | '0'
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

from .kernelconfig import KernelConfig
from .polyring import FieldSpec, Poly
from .rcring import RcElem, RcError, RcSyntaxError, _RcParser, rc_rho, rc_zero

RESERVED = {"poly", "inv", "projim", "projker"}


class FormulaSyntaxError(ValueError):
    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} at offset {offset}")
        self.offset = offset


# -- terms -------------------------------------------------------------


def _is_rc(c) -> bool:
    return isinstance(c, RcElem)


def _coeff_zero(c) -> bool:
    return c.is_zero()


def _coeff_add(a, b):
    if _is_rc(a) and not _is_rc(b):
        b = rc_rho(a.cfg, b)
    elif _is_rc(b) and not _is_rc(a):
        a = rc_rho(b.cfg, a)
    return a + b


class Term:
    """Collected linear combination: var -> Poly or RcElem."""

    __slots__ = ("items", "_key")

    def __init__(self, items: dict | None = None):
        clean = {}
        for v, c in (items or {}).items():
            if not _coeff_zero(c):
                clean[v] = c
        self.items = clean
        self._key = None

    @classmethod
    def var(cls, name: str, field: FieldSpec) -> "Term":
        return cls({name: Poly.one(field)})

    @classmethod
    def zero(cls) -> "Term":
        return cls({})

    def is_zero(self) -> bool:
        return not self.items

    def vars(self) -> set:
        return set(self.items)

    def is_rc(self) -> bool:
        return any(_is_rc(c) for c in self.items.values())

    def __add__(self, other: "Term") -> "Term":
        out = dict(self.items)
        for v, c in other.items.items():
            out[v] = _coeff_add(out[v], c) if v in out else c
        return Term(out)

    def __neg__(self) -> "Term":
        return Term({v: -c for v, c in self.items.items()})

    def __sub__(self, other: "Term") -> "Term":
        return self + (-other)

    def scale(self, r) -> "Term":
        """Multiply every coefficient by r (a Poly or RcElem)."""
        out = {}
        for v, c in self.items.items():
            if _is_rc(r) or _is_rc(c):
                cfg = r.cfg if _is_rc(r) else c.cfg
                rr = r if _is_rc(r) else rc_rho(cfg, r)
                cc = c if _is_rc(c) else rc_rho(cfg, c)
                out[v] = rr * cc
            else:
                out[v] = r * c
        return Term(out)

    def coeff(self, v: str):
        return self.items.get(v)

    def without(self, v: str) -> "Term":
        return Term({k: c for k, c in self.items.items() if k != v})

    def rename(self, mapping: dict) -> "Term":
        out = Term()
        for v, c in self.items.items():
            out = out + Term({mapping.get(v, v): c})
        return out

    def key(self) -> tuple:
        if self._key is None:
            parts = []
            for v in sorted(self.items):
                c = self.items[v]
                parts.append((v, "rc", c.key()) if _is_rc(c) else (v, "p", c.coeffs))
            self._key = tuple(parts)
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, Term) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __str__(self) -> str:
        return term_print(self)

    def __repr__(self) -> str:
        return f"Term({term_print(self)!r})"


def _scalar_text(c) -> tuple[bool, str]:
    """(negative?, magnitude text) for a scalar coefficient."""
    if isinstance(c, Fraction):
        neg = c < 0
        m = -c if neg else c
        s = str(m.numerator) if m.denominator == 1 else f"{m.numerator}/{m.denominator}"
        return neg, s
    return False, str(c)


def _theta_items(v: str, f: Poly) -> list[tuple[bool, str]]:
    out = []
    for i, c in enumerate(f.coeffs):
        if c == 0:
            continue
        neg, mag = _scalar_text(c)
        base = v if i == 0 else (f"T({v})" if i == 1 else f"T^{i}({v})")
        out.append((neg, base if mag == "1" else f"{mag}*{base}"))
    return out


def term_print(t: Term) -> str:
    pieces: list[tuple[bool, str]] = []
    for v in sorted(t.items):
        c = t.items[v]
        if _is_rc(c):
            s = str(c)
            if "+" in s or "-" in s:
                s = f"({s})"
            pieces.append((False, f"{s}({v})"))
        else:
            pieces.extend(_theta_items(v, c))
    if not pieces:
        return "0"
    out = ("-" if pieces[0][0] else "") + pieces[0][1]
    for neg, s in pieces[1:]:
        out += (" - " if neg else " + ") + s
    return out


# -- formulas ----------------------------------------------------------


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return fml_print(self)

    def __and__(self, other: "Formula") -> "Formula":
        return And((self, other))

    def __or__(self, other: "Formula") -> "Formula":
        return Or((self, other))

    def __invert__(self) -> "Formula":
        return Not(self)


@dataclass(frozen=True, eq=True)
class Atom(Formula):
    lhs: Term
    rhs: Term
    neg: bool = False

    def __str__(self) -> str:
        return fml_print(self)

    def diff(self) -> Term:
        return self.lhs - self.rhs


@dataclass(frozen=True, eq=True)
class Not(Formula):
    body: Formula

    def __str__(self) -> str:
        return fml_print(self)


@dataclass(frozen=True, eq=True)
class And(Formula):
    items: tuple

    def __str__(self) -> str:
        return fml_print(self)


@dataclass(frozen=True, eq=True)
class Or(Formula):
    items: tuple

    def __str__(self) -> str:
        return fml_print(self)


@dataclass(frozen=True, eq=True)
class Exists(Formula):
    var: str
    body: Formula

    def __str__(self) -> str:
        return fml_print(self)


@dataclass(frozen=True, eq=True)
class Forall(Formula):
    var: str
    body: Formula

    def __str__(self) -> str:
        return fml_print(self)


TRUE = Atom(Term(), Term(), False)
FALSE = Atom(Term(), Term(), True)


def eq(lhs: Term, rhs: Term | None = None) -> Atom:
    return Atom(lhs, rhs if rhs is not None else Term(), False)


def neq(lhs: Term, rhs: Term | None = None) -> Atom:
    return Atom(lhs, rhs if rhs is not None else Term(), True)


def conj(items: Iterable[Formula]) -> Formula:
    items = tuple(items)
    if not items:
        return TRUE
    if len(items) == 1:
        return items[0]
    return And(items)


def disj(items: Iterable[Formula]) -> Formula:
    items = tuple(items)
    if not items:
        return FALSE
    if len(items) == 1:
        return items[0]
    return Or(items)


# -- printing ----------------------------------------------------------


def _wrap(s: str) -> str:
    return f"({s})"


def fml_print(phi: Formula) -> str:
    if isinstance(phi, Atom):
        return f"{term_print(phi.lhs)} {'!=' if phi.neg else '='} {term_print(phi.rhs)}"
    if isinstance(phi, Not):
        return "!" + _wrap(fml_print(phi.body))
    if isinstance(phi, And):
        parts = []
        for c in phi.items:
            s = fml_print(c)
            parts.append(_wrap(s) if isinstance(c, (Or, And, Exists, Forall)) else s)
        return " & ".join(parts)
    if isinstance(phi, Or):
        parts = []
        for c in phi.items:
            s = fml_print(c)
            parts.append(_wrap(s) if isinstance(c, (Or, Exists, Forall)) else s)
        return " | ".join(parts)
    if isinstance(phi, Exists):
        return f"E {phi.var}. {fml_print(phi.body)}"
    if isinstance(phi, Forall):
        return f"A {phi.var}. {fml_print(phi.body)}"
    raise TypeError(f"not a formula: {phi!r}")


# -- parsing -----------------------------------------------------------

_VAR = re.compile(r"[a-z][a-z0-9]*")
_INT = re.compile(r"\d+")


class _Parser:
    def __init__(self, text: str, field: FieldSpec, cfg: KernelConfig | None):
        self.text = text
        self.field = field
        self.cfg = cfg
        self.pos = 0

    def error(self, msg: str, pos: int | None = None):
        raise FormulaSyntaxError(msg, self.pos if pos is None else pos)

    def ws(self) -> None:
        t = self.text
        while self.pos < len(t) and t[self.pos].isspace():
            self.pos += 1

    def peek(self, s: str) -> bool:
        self.ws()
        return self.text.startswith(s, self.pos)

    def take(self, s: str) -> bool:
        if self.peek(s):
            self.pos += len(s)
            return True
        return False

    def expect(self, s: str) -> None:
        if not self.take(s):
            self.error(f"expected {s!r}")

    def var(self) -> str:
        self.ws()
        m = _VAR.match(self.text, self.pos)
        if not m or m.group() in RESERVED:
            self.error("expected a variable")
        self.pos = m.end()
        return m.group()

    def formula(self) -> Formula:
        items = [self.conj()]
        while self.take("|"):
            items.append(self.conj())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conj(self) -> Formula:
        items = [self.unary()]
        while self.take("&"):
            items.append(self.unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def _quant_ahead(self) -> str | None:
        self.ws()
        m = re.compile(r"([EA])\s+([a-z][a-z0-9]*)\s*\.").match(self.text, self.pos)
        return m.group(1) if m else None

    def unary(self) -> Formula:
        if self.peek("!") and not self.peek("!="):
            self.pos += 1
            return Not(self.unary())
        q = self._quant_ahead()
        if q:
            self.pos += 1
            v = self.var()
            self.expect(".")
            body = self.formula()
            return Exists(v, body) if q == "E" else Forall(v, body)
        if self.peek("("):
            save = self.pos
            try:
                return self.atom()
            except FormulaSyntaxError:
                self.pos = save
            self.pos += 1
            inner = self.formula()
            self.expect(")")
            return inner
        return self.atom()

    def atom(self) -> Formula:
        lhs = self.term()
        self.ws()
        if self.take("!="):
            neg = True
        elif self.take("="):
            neg = False
        else:
            self.error("expected '=' or '!='")
        rhs = self.term()
        return Atom(lhs, rhs, neg)

    def term(self) -> Term:
        self.ws()
        sign = -1 if self.take("-") else 1
        out = self.item(sign)
        while True:
            if self.peek("!="):
                break
            if self.take("+"):
                out = out + self.item(1)
            elif self.take("-"):
                out = out + self.item(-1)
            else:
                break
        return out

    def scalar(self):
        self.ws()
        m = _INT.match(self.text, self.pos)
        if not m:
            return None
        self.pos = m.end()
        val = Fraction(int(m.group()))
        save = self.pos
        self.ws()
        if self.take("/"):
            self.ws()
            m2 = _INT.match(self.text, self.pos)
            if not m2:
                self.error("expected a denominator")
            if int(m2.group()) == 0:
                self.error("zero denominator")
            self.pos = m2.end()
            val = val / int(m2.group())
        else:
            self.pos = save
        return val

    def item(self, sign: int) -> Term:
        self.ws()
        start = self.pos
        c = self.scalar()
        if c is not None:
            if not self.take("*"):
                if c == 0:
                    return Term()
                self.error("a nonzero scalar must multiply a vector term", start)
        else:
            c = Fraction(1)
        c = c * sign
        self.ws()
        if self.cfg is not None and (self.peek("(") or any(self.peek(k) for k in RESERVED)):
            save = self.pos
            try:
                rp = _RcParser(self.text, self.cfg, self.pos)
                r = rp.term()
                self.pos = rp.pos
                self.expect("(")
                v = self.var()
                self.expect(")")
                return Term({v: r.scale(c)})
            except (RcSyntaxError, RcError, FormulaSyntaxError) as e:
                if self.text.startswith("(", save):
                    self.pos = save
                    self.error("expected a term", save)
                raise FormulaSyntaxError(str(e), getattr(e, "offset", save)) from None
        if self.peek("T") and not _VAR.match(self.text, self.pos):
            self.pos += 1
            k = 1
            if self.take("^"):
                self.ws()
                m = _INT.match(self.text, self.pos)
                if not m:
                    self.error("expected an exponent")
                k = int(m.group())
                self.pos = m.end()
            self.expect("(")
            v = self.var()
            self.expect(")")
            return Term({v: Poly.monomial(k, self.field, c)})
        v = self.var()
        return Term({v: Poly.const(c, self.field)})


def fml_parse(text: str, field: FieldSpec, cfg: KernelConfig | None = None) -> Formula:
    """Parse formula text; R_C atoms need cfg."""
    if cfg is not None:
        field = cfg.field
    p = _Parser(text, field, cfg)
    phi = p.formula()
    p.ws()
    if p.pos != len(text):
        p.error("unexpected trailing text")
    return phi


def fml_parse_print(src: str, field: FieldSpec, cfg: KernelConfig | None = None) -> tuple[Formula, str]:
    phi = fml_parse(src, field, cfg)
    return phi, fml_print(phi)


# -- traversal helpers -------------------------------------------------


def atoms(phi: Formula) -> Iterator[Atom]:
    if isinstance(phi, Atom):
        yield phi
    elif isinstance(phi, Not):
        yield from atoms(phi.body)
    elif isinstance(phi, (And, Or)):
        for c in phi.items:
            yield from atoms(c)
    else:
        yield from atoms(phi.body)


def free_vars(phi: Formula) -> set:
    if isinstance(phi, Atom):
        return phi.lhs.vars() | phi.rhs.vars()
    if isinstance(phi, Not):
        return free_vars(phi.body)
    if isinstance(phi, (And, Or)):
        out = set()
        for c in phi.items:
            out |= free_vars(c)
        return out
    return free_vars(phi.body) - {phi.var}


def all_vars(phi: Formula) -> set:
    if isinstance(phi, Atom):
        return phi.lhs.vars() | phi.rhs.vars()
    if isinstance(phi, Not):
        return all_vars(phi.body)
    if isinstance(phi, (And, Or)):
        out = set()
        for c in phi.items:
            out |= all_vars(c)
        return out
    return all_vars(phi.body) | {phi.var}


def quantifier_depth(phi: Formula) -> int:
    if isinstance(phi, Atom):
        return 0
    if isinstance(phi, Not):
        return quantifier_depth(phi.body)
    if isinstance(phi, (And, Or)):
        return max((quantifier_depth(c) for c in phi.items), default=0)
    return 1 + quantifier_depth(phi.body)


def is_quantifier_free(phi: Formula) -> bool:
    return quantifier_depth(phi) == 0


def coefficients(phi: Formula) -> Iterator:
    for a in atoms(phi):
        d = a.diff()
        yield from d.items.values()
        # the two sides separately also carry polynomials worth knowing about
        for t in (a.lhs, a.rhs):
            yield from t.items.values()


def max_exponent(phi: Formula) -> int:
    m = 0
    for c in coefficients(phi):
        if _is_rc(c):
            m = max(m, c.num.deg, c.den.deg, *(r.deg for r in c.corr.values()), 0)
        else:
            m = max(m, c.deg)
    return m


def is_rc_formula(phi: Formula) -> bool:
    return any(_is_rc(c) for c in coefficients(phi))


def substitute(phi: Formula, mapping: dict) -> Formula:
    """Rename free variables (mapping var -> var)."""
    if isinstance(phi, Atom):
        return Atom(phi.lhs.rename(mapping), phi.rhs.rename(mapping), phi.neg)
    if isinstance(phi, Not):
        return Not(substitute(phi.body, mapping))
    if isinstance(phi, And):
        return And(tuple(substitute(c, mapping) for c in phi.items))
    if isinstance(phi, Or):
        return Or(tuple(substitute(c, mapping) for c in phi.items))
    inner = {k: v for k, v in mapping.items() if k != phi.var}
    return type(phi)(phi.var, substitute(phi.body, inner))


def to_rc(phi: Formula, cfg: KernelConfig) -> Formula:
    """Lift every Poly coefficient to the corresponding R_C element."""

    def lift(t: Term) -> Term:
        return Term({v: c if _is_rc(c) else rc_rho(cfg, c) for v, c in t.items.items()})

    if isinstance(phi, Atom):
        return Atom(lift(phi.lhs), lift(phi.rhs), phi.neg)
    if isinstance(phi, Not):
        return Not(to_rc(phi.body, cfg))
    if isinstance(phi, And):
        return And(tuple(to_rc(c, cfg) for c in phi.items))
    if isinstance(phi, Or):
        return Or(tuple(to_rc(c, cfg) for c in phi.items))
    return type(phi)(phi.var, to_rc(phi.body, cfg))


def nnf(phi: Formula, negate: bool = False) -> Formula:
    """Negation normal form: negations pushed into atoms."""
    if isinstance(phi, Atom):
        return Atom(phi.lhs, phi.rhs, phi.neg != negate)
    if isinstance(phi, Not):
        return nnf(phi.body, not negate)
    if isinstance(phi, And):
        parts = tuple(nnf(c, negate) for c in phi.items)
        return Or(parts) if negate else And(parts)
    if isinstance(phi, Or):
        parts = tuple(nnf(c, negate) for c in phi.items)
        return And(parts) if negate else Or(parts)
    if isinstance(phi, Exists):
        body = nnf(phi.body, negate)
        return Forall(phi.var, body) if negate else Exists(phi.var, body)
    body = nnf(phi.body, negate)
    return Exists(phi.var, body) if negate else Forall(phi.var, body)


def normalize_literal(a: Atom) -> Atom:
    """Move everything to the left: t = 0 or t != 0."""
    return Atom(a.lhs - a.rhs, Term(), a.neg)


def dnf(phi: Formula) -> list[list[Atom]]:
    """Disjunctive normal form of a quantifier-free formula as lists of literals t (!)= 0.

    Trivially true literals are dropped and conjunctions containing a trivially
    false literal are removed.
    """
    phi = nnf(phi)
    out = []
    for clause in _dnf(phi):
        lits = []
        dead = False
        seen = set()
        for a in clause:
            a = normalize_literal(a)
            if a.lhs.is_zero():
                if a.neg:
                    dead = True
                    break
                continue
            if a in seen:
                continue
            seen.add(a)
            lits.append(a)
        if dead:
            continue
        if any(Atom(x.lhs, x.rhs, not x.neg) in seen for x in lits):
            continue
        out.append(lits)
    return _dedupe_clauses(out)


def _dedupe_clauses(clauses: list) -> list:
    seen = set()
    out = []
    for c in clauses:
        k = frozenset(c)
        if k in seen:
            continue
        seen.add(k)
        out.append(c)
    # a clause with no literals is true; it absorbs everything
    if any(not c for c in out):
        return [[]]
    return out


def _dnf(phi: Formula) -> list[list[Atom]]:
    if isinstance(phi, Atom):
        return [[phi]]
    if isinstance(phi, Or):
        out = []
        for c in phi.items:
            out.extend(_dnf(c))
        return out
    if isinstance(phi, And):
        acc = [[]]
        for c in phi.items:
            sub = _dnf(c)
            acc = [a + b for a in acc for b in sub]
        return acc
    raise ValueError("dnf needs a quantifier-free formula in negation normal form")


def from_dnf(clauses: list[list[Atom]]) -> Formula:
    return disj(conj(c) for c in clauses)


# -- placeholders ------------------------------------------------------


def placeholder_name(v: str, i: int) -> str:
    return f"{v}^{i}"


def split_placeholder(name: str) -> tuple[str, int]:
    if "^" not in name:
        raise ValueError(f"{name} is not a placeholder variable")
    v, i = name.split("^", 1)
    return v, int(i)


def placeholder_expand(psi: Formula) -> Formula:
    """Replace each placeholder x^i by T^i(x)."""

    def ex(t: Term) -> Term:
        out = Term()
        for name, c in t.items.items():
            v, i = split_placeholder(name)
            if _is_rc(c):
                raise ValueError("placeholder formulas carry scalar coefficients only")
            if c.deg > 0:
                raise ValueError("placeholder formulas carry scalar coefficients only")
            out = out + Term({v: Poly.monomial(i, c.field, c.lc())})
        return out

    return _map_terms(psi, ex, expand=True)


def placeholder_abstract(phi: Formula) -> Formula:
    """Replace each T^i(x) by the placeholder x^i (scalar coefficients)."""

    def ab(t: Term) -> Term:
        items = {}
        for v, c in t.items.items():
            if _is_rc(c):
                raise ValueError("placeholder abstraction applies to the endomorphism language only")
            for i, a in enumerate(c.coeffs):
                if a != 0:
                    items[placeholder_name(v, i)] = Poly.const(a, c.field)
        return Term(items)

    return _map_terms(phi, ab, expand=False)


def placeholder_bindings(psi: Formula) -> dict:
    """Map each placeholder name in psi to (variable, power)."""
    out = {}
    for a in atoms(psi):
        for t in (a.lhs, a.rhs):
            for name in t.items:
                out[name] = split_placeholder(name)
    return out


def _map_terms(phi: Formula, fn, expand: bool) -> Formula:
    if isinstance(phi, Atom):
        return Atom(fn(phi.lhs), fn(phi.rhs), phi.neg)
    if isinstance(phi, Not):
        return Not(_map_terms(phi.body, fn, expand))
    if isinstance(phi, And):
        return And(tuple(_map_terms(c, fn, expand) for c in phi.items))
    if isinstance(phi, Or):
        return Or(tuple(_map_terms(c, fn, expand) for c in phi.items))
    return type(phi)(phi.var, _map_terms(phi.body, fn, expand))


# -- linear systems ----------------------------------------------------


@dataclass
class LinearSystem:
    """R_C-linear literals: sum_v coeffs[v](v) (=|!=) rhs, rhs a term in the parameters."""

    equations: list  # (dict var -> RcElem, Term)
    disequations: list  # (dict var -> RcElem, Term)
    residual: Formula  # conjunction of variable-free or parameter-only literals

    def __str__(self) -> str:
        lines = []
        for coeffs, rhs in self.equations:
            lines.append(f"{term_print(Term(coeffs))} = {term_print(rhs)}")
        for coeffs, rhs in self.disequations:
            lines.append(f"{term_print(Term(coeffs))} != {term_print(rhs)}")
        lines.append(f"residual: {fml_print(self.residual)}")
        return "\n".join(lines)


def _conjuncts(phi: Formula) -> list:
    if isinstance(phi, And):
        out = []
        for c in phi.items:
            out.extend(_conjuncts(c))
        return out
    if isinstance(phi, Atom):
        return [phi]
    if isinstance(phi, Not) and isinstance(phi.body, Atom):
        b = phi.body
        return [Atom(b.lhs, b.rhs, not b.neg)]
    raise ValueError(f"not a conjunction of literals: {fml_print(phi)}")


def fml_to_linear_system(phi: Formula, cfg: KernelConfig, unknowns: Iterable[str] | None = None) -> LinearSystem:
    lits = _conjuncts(phi)
    if unknowns is None:
        unk = set()
        for a in lits:
            unk |= a.lhs.vars()
    else:
        unk = set(unknowns)
    eqs, diseqs, residual = [], [], []
    for a in lits:
        d = to_rc_term(a.lhs - a.rhs, cfg)
        coeffs = {v: c for v, c in d.items.items() if v in unk}
        rhs = -Term({v: c for v, c in d.items.items() if v not in unk})
        if not coeffs:
            if rhs.is_zero():
                if a.neg:
                    residual.append(FALSE)
                continue
            residual.append(Atom(Term(), rhs, a.neg))
            continue
        (diseqs if a.neg else eqs).append((coeffs, rhs))
    return LinearSystem(eqs, diseqs, conj(residual))


def to_rc_term(t: Term, cfg: KernelConfig) -> Term:
    return Term({v: c if _is_rc(c) else rc_rho(cfg, c) for v, c in t.items.items()})
