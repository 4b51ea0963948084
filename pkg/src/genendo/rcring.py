"""Normal-form arithmetic in the ring R_C of definable endomorphisms.

Transcendental C: an element is a global fraction num/den (den built from
irreducibles with C < inf) together with finitely many local corrections,
one residue mod f^C(f) for some f with 0 < C(f) < inf.  A correction is kept
only when it differs from the residue of the global part, or when the global
part has f in its denominator and so has no residue there.

Algebraic C: an element is a residue mod MiPo(C); no corrections.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import fpmat
from .kernelconfig import KernelConfig, kc_mipo
from .polyring import (
    INF,
    FieldSpec,
    Poly,
    PolySyntaxError,
    euclid_div,
    poly_factor,
    poly_gcd,
    poly_gcd_bezout,
    poly_parse_prefix,
    poly_valuation,
)


class RcError(ValueError):
    pass


def _reduce_frac(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    if den.is_zero():
        raise ZeroDivisionError("zero denominator")
    if num.is_zero():
        return num, Poly.one(num.field)
    g = poly_gcd(num, den)
    if not g.is_one():
        num, den = num // g, den // g
    c = den.lc()
    if c != 1:
        inv = num.field.inv(c)
        num, den = num.scale(inv), den.scale(inv)
    return num, den


def _inv_mod(a: Poly, m: Poly) -> Poly | None:
    g, u, _ = poly_gcd_bezout(a, m)
    if not g.is_one():
        return None
    return u % m


def _residue(num: Poly, den: Poly, m: Poly) -> Poly | None:
    """num/den mod m, or None if den is not invertible mod m."""
    if den.is_one():
        return num % m
    d = _inv_mod(den % m, m)
    if d is None:
        return None
    return (num * d) % m


class RcElem:
    __slots__ = ("cfg", "num", "den", "corr", "_key")

    def __init__(self, cfg: KernelConfig, num: Poly, den: Poly | None = None, corr: dict | None = None):
        self.cfg = cfg
        field = cfg.field
        if den is None:
            den = Poly.one(field)
        self._key = None
        if cfg.is_algebraic:
            mipo = _mipo(cfg)
            r = _residue(num, den, mipo)
            if r is None:
                raise RcError(f"denominator {den} is not invertible modulo MiPo")
            if corr:
                raise RcError("algebraic configurations take no local corrections")
            self.num, self.den, self.corr = r, Poly.one(field), {}
            return
        num, den = _reduce_frac(num, den)
        for g in poly_factor(den).factors:
            if cfg(g) == INF:
                raise RcError(f"denominator factor {g} has C = inf")
        out = {}
        for f, r in (corr or {}).items():
            c = cfg(f)
            if not (0 < c < INF):
                raise RcError(f"correction at {f} needs 0 < C(f) < inf")
            m = _modulus(cfg, f)
            r = r % m
            g = _residue(num, den, m)
            if g is None or g != r:
                out[f] = r
        for g in poly_factor(den).factors:
            if 0 < cfg(g) < INF and g not in out:
                raise RcError(f"missing mandatory correction at {g}")
        self.num, self.den, self.corr = num, den, out

    # -- structure -----------------------------------------------------

    @property
    def field(self) -> FieldSpec:
        return self.cfg.field

    def local(self, f: Poly) -> Poly:
        """Residue of this element in K[X]/(f^C(f)) for 0 < C(f) < inf."""
        c = self.cfg(f)
        if not (0 < c < INF):
            raise RcError(f"no local component at {f}: C(f) = {c}")
        m = _modulus(self.cfg, f)
        if self.cfg.is_algebraic:
            return self.num % m
        if f in self.corr:
            return self.corr[f]
        r = _residue(self.num, self.den, m)
        assert r is not None
        return r

    def key(self) -> tuple:
        if self._key is None:
            corr = tuple(sorted((f.sort_key(), r.coeffs) for f, r in self.corr.items()))
            self._key = (self.num.coeffs, self.den.coeffs, corr)
        return self._key

    def __eq__(self, other) -> bool:
        if not isinstance(other, RcElem):
            return NotImplemented
        _same_cfg(self, other)
        return self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def is_zero(self) -> bool:
        return self.num.is_zero() and not self.corr

    def is_one(self) -> bool:
        return self.num.is_one() and self.den.is_one() and not self.corr

    # -- arithmetic ----------------------------------------------------

    def _combine(self, other: "RcElem", op) -> "RcElem":
        _same_cfg(self, other)
        cfg = self.cfg
        if cfg.is_algebraic:
            return RcElem(cfg, op(self.num, other.num) % _mipo(cfg))
        if op is _add:
            num = self.num * other.den + other.num * self.den
            den = self.den * other.den
        else:
            num = self.num * other.num
            den = self.den * other.den
        corr = {}
        for f in set(self.corr) | set(other.corr):
            corr[f] = op(self.local(f), other.local(f)) % _modulus(cfg, f)
        return RcElem(cfg, num, den, corr)

    def __add__(self, other: "RcElem") -> "RcElem":
        return self._combine(other, _add)

    def __mul__(self, other: "RcElem") -> "RcElem":
        return self._combine(other, _mul)

    def __neg__(self) -> "RcElem":
        return self.scale(-1)

    def __sub__(self, other: "RcElem") -> "RcElem":
        return self + (-other)

    def scale(self, c) -> "RcElem":
        cfg = self.cfg
        return RcElem(cfg, self.num.scale(c), self.den, {f: r.scale(c) for f, r in self.corr.items()})

    def __pow__(self, n: int) -> "RcElem":
        out = rc_one(self.cfg)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __str__(self) -> str:
        return rc_print(self)

    def __repr__(self) -> str:
        return f"RcElem({rc_print(self)!r})"


def _add(a: Poly, b: Poly) -> Poly:
    return a + b


def _mul(a: Poly, b: Poly) -> Poly:
    return a * b


_MIPO_CACHE: dict = {}


def _mipo(cfg: KernelConfig) -> Poly:
    k = cfg.key()
    if k not in _MIPO_CACHE:
        _MIPO_CACHE[k] = kc_mipo(cfg)
    return _MIPO_CACHE[k]


def _modulus(cfg: KernelConfig, f: Poly) -> Poly:
    return f ** cfg(f)


def _same_cfg(a: RcElem, b: RcElem) -> None:
    if a.cfg is not b.cfg and a.cfg != b.cfg:
        raise RcError("configuration mismatch")


# -- generators --------------------------------------------------------


@dataclass(frozen=True)
class Rho:
    poly: Poly


@dataclass(frozen=True)
class ProjIm:
    polys: tuple


@dataclass(frozen=True)
class ProjKer:
    polys: tuple


@dataclass(frozen=True)
class Inv:
    poly: Poly


def rc_zero(cfg: KernelConfig) -> RcElem:
    return RcElem(cfg, Poly.zero(cfg.field))


def rc_one(cfg: KernelConfig) -> RcElem:
    return RcElem(cfg, Poly.one(cfg.field))


def rc_rho(cfg: KernelConfig, rho: Poly) -> RcElem:
    return RcElem(cfg, rho)


def _crt_idempotent(cfg: KernelConfig, zero_at: set) -> Poly:
    """Residue mod MiPo that is 0 at the factors in zero_at and 1 elsewhere."""
    mipo = _mipo(cfg)
    out = Poly.zero(cfg.field)
    for f in cfg.entries:
        if f in zero_at:
            continue
        m = _modulus(cfg, f)
        rest = mipo // m
        inv = _inv_mod(rest % m, m)
        out = out + rest * inv
    return out % mipo


def _check_proj(cfg: KernelConfig, polys) -> list[Poly]:
    out = []
    for f in polys:
        f = f.monic()
        c = cfg(f)
        if not (0 < c < INF):
            raise RcError(f"projection needs 0 < C(f) < inf; C({f}) = {c}")
        if len(poly_factor(f).factors) != 1 or poly_factor(f).factors.get(f) != 1:
            raise RcError(f"{f} is not irreducible")
        out.append(f)
    return out


def rc_projim(cfg: KernelConfig, polys) -> RcElem:
    fs = _check_proj(cfg, polys)
    if cfg.is_algebraic:
        return RcElem(cfg, _crt_idempotent(cfg, set(fs)))
    return RcElem(cfg, Poly.one(cfg.field), None, {f: Poly.zero(cfg.field) for f in fs})


def rc_projker(cfg: KernelConfig, polys) -> RcElem:
    return rc_one(cfg) - rc_projim(cfg, polys)


def rc_inv(cfg: KernelConfig, eta: Poly) -> RcElem:
    if eta.is_zero():
        raise RcError("inverse of the zero polynomial")
    field = cfg.field
    q = eta.lc()
    monic = eta.monic()
    facs = poly_factor(monic).factors
    for g in facs:
        if cfg(g) == INF:
            raise RcError(f"cannot invert {eta}: factor {g} has C = inf")
    qi = field.inv(q)
    if cfg.is_algebraic:
        mipo = _mipo(cfg)
        out = Poly.zero(field)
        for f in cfg.entries:
            m = _modulus(cfg, f)
            if f in facs:
                continue
            rest = mipo // m
            e = rest * _inv_mod(rest % m, m)
            out = out + e * _inv_mod(monic % m, m)
        return RcElem(cfg, (out % mipo).scale(qi))
    corr = {f: Poly.zero(field) for f in facs if 0 < cfg(f) < INF}
    return RcElem(cfg, Poly.const(qi, field), monic, corr)


def rc_from_generator(cfg: KernelConfig, gen) -> RcElem:
    if isinstance(gen, Rho):
        return rc_rho(cfg, gen.poly)
    if isinstance(gen, ProjIm):
        return rc_projim(cfg, gen.polys)
    if isinstance(gen, ProjKer):
        return rc_projker(cfg, gen.polys)
    if isinstance(gen, Inv):
        return rc_inv(cfg, gen.poly)
    raise RcError(f"unknown generator {gen!r}")


def rc_arith(a: RcElem, b: RcElem, op: str) -> RcElem:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "sub":
        return a - b
    raise ValueError(f"unknown op {op!r}")


def rc_eq(a: RcElem, b: RcElem) -> bool:
    return a == b


# -- units and fields --------------------------------------------------


def rc_is_unit(a: RcElem) -> bool:
    return rc_inverse(a) is not None


def rc_inverse(a: RcElem) -> RcElem | None:
    cfg = a.cfg
    field = cfg.field
    if cfg.is_algebraic:
        mipo = _mipo(cfg)
        inv = _inv_mod(a.num, mipo) if not a.num.is_zero() else None
        return None if inv is None else RcElem(cfg, inv)
    if a.num.is_zero():
        return None
    for g in poly_factor(a.num).factors:
        if cfg(g) == INF:
            return None
    corr = {}
    for f in cfg.positive_finite():
        m = _modulus(cfg, f)
        loc = a.local(f)
        inv = _inv_mod(loc, m) if not loc.is_zero() else None
        if inv is None:
            return None
        corr[f] = inv
    return RcElem(cfg, a.den, a.num, corr)


def rc_is_field(cfg: KernelConfig) -> bool:
    """R_C is a field iff C = C_0 or C is algebraic with irreducible MiPo."""
    if cfg.is_algebraic:
        return len(cfg.entries) == 1 and next(iter(cfg.entries.values())) == 1
    return cfg.default == "zero" and not cfg.entries


# -- kernel descriptors ------------------------------------------------


@dataclass
class KernelDescriptor:
    local_exponents: dict  # f -> s_f in 0..C(f)
    infinite_type: list  # irreducibles g with C(g) = inf dividing the numerator
    kills_generic: bool  # global part is zero, so the whole generic summand is in the kernel
    injective_on_ec: bool
    kernel_infinite_on_ec: bool

    def to_json(self) -> dict:
        return {
            "local_exponents": {str(f): s for f, s in sorted(self.local_exponents.items(), key=lambda kv: kv[0].sort_key())},
            "infinite_type": [str(g) for g in self.infinite_type],
            "kills_generic": self.kills_generic,
            "injective_on_ec": self.injective_on_ec,
            "kernel_infinite_on_ec": self.kernel_infinite_on_ec,
        }


def local_components(cfg: KernelConfig) -> list[Poly]:
    """Irreducibles carrying a local block: 0 < C(f) < inf."""
    return cfg.positive_finite()


def rc_kernel_descriptor(a: RcElem) -> KernelDescriptor:
    cfg = a.cfg
    s = {}
    for f in local_components(cfg):
        loc = a.local(f)
        v = poly_valuation(loc, f, check=False)
        s[f] = cfg(f) if v == INF else min(v, cfg(f))
    inf_type = []
    kills = False
    if cfg.is_transcendental:
        if a.num.is_zero():
            kills = True
        else:
            inf_type = sorted((g for g in poly_factor(a.num).factors if cfg(g) == INF), key=Poly.sort_key)
    injective = all(v == 0 for v in s.values()) and not inf_type and not kills
    return KernelDescriptor(s, inf_type, kills, injective, not injective)


def rc_annihilates_kernel(c: RcElem, a: RcElem) -> bool:
    """True iff c vanishes on Ker(a) in existentially closed models."""
    cfg = a.cfg
    _same_cfg(c, a)
    for f in local_components(cfg):
        m = _modulus(cfg, f)
        va = poly_valuation(a.local(f), f, check=False)
        sa = cfg(f) if va == INF else min(va, cfg(f))
        # Ker(a) on the f-block is f^(C - s_a) R; c kills it iff f^s_a | c
        vc = poly_valuation(c.local(f), f, check=False)
        sc = cfg(f) if vc == INF else min(vc, cfg(f))
        if sc < sa:
            return False
    if cfg.is_algebraic:
        return True
    if a.num.is_zero():
        return c.num.is_zero()
    if c.num.is_zero():
        return True
    for g, e in poly_factor(a.num).factors.items():
        if cfg(g) != INF:
            continue
        if poly_valuation(c.num, g, check=False) < e:
            return False
    return True


# -- text syntax -------------------------------------------------------


def _sorted_corr(a: RcElem) -> list:
    return sorted(a.corr.items(), key=lambda kv: kv[0].sort_key())


def rc_print(a: RcElem) -> str:
    if a.cfg.is_algebraic:
        return f"poly({a.num})"
    corr = _sorted_corr(a)
    terms = []
    if not a.num.is_zero():
        head = []
        if not a.num.is_one() or (a.den.is_one() and not corr):
            head.append(f"poly({a.num})")
        if not a.den.is_one():
            head.append(f"inv({a.den})")
        if corr:
            head.append("projim{" + ",".join(str(f) for f, _ in corr) + "}")
        terms.append("*".join(head))
    for f, r in corr:
        if r.is_zero():
            continue
        if r.is_one():
            terms.append("projker{" + str(f) + "}")
        else:
            terms.append(f"poly({r})*projker{{{f}}}")
    if not terms:
        return "poly(0)"
    return " + ".join(terms)


class RcSyntaxError(ValueError):
    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} at offset {offset}")
        self.offset = offset


class _RcParser:
    def __init__(self, text: str, cfg: KernelConfig, pos: int = 0):
        self.text = text
        self.cfg = cfg
        self.pos = pos

    def ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self, s: str) -> bool:
        self.ws()
        return self.text.startswith(s, self.pos)

    def expect(self, s: str) -> None:
        if not self.peek(s):
            raise RcSyntaxError(f"expected {s!r}", self.pos)
        self.pos += len(s)

    def poly(self) -> Poly:
        self.ws()
        try:
            f, end = poly_parse_prefix(self.text, self.pos, self.cfg.field)
        except PolySyntaxError as e:
            raise RcSyntaxError("bad polynomial", e.offset) from None
        self.pos = end
        return f

    def expr(self) -> RcElem:
        out = self.term()
        while self.peek("+") or self.peek("-"):
            neg = self.text[self.pos] == "-"
            self.pos += 1
            t = self.term()
            out = out - t if neg else out + t
        return out

    def term(self) -> RcElem:
        out = self.atom()
        while self.peek("*"):
            self.pos += 1
            out = out * self.atom()
        return out

    def polylist(self) -> list[Poly]:
        self.expect("{")
        fs = [self.poly()]
        while self.peek(","):
            self.pos += 1
            fs.append(self.poly())
        self.expect("}")
        return fs

    def atom(self) -> RcElem:
        self.ws()
        if self.peek("("):
            self.pos += 1
            e = self.expr()
            self.expect(")")
            return e
        for name in ("poly", "inv", "projim", "projker"):
            if self.peek(name):
                start = self.pos
                self.pos += len(name)
                try:
                    if name in ("poly", "inv"):
                        self.expect("(")
                        f = self.poly()
                        self.expect(")")
                        return rc_rho(self.cfg, f) if name == "poly" else rc_inv(self.cfg, f)
                    fs = self.polylist()
                    return rc_projim(self.cfg, fs) if name == "projim" else rc_projker(self.cfg, fs)
                except RcError as e:
                    raise RcError(f"{e} (at offset {start})") from None
        raise RcSyntaxError("expected poly(...), inv(...), projim{...} or projker{...}", self.pos)


def rc_parse(text: str, cfg: KernelConfig) -> RcElem:
    p = _RcParser(text, cfg)
    e = p.expr()
    p.ws()
    if p.pos != len(text):
        raise RcSyntaxError("unexpected trailing text", p.pos)
    return e


def rc_parse_prefix(text: str, pos: int, cfg: KernelConfig) -> tuple[RcElem, int]:
    """Parse one multiplicative R_C term starting at pos."""
    p = _RcParser(text, cfg, pos)
    e = p.term()
    return e, p.pos


# -- evaluation on finite models ---------------------------------------


def rc_eval_matrix(a: RcElem, m) -> np.ndarray:
    """The matrix of a acting on the finite model m."""
    cfg = a.cfg
    p = m.field.p
    theta = m.theta
    n = theta.shape[0]
    if cfg.is_algebraic:
        return fpmat.poly_at(a.num, theta)
    comps = [f for f in local_components(cfg)]
    projs = {}
    generic = fpmat.identity(n)
    for f in comps:
        pk = m.kernel_projector(f, cfg(f))
        projs[f] = pk
        generic = (generic - pk) % p
    den_m = fpmat.poly_at(a.den, theta)
    full = (fpmat.matmul(den_m, generic, p) + fpmat.identity(n) - generic) % p
    try:
        den_inv = fpmat.inverse(full, p)
    except ValueError:
        raise RcError(f"denominator {a.den} is not invertible on the generic part of this model") from None
    out = fpmat.matmul(fpmat.matmul(fpmat.poly_at(a.num, theta), den_inv, p), generic, p)
    for f in comps:
        loc = a.local(f)
        out = (out + fpmat.matmul(fpmat.poly_at(loc, theta), projs[f], p)) % p
    return out
