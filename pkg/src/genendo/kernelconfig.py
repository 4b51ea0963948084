"""Kernel configurations: maps from monic irreducibles to N u {inf}.

A configuration is stored as a finite exception map plus a default value
(0 or infinity) for every irreducible outside the map.  Algebraic
configurations have default 0 and a finite degree equal to the degree of
their minimal polynomial.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

from .polyring import (
    INF,
    FieldSpec,
    Poly,
    is_irreducible,
    poly_factor,
    poly_gcd,
    poly_lcm,
    poly_valuation,
)

ZERO = "zero"
INFINITY = "infinity"


class KernelConfigError(ValueError):
    pass


class KernelConfig:
    __slots__ = ("field", "entries", "default", "degree", "_key")

    def __init__(self, field: FieldSpec, entries: dict, default: str, degree=None):
        if default not in (ZERO, INFINITY):
            raise KernelConfigError(f"default must be {ZERO!r} or {INFINITY!r}")
        dval = 0 if default == ZERO else INF
        clean = {}
        for f, c in entries.items():
            if f.field != field:
                raise KernelConfigError(f"entry {f} is over {f.field}, expected {field}")
            if not f.is_monic():
                raise KernelConfigError(f"entry {f} is not monic")
            if c != INF and (int(c) != c or c < 0):
                raise KernelConfigError(f"entry value {c} for {f} is not in N u {{inf}}")
            c = INF if c == INF else int(c)
            if c != dval:
                clean[f] = c
        self.field = field
        self.entries = clean
        self.default = default
        if degree is None:
            degree = _natural_degree(clean, default)
        self.degree = degree
        self._key = None

    # -- named constructors --------------------------------------------

    @classmethod
    def c_zero(cls, field: FieldSpec) -> "KernelConfig":
        return cls(field, {}, ZERO, INF)

    @classmethod
    def c_infinity(cls, field: FieldSpec) -> "KernelConfig":
        return cls(field, {}, INFINITY, INF)

    @classmethod
    def from_mipo(cls, mipo: Poly) -> "KernelConfig":
        if mipo.deg < 1:
            raise KernelConfigError("an algebraic configuration needs a nonconstant minimal polynomial")
        fac = poly_factor(mipo)
        return cls(mipo.field, dict(fac.factors), ZERO, mipo.deg)

    @classmethod
    def transcendental(cls, field: FieldSpec, entries: dict, default: str = INFINITY) -> "KernelConfig":
        return cls(field, entries, default, INF)

    # -- queries -------------------------------------------------------

    @property
    def is_algebraic(self) -> bool:
        return self.degree != INF

    @property
    def is_transcendental(self) -> bool:
        return self.degree == INF

    @property
    def default_value(self):
        return 0 if self.default == ZERO else INF

    def __call__(self, f: Poly):
        return self.entries.get(f, self.default_value)

    def positive_finite(self) -> list[Poly]:
        """The irreducibles with 0 < C(f) < inf (always finitely many here)."""
        return sorted((f for f, c in self.entries.items() if 0 < c < INF), key=Poly.sort_key)

    def finite_support(self) -> list[Poly]:
        return sorted(self.entries, key=Poly.sort_key)

    def mipo(self) -> Poly:
        return kc_mipo(self)

    @property
    def is_trivial(self) -> bool:
        """MiPo = X - q: theta is a scalar multiple of the identity."""
        return self.is_algebraic and self.degree == 1

    def key(self) -> tuple:
        if self._key is None:
            items = tuple(sorted(((f.sort_key(), c) for f, c in self.entries.items())))
            self._key = (self.field.p, self.default, self.degree, items)
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, KernelConfig) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"KernelConfig({describe(self)})"

    # -- serialization -------------------------------------------------

    def to_json(self) -> dict:
        return {
            "field": self.field.to_json(),
            "default": self.default,
            "entries": [
                {"f": str(f), "c": "inf" if c == INF else c}
                for f, c in sorted(self.entries.items(), key=lambda kv: kv[0].sort_key())
            ],
            "degree": "inf" if self.degree == INF else self.degree,
        }

    @classmethod
    def from_json(cls, d: dict, validate: bool = True) -> "KernelConfig":
        field = FieldSpec.from_json(d["field"])
        entries = {}
        for e in d.get("entries", []):
            f = Poly.parse(e["f"], field)
            c = e["c"]
            entries[f] = INF if c in ("inf", "infinity", None) else int(c)
        deg = d.get("degree")
        if deg is None:
            deg = None
        elif deg in ("inf", "infinity"):
            deg = INF
        else:
            deg = int(deg)
        cfg = cls(field, entries, d.get("default", INFINITY), deg)
        if validate:
            problems = kc_validate(cfg)
            if problems:
                raise KernelConfigError("; ".join(problems))
        return cfg

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _natural_degree(entries: dict, default: str):
    if default == INFINITY or any(c == INF for c in entries.values()):
        return INF
    return sum(f.deg * c for f, c in entries.items())


def describe(cfg: KernelConfig) -> str:
    if cfg.is_algebraic:
        tag = " (trivial)" if cfg.is_trivial else ""
        return f"algebraic over {cfg.field}, MiPo = {kc_mipo(cfg)}{tag}"
    parts = [f"{f}:{'inf' if c == INF else c}" for f, c in sorted(cfg.entries.items(), key=lambda kv: kv[0].sort_key())]
    body = ", ".join(parts) if parts else "no exceptions"
    return f"transcendental over {cfg.field}, default {cfg.default}, {{{body}}}"


def kc_classify(cfg: KernelConfig, f: Poly, check: bool = True):
    if check and (not f.is_monic() or not is_irreducible(f)):
        raise KernelConfigError(f"{f} is not a monic irreducible")
    return cfg(f)


def kc_validate(cfg: KernelConfig) -> list[str]:
    """Return diagnostics; an empty list means the configuration is well formed."""
    problems = []
    for f, c in cfg.entries.items():
        if not is_irreducible(f):
            problems.append(f"entry {f} is not irreducible")
    if cfg.degree == INF:
        if cfg.default == ZERO and all(c != INF for c in cfg.entries.values()):
            # C_0-like: transcendental by declaration; legitimate (Def of C_0)
            pass
        return problems
    if cfg.default != ZERO:
        problems.append("algebraic configuration must have default zero")
    if any(c == INF for c in cfg.entries.values()):
        problems.append("algebraic configuration has an infinite entry")
    total = sum(f.deg * c for f, c in cfg.entries.items() if c != INF)
    if total != cfg.degree:
        problems.append(f"degree equation violated: sum deg(f)*C(f) = {total} but degree = {cfg.degree}")
    if cfg.degree == 0:
        problems.append("algebraic configuration of degree 0 forces V = 0")
    return problems


def kc_mipo(cfg: KernelConfig) -> Poly:
    if not cfg.is_algebraic:
        raise KernelConfigError("MiPo is only defined for algebraic configurations")
    out = Poly.one(cfg.field)
    for f, c in cfg.entries.items():
        out = out * f**c
    return out


# -- constraint reduction ---------------------------------------------


@dataclass
class KernelConstraint:
    """sum_k cap_l Ker(lhs[k][l]) = sum_k cap_l Ker(rhs[k][l])."""

    lhs: list
    rhs: list

    def __post_init__(self):
        if not self.lhs or not self.rhs or not all(self.lhs) or not all(self.rhs):
            raise KernelConfigError("constraint sides must be non-empty lists of non-empty lists")

    @property
    def field(self) -> FieldSpec:
        return self.lhs[0][0].field

    def to_json(self) -> dict:
        return {"lhs": [[str(p) for p in g] for g in self.lhs], "rhs": [[str(p) for p in g] for g in self.rhs]}

    @classmethod
    def from_json(cls, d: dict, field: FieldSpec) -> "KernelConstraint":
        side = lambda s: [[Poly.parse(t, field) for t in grp] for grp in s]
        return cls(side(d["lhs"]), side(d["rhs"]))


class Inconsistent:
    """Marker result: the constraints force V = {0}."""

    def __init__(self, reason: str = "constraints force V = {0}"):
        self.reason = reason

    def __repr__(self) -> str:
        return f"Inconsistent({self.reason!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Inconsistent)

    def __hash__(self) -> int:
        return hash("Inconsistent")


def _collapse(side: list) -> Poly:
    """Sum of intersections of kernels -> one polynomial with the same kernel."""
    out = None
    for grp in side:
        g = grp[0]
        for r in grp[1:]:
            g = poly_gcd(g, r)
        g = g.monic() if not g.is_zero() else g
        out = g if out is None else poly_lcm(out, g)
    return out


def constraints_reduce(cs: list, field: FieldSpec | None = None):
    """Reduce kernel-equality constraints to a KernelConfig or Inconsistent."""
    if not cs:
        if field is None:
            raise KernelConfigError("field required for an empty constraint list")
        return KernelConfig.c_infinity(field)
    field = cs[0].field
    bounds: dict = {}
    forced: list[Poly] = []
    for c in cs:
        if c.field != field:
            raise KernelConfigError("constraints over different fields")
        a, b = _collapse(c.lhs), _collapse(c.rhs)
        if a.is_zero() and b.is_zero():
            continue
        if a.is_zero() or b.is_zero():
            forced.append(b if a.is_zero() else a)
        factors = set()
        for side in (a, b):
            if not side.is_zero():
                factors.update(poly_factor(side).factors)
        for f in factors:
            va, vb = poly_valuation(a, f, check=False), poly_valuation(b, f, check=False)
            if va != vb:
                m = min(va, vb)
                bounds[f] = min(bounds.get(f, INF), m)
    if forced:
        alpha = forced[0]
        for g in forced[1:]:
            alpha = poly_gcd(alpha, g)
        entries = {}
        for f, e in poly_factor(alpha).factors.items():
            v = min(bounds.get(f, INF), e)
            if v > 0:
                entries[f] = v
        if not entries:
            return Inconsistent("the forced minimal polynomial is 1")
        cfg = KernelConfig(field, entries, ZERO)
        return cfg
    return KernelConfig(field, bounds, INFINITY, INF)


def defining_constraints(cfg: KernelConfig) -> list:
    """Constraints whose reduction yields cfg (default-infinity or algebraic configs)."""
    field = cfg.field
    one = Poly.one(field)
    if cfg.is_algebraic:
        return [KernelConstraint([[Poly.zero(field)]], [[kc_mipo(cfg)]])]
    if cfg.default != INFINITY:
        raise KernelConfigError("configurations with default zero and infinite degree need infinitely many constraints")
    out = []
    for f, c in sorted(cfg.entries.items(), key=lambda kv: kv[0].sort_key()):
        out.append(KernelConstraint([[f**c if c else one]], [[f ** (c + 1)]]))
    return out
