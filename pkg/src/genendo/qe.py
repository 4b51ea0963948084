"""Quantifier elimination into the language of R_C-modules.

The ring R_C splits as a product of local pieces: one ring K[X]/(f^C(f)) for
every f with 0 < C(f) < inf, and (transcendental case) the localization A of
K[X] at the irreducibles with C = inf.  An existentially closed model splits
the same way, with a free module over each local ring and a divisible
A-module on the remaining part.  Elimination of one variable from a
conjunction works component by component:

* equations a_i x = b_i are replaced by a single pivot a x = b* where a
  generates the ideal of the a_i, plus consistency literals b_i = (a_i/a) b*;
* a x = b* is solvable iff f^(C(f) - s_f) kills the f-component of b*, where
  s_f is the f-valuation of a; the divisible part imposes nothing;
* a disequation c x != d survives as (c/a) b* != d when c vanishes on Ker(a),
  and is dropped otherwise (Ker(a) is then cut into infinitely many cosets).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import fpmat
from .formula import (
    FALSE,
    TRUE,
    And,
    Atom,
    Exists,
    Forall,
    Formula,
    LinearSystem,
    Not,
    Or,
    Term,
    conj,
    disj,
    dnf,
    fml_print,
    free_vars,
    from_dnf,
    term_print,
    to_rc_term,
)
from .kernelconfig import KernelConfig
from .polyring import INF, Poly, poly_factor, poly_gcd_bezout, poly_valuation
from .rcring import (
    RcElem,
    RcError,
    _crt_idempotent,
    _inv_mod,
    _modulus,
    local_components,
    rc_is_field,
    rc_one,
    rc_zero,
)


class QeScopeError(ValueError):
    pass


# -- component arithmetic ----------------------------------------------


def _inf_part(cfg: KernelConfig, f: Poly) -> Poly:
    """Product of the C = inf prime powers of a nonzero polynomial (monic)."""
    out = Poly.one(cfg.field)
    for g, e in poly_factor(f).factors.items():
        if cfg(g) == INF:
            out = out * g**e
    return out


def _local_val(r: Poly, f: Poly, c: int) -> int:
    if r.is_zero():
        return c
    return min(c, int(poly_valuation(r, f, check=False)))


@dataclass
class _Comps:
    """An R_C element split into components: global fraction and local residues."""

    glob: tuple | None  # (num, den) or None in the algebraic case
    loc: dict  # f -> residue mod f^C(f)


def _split(a: RcElem) -> _Comps:
    cfg = a.cfg
    loc = {f: a.local(f) for f in local_components(cfg)}
    glob = None if cfg.is_algebraic else (a.num, a.den)
    return _Comps(glob, loc)


def _assemble(cfg: KernelConfig, glob: tuple | None, loc: dict) -> RcElem:
    field = cfg.field
    if cfg.is_algebraic:
        mipo = Poly.one(field)
        for f, c in cfg.entries.items():
            mipo = mipo * f**c
        out = Poly.zero(field)
        for f in cfg.entries:
            r = loc.get(f, Poly.zero(field))
            if r.is_zero():
                continue
            e = _crt_idempotent(cfg, set(cfg.entries) - {f})
            out = out + e * r
        return RcElem(cfg, out % mipo)
    num, den = glob if glob is not None else (Poly.zero(field), Poly.one(field))
    full = {f: loc.get(f, Poly.zero(field)) for f in local_components(cfg)}
    return RcElem(cfg, num, den, full)


def _frac_div(a: tuple, b: tuple) -> tuple:
    return (a[0] * b[1], a[1] * b[0])


# -- one elimination step ----------------------------------------------


@dataclass
class Step:
    var: str
    pivot: str
    conditions: list = dc_field(default_factory=list)
    dropped_disequations: list = dc_field(default_factory=list)
    residual_literals: list = dc_field(default_factory=list)
    polys: list = dc_field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "var": self.var,
            "pivot": self.pivot,
            "conditions": list(self.conditions),
            "dropped_disequations": list(self.dropped_disequations),
            "residual_literals": list(self.residual_literals),
        }


def _lit(t: Term, neg: bool) -> Atom:
    return Atom(t, Term(), neg)


def _scale_term(t: Term, r: RcElem) -> Term:
    return Term({v: r * c for v, c in t.items.items()})


def _elim_conj(cfg: KernelConfig, x: str, eqs: list, neqs: list, rest: list) -> tuple[list | None, Step]:
    """Eliminate x from a conjunction.

    eqs / neqs: lists of (a, b) meaning a x = b / a x != b with b an x-free term.
    rest: x-free literals, passed through.  Returns the list of output literals
    (None if the conjunction is unsatisfiable) and the trace step.
    """
    field = cfg.field
    zero = Poly.zero(field)
    one = Poly.one(field)
    # prefer simple coefficients as pivots; keeps the output readable
    eqs = sorted(eqs, key=lambda e: (len(str(e[0])), str(e[0])))
    comps = [_split(a) for a, _ in eqs]
    # pivot per component
    piv_loc, mu_loc, lam_loc, s_loc = {}, [dict() for _ in eqs], [dict() for _ in eqs], {}
    for f in local_components(cfg):
        c = cfg(f)
        m = _modulus(cfg, f)
        vals = [_local_val(k.loc[f], f, c) for k in comps]
        if not vals or min(vals) >= c:
            s_loc[f] = c
            piv_loc[f] = zero
            continue
        i0 = min(range(len(vals)), key=lambda i: (vals[i], comps[i].loc[f].deg))
        s = vals[i0]
        s_loc[f] = s
        fs = f**s
        u = comps[i0].loc[f] // fs
        uinv = _inv_mod(u % m, m)
        piv_loc[f] = fs
        mu_loc[i0][f] = uinv
        for i, k in enumerate(comps):
            lam_loc[i][f] = (k.loc[f] // fs) % m
    piv_glob = None
    mu_glob = [None] * len(eqs)
    lam_glob = [None] * len(eqs)
    if cfg.is_transcendental:
        nz = [i for i, k in enumerate(comps) if not k.glob[0].is_zero()]
        if nz:
            hs = {i: _inf_part(cfg, comps[i].glob[0]) for i in nz}
            g = hs[nz[0]]
            coef = {nz[0]: one}
            for i in nz[1:]:
                if g.is_one():
                    coef[i] = zero
                    continue
                g2, s, t = poly_gcd_bezout(g, hs[i])
                coef = {j: s * cj for j, cj in coef.items()}
                coef[i] = t
                g = g2
            piv_glob = (g, one)
            for i in nz:
                num, den = comps[i].glob
                unit = (num // hs[i], den)
                # mu_i = coef_i / unit_i
                mu_glob[i] = (coef[i] * unit[1], unit[0])
                lam_glob[i] = (num // g, den)
    pivot = _assemble(cfg, piv_glob, piv_loc) if eqs else rc_zero(cfg)
    mus = [_assemble(cfg, mu_glob[i], mu_loc[i]) for i in range(len(eqs))]
    lams = [_assemble(cfg, lam_glob[i], lam_loc[i]) for i in range(len(eqs))]
    bstar = Term()
    for mu, (_, b) in zip(mus, eqs):
        bstar = bstar + _scale_term(b, mu)
    step = Step(x, str(pivot))
    out = list(rest)
    for lam, (_, b) in zip(lams, eqs):
        t = b - _scale_term(bstar, lam)
        if t.is_zero():
            continue
        out.append(_lit(t, False))
        step.conditions.append(fml_print(out[-1]))
    sig_loc = {}
    for f in local_components(cfg):
        c = cfg(f)
        s = s_loc[f]
        if 0 < s < c:
            sig_loc[f] = f ** (c - s)
    if sig_loc:
        sigma = _assemble(cfg, None, sig_loc)
        t = _scale_term(bstar, sigma)
        if not t.is_zero():
            out.append(_lit(t, False))
            step.conditions.append(fml_print(out[-1]))
    for c_el, d in neqs:
        cc = _split(c_el)
        kills = True
        gam_loc = {}
        for f in local_components(cfg):
            cf = cfg(f)
            s = s_loc[f]
            if _local_val(cc.loc[f], f, cf) < s:
                kills = False
                break
            if s < cf:
                gam_loc[f] = (cc.loc[f] // f**s) % _modulus(cfg, f)
        gam_glob = None
        if kills and cfg.is_transcendental:
            cnum = cc.glob[0]
            if piv_glob is None:
                kills = cnum.is_zero()
            elif not cnum.is_zero():
                h = piv_glob[0]
                if not h.divides(_inf_part(cfg, cnum)):
                    kills = False
                else:
                    gam_glob = (cnum // h, cc.glob[1])
        lit_src = fml_print(_lit(Term({x: c_el}) - d, True))
        if not kills:
            step.dropped_disequations.append(lit_src)
            continue
        gamma = _assemble(cfg, gam_glob, gam_loc)
        t = _scale_term(bstar, gamma) - d
        if t.is_zero():
            step.residual_literals.append("0 != 0")
            return None, step
        out.append(_lit(t, True))
        step.residual_literals.append(fml_print(out[-1]))
    step.polys = _term_polys(out)
    return out, step


def _term_polys(lits) -> list:
    out = []
    for a in lits:
        for c in (a.lhs - a.rhs).items.values():
            out.extend([c.num, c.den, *c.corr.values()])
    return out


def _collect(lits: list, x: str, cfg: KernelConfig):
    eqs, neqs, rest = [], [], []
    for a in lits:
        t = to_rc_term(a.lhs - a.rhs, cfg)
        c = t.coeff(x)
        if c is None:
            out = _lit(t, a.neg)
            rest.append(out)
            continue
        b = -t.without(x)
        (neqs if a.neg else eqs).append((c, b))
    return eqs, neqs, rest


def _simplify_lits(lits: list) -> list | None:
    out = []
    seen = set()
    for a in lits:
        if a.lhs.is_zero() and a.rhs.is_zero():
            if a.neg:
                return None
            continue
        if a in seen:
            continue
        if Atom(a.lhs, a.rhs, not a.neg) in seen:
            return None
        seen.add(a)
        out.append(a)
    return out


def _absorb(clauses: list) -> list:
    """Drop duplicate clauses and clauses that contain another clause."""
    sets = []
    for c in clauses:
        s = frozenset(c)
        if s not in [t for t, _ in sets]:
            sets.append((s, c))
    sets.sort(key=lambda sc: len(sc[0]))
    kept = []
    for s, c in sets:
        if any(k <= s for k, _ in kept):
            continue
        kept.append((s, c))
    return [c for _, c in kept]


def qe_eliminate_one(x: str, sys: LinearSystem, cfg: KernelConfig) -> tuple[Formula, Step]:
    """Eliminate x from the existential closure of a linear system."""
    lits = []
    for coeffs, rhs in sys.equations:
        lits.append(Atom(Term(coeffs), rhs, False))
    for coeffs, rhs in sys.disequations:
        lits.append(Atom(Term(coeffs), rhs, True))
    clauses = dnf(conj(lits + ([sys.residual] if sys.residual != TRUE else [])))
    out_clauses = []
    steps = []
    for cl in clauses:
        res, step = _eliminate_clause(cl, x, cfg)
        steps.append(step)
        if res is not None:
            out_clauses.append(res)
    merged = steps[0] if steps else Step(x, "poly(0)")
    for s in steps[1:]:
        merged.conditions += s.conditions
        merged.dropped_disequations += s.dropped_disequations
        merged.residual_literals += s.residual_literals
    return from_dnf(_absorb(out_clauses)), merged


def _eliminate_clause(cl: list, x: str, cfg: KernelConfig):
    eqs, neqs, rest = _collect(cl, x, cfg)
    lits, step = _elim_conj(cfg, x, eqs, neqs, rest)
    if lits is None:
        return None, step
    return _simplify_lits(lits), step


# -- full elimination --------------------------------------------------


@dataclass
class QfResult:
    formula: Formula
    trace: list

    def trace_json(self) -> list:
        return [s.to_json() for s in self.trace]

    def polys(self) -> list:
        out = []
        for s in self.trace:
            out.extend(s.polys)
        return out

    def __str__(self) -> str:
        return fml_print(self.formula)


def _check_scope(cfg: KernelConfig) -> None:
    if cfg.field.p == 0:
        # factorization over Q is bounded; coefficients are checked as they arrive
        return


class _QE:
    def __init__(self, cfg: KernelConfig):
        self.cfg = cfg
        self.trace: list = []

    def run(self, phi: Formula) -> list:
        """DNF clauses (lists of normalized R_C literals) equivalent to phi."""
        cfg = self.cfg
        if isinstance(phi, Atom):
            t = to_rc_term(phi.lhs - phi.rhs, cfg)
            lits = _simplify_lits([_lit(t, phi.neg)])
            return [] if lits is None else [lits]
        if isinstance(phi, Not):
            return self.negate(self.run(phi.body))
        if isinstance(phi, Or):
            out = []
            for c in phi.items:
                out.extend(self.run(c))
            return _absorb(out)
        if isinstance(phi, And):
            acc = [[]]
            for c in phi.items:
                sub = self.run(c)
                nxt = []
                for a in acc:
                    for b in sub:
                        m = _simplify_lits(a + b)
                        if m is not None:
                            nxt.append(m)
                acc = _absorb(nxt)
                if not acc:
                    break
            return acc
        body = self.run(phi.body)
        if isinstance(phi, Forall):
            body = self.negate(body)
        out = []
        for cl in body:
            res, step = _eliminate_clause(cl, phi.var, cfg)
            self.trace.append(step)
            if res is not None:
                out.append(res)
        out = _absorb(out)
        if isinstance(phi, Forall):
            out = self.negate(out)
        return out

    def negate(self, clauses: list) -> list:
        acc = [[]]
        for cl in clauses:
            nxt = []
            for a in acc:
                for lit in cl:
                    m = _simplify_lits(a + [Atom(lit.lhs, lit.rhs, not lit.neg)])
                    if m is not None:
                        nxt.append(m)
            acc = _absorb(nxt)
            if not acc:
                break
        return acc


def qe_full(phi: Formula, cfg: KernelConfig) -> QfResult:
    _check_scope(cfg)
    q = _QE(cfg)
    clauses = q.run(phi)
    return QfResult(from_dnf(clauses), q.trace)


def qe_decide_sentence(phi: Formula, cfg: KernelConfig) -> bool:
    if free_vars(phi):
        raise ValueError(f"not a sentence: free variables {sorted(free_vars(phi))}")
    res = qe_full(phi, cfg)
    f = res.formula
    clauses = dnf(f)
    return bool(clauses) and any(len(c) == 0 for c in clauses)


# -- closures in finite models -----------------------------------------


@dataclass
class ClosureBasis:
    generators: list
    basis: np.ndarray  # columns
    annihilators: list  # per generator: monic polynomial with ann(g) = (mu) in K[theta]
    model: object = None

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def vectors(self, cap: int = 1 << 16) -> np.ndarray:
        p = self.model.p
        if p**self.dim > cap:
            raise ValueError("closure too large to list")
        return fpmat.span_vectors(self.basis, p)

    def contains(self, v) -> bool:
        p = self.model.p
        v = np.asarray(v, dtype=np.int64).reshape(-1, 1) % p
        if self.dim == 0:
            return not v.any()
        return fpmat.rank(np.concatenate([self.basis, v], axis=1), p) == self.dim


def _ring_matrices(m) -> list:
    """Matrices of the R_C generators acting on m: theta and the local projectors."""
    mats = [m.theta]
    cfg = m.cfg
    for f in local_components(cfg):
        mats.append(m.kernel_projector(f, cfg(f)))
    return mats


def _closure_basis(m, gens: list) -> np.ndarray:
    p = m.p
    mats = _ring_matrices(m)
    cols = [np.asarray(g, dtype=np.int64).reshape(-1) % p for g in gens]
    cur = np.zeros((m.dim, 0), dtype=np.int64)
    frontier = [c for c in cols]
    while frontier:
        new = []
        for v in frontier:
            trial = np.concatenate([cur, v.reshape(-1, 1)], axis=1)
            if fpmat.rank(trial, p) > cur.shape[1]:
                cur = trial
                new.append(v)
        frontier = [(a @ v) % p for v in new for a in mats]
    return fpmat.colspace(cur, p) if cur.shape[1] else cur


def _vector_annihilator(m, v) -> Poly:
    """Monic mu of least degree with mu(theta) v = 0."""
    p = m.p
    v = np.asarray(v, dtype=np.int64).reshape(-1) % p
    krylov = [v]
    while True:
        mat = np.stack(krylov, axis=1)
        nxt = (m.theta @ krylov[-1]) % p
        sol = fpmat.solve(mat, nxt, p)
        if sol is not None:
            return Poly([(-int(c)) % p for c in sol] + [1], m.field)
        krylov.append(nxt)


def closure_cl_theta(gens, m) -> ClosureBasis:
    gens = [np.asarray(g, dtype=np.int64).reshape(-1) % m.p for g in gens]
    basis = _closure_basis(m, gens)
    anns = [_vector_annihilator(m, g) if g.any() else Poly.one(m.field) for g in gens]
    return ClosureBasis(gens, basis, anns, m)


def closure_isomorphic(a, m1, b, m2) -> bool:
    """Is there an R_C-isomorphism cl(a) -> cl(b) sending a_i to b_i?"""
    if len(a) != len(b):
        return False
    if m1.cfg != m2.cfg or m1.p != m2.p:
        raise ValueError("closures must live in models of the same configuration")
    ca = closure_cl_theta(a, m1).dim
    cb = closure_cl_theta(b, m2).dim
    if ca != cb:
        return False
    # the diagonal closure projects onto both factors; it is a graph iff dims agree
    from .finmodel import FinModel

    theta = fpmat.block_diag([m1.theta, m2.theta])
    joint = FinModel(m1.field, theta, m1.cfg)
    pairs = [np.concatenate([np.asarray(x).reshape(-1), np.asarray(y).reshape(-1)]) for x, y in zip(a, b)]
    return closure_cl_theta(pairs, joint).dim == ca


def brute_force_closure(gens, m, cap: int = 1 << 16) -> set:
    """Orbit closure by iterating matrix actions and sums to a fixpoint (explicit sets)."""
    p = m.p
    mats = _ring_matrices(m)
    elems = {tuple([0] * m.dim)}
    frontier = {tuple(int(c) % p for c in np.asarray(g).reshape(-1)) for g in gens}
    while frontier:
        new = set()
        for v in frontier:
            if v in elems:
                continue
            new.add(v)
        if not new:
            break
        elems |= new
        if len(elems) > cap:
            raise ValueError("closure exceeds the cap")
        nxt = set()
        arr = [np.array(v, dtype=np.int64) for v in new]
        for v in arr:
            for a in mats:
                nxt.add(tuple(int(c) for c in (a @ v) % p))
            for c in range(1, p):
                nxt.add(tuple(int(t) for t in (c * v) % p))
        for v in new:
            va = np.array(v, dtype=np.int64)
            for w in list(elems):
                nxt.add(tuple(int(t) for t in (va + np.array(w)) % p))
        frontier = nxt - elems
    return elems


# -- algebraic patterns ------------------------------------------------


def pattern_eval(pat: list, d: dict, m) -> set:
    """All tuples (y_1, ..., y_n) with y_i = r_i(x), x drawn from candidates_i.

    candidates_i is either a list of Terms over the parameter names in d and
    the previous outputs y1, y2, ..., or a callable env -> list of vectors.
    """
    p = m.p
    results = {()}
    for i, (r, cands) in enumerate(pat):
        mat = m.coeff_matrix(r)
        nxt = set()
        for tup in results:
            env = {k: np.asarray(v, dtype=np.int64) % p for k, v in d.items()}
            for j, y in enumerate(tup):
                env[f"y{j + 1}"] = np.array(y, dtype=np.int64)
            if callable(cands):
                xs = cands(env)
            else:
                xs = []
                for t in cands:
                    val = np.zeros(m.dim, dtype=np.int64)
                    for v, c in t.items.items():
                        if v not in env:
                            raise ValueError(f"unknown parameter {v}")
                        val = val + m.coeff_matrix(c) @ env[v]
                    xs.append(val % p)
            xs = list(xs)
            if len(xs) > 1 << 16:
                raise ValueError("candidate set is not finite at desk scale")
            for xv in xs:
                y = tuple(int(c) for c in (mat @ np.asarray(xv, dtype=np.int64)) % p)
                nxt.add(tup + (y,))
        results = nxt
    return results


# -- exchange ----------------------------------------------------------


@dataclass
class ExchangeVerdict:
    has_exchange: bool
    model: object = None
    u: np.ndarray | None = None
    v: np.ndarray | None = None
    reason: str = ""

    def to_json(self) -> dict:
        out = {"verdict": "HasExchange" if self.has_exchange else "FailsExchange", "reason": self.reason}
        if not self.has_exchange:
            out["witness"] = {"model": self.model.to_json(), "u": self.u.tolist(), "v": self.v.tolist()}
        return out


def _default_inf_poly(cfg: KernelConfig) -> Poly | None:
    from .polyring import irreducibles

    deg = 1
    while deg < 8:
        for g in irreducibles(cfg.field, deg):
            if cfg(g) == INF:
                return g
        deg += 1
    return None


def exchange_diagnose(cfg: KernelConfig) -> ExchangeVerdict:
    from .finmodel import fm_build

    if rc_is_field(cfg):
        return ExchangeVerdict(True, reason="R_C is a field")
    field = cfg.field
    if cfg.is_algebraic:
        mipo = Poly.one(field)
        for f, c in cfg.entries.items():
            mipo = mipo * f**c
        f = sorted(cfg.entries, key=Poly.sort_key)[0]
        blocks = [(g, c) for g, c in sorted(cfg.entries.items(), key=lambda kv: kv[0].sort_key())]
        m = fm_build(cfg, blocks)
        # u generates the cyclic module K[X]/(MiPo); v = f(theta) u
        u = np.zeros(m.dim, dtype=np.int64)
        start = 0
        for g, c in blocks:
            u[start] = 1
            start += g.deg * c
        v = (m.poly_matrix(f) @ u) % m.p
        return ExchangeVerdict(False, m, u, v, f"{f} is a non-unit: MiPo = {mipo} is not irreducible")
    # transcendental and not C_0: some f has C(f) > 0
    cands = sorted([f for f, c in cfg.entries.items() if c > 0], key=Poly.sort_key)
    f = cands[0] if cands else _default_inf_poly(cfg)
    c = cfg(f)
    if c >= 2:
        m = fm_build(cfg, [(f, 2)], support={f})
        u = np.zeros(m.dim, dtype=np.int64)
        u[0] = 1
        v = (m.poly_matrix(f) @ u) % m.p
        return ExchangeVerdict(False, m, u, v, f"{f}(theta) has infinite kernel and image")
    from .finmodel import _filler_choices

    g = _filler_choices(field, set(cfg.entries) | {f}, 1)[0]
    m = fm_build(cfg, [(f, 1), (g, 1, 1, True)], support={f})
    u = np.zeros(m.dim, dtype=np.int64)
    u[0] = 1
    u[f.deg] = 1
    v = (m.kernel_projector(f, 1) @ u) % m.p
    return ExchangeVerdict(False, m, u, v, f"the projection onto Ker({f}) is a non-unit")


def exchange_verify(w: ExchangeVerdict) -> bool:
    """Recompute closures: v in <u> minus <0>, and u not in <v>."""
    if w.has_exchange:
        return True
    m = w.model
    cu = closure_cl_theta([w.u], m)
    cv = closure_cl_theta([w.v], m)
    return bool(w.v.any()) and cu.contains(w.v) and not cv.contains(w.u)
