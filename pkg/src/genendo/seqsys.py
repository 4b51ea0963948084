"""Parametrized sequence systems and the transformation engine.

A sequence system is a conjunction of rows f_k^q_k(theta)(x_k) = y_k over
distinct variables x_k, next to a list of unconstrained ("li") variables.
ss_transform absorbs polynomial equations into such a system one at a time.
Each step diagonalizes the stacked coefficient matrix over K[X] with
unimodular row and column operations, then splits every diagonal equation
d(theta)(w) = c into its prime-power parts:

* C(f) = inf: keep the row f^e(theta)(w_f) = c;
* C(f) = 0: f is invertible, so w_f = inv(f^e)(c) is eliminated;
* 0 < C(f) < inf: keep the kernel part w' = projker{f}(w_f) with the row
  f^min(e,C)(theta)(w') = projker{f}(c); the image part is inv(f^e)(c).

The returned witness (nu, tau) is checked on finite models by
ss_witness_verify; the construction itself is never trusted blindly.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field as dc_field

import numpy as np

from .formula import (
    Atom,
    Formula,
    LinearSystem,
    Term,
    _map_terms,
    atoms,
    conj,
    placeholder_abstract,
    placeholder_bindings,
    term_print,
)
from .kernelconfig import KernelConfig
from .polyring import INF, Poly, PolySyntaxError, euclid_div, poly_factor, poly_gcd_bezout, poly_parse_prefix
from .rcring import RcElem, rc_inv, rc_one, rc_projker, rc_rho


class SeqSysError(ValueError):
    pass


class UnboundedEquation(SeqSysError):
    pass


@dataclass(frozen=True)
class Row:
    var: str
    f: Poly
    q: int
    param: str

    @property
    def degree(self) -> int:
        return self.f.deg * self.q

    def __str__(self) -> str:
        return f"({self.f})^{self.q} [{self.var}] = {self.param}"


@dataclass
class SeqSystem:
    cfg: KernelConfig
    li_vars: list = dc_field(default_factory=list)
    rows: list = dc_field(default_factory=list)

    def __post_init__(self):
        cfg = self.cfg
        if cfg.is_algebraic and self.li_vars:
            raise SeqSysError("algebraic configurations allow no unconstrained variables")
        seen = set(self.li_vars)
        if len(seen) != len(self.li_vars):
            raise SeqSysError("repeated unconstrained variable")
        for r in self.rows:
            c = cfg(r.f)
            if not r.f.is_monic() or len(poly_factor(r.f).factors) != 1 or poly_factor(r.f).factors.get(r.f) != 1:
                raise SeqSysError(f"{r.f} is not a monic irreducible")
            if c == 0:
                raise SeqSysError(f"row polynomial {r.f} has C = 0")
            if not (1 <= r.q and (c == INF or r.q <= c)):
                raise SeqSysError(f"exponent {r.q} for {r.f} outside 1..C(f)")
            if r.var in seen:
                raise SeqSysError(f"variable {r.var} is used twice")
            seen.add(r.var)

    @property
    def ld_vars(self) -> list:
        return [r.var for r in self.rows]

    @property
    def variables(self) -> list:
        return list(self.li_vars) + self.ld_vars

    @property
    def params(self) -> list:
        return [r.param for r in self.rows]

    def row_of(self, var: str) -> Row | None:
        for r in self.rows:
            if r.var == var:
                return r
        return None

    def __str__(self) -> str:
        return ss_print(self)


# -- measures ----------------------------------------------------------


def ss_rank_degree(s: SeqSystem) -> tuple[int, int]:
    return len(s.li_vars), sum(r.degree for r in s.rows)


def ss_compatible(s: SeqSystem, u, m) -> bool:
    """Is the parameter tuple u compatible with s in the model m?"""
    u = list(u)
    if len(u) != len(s.rows):
        raise SeqSysError(f"expected {len(s.rows)} parameters, got {len(u)}")
    cfg = s.cfg
    for r, val in zip(s.rows, u):
        c = cfg(r.f)
        if c == INF:
            continue
        mat = m.poly_matrix(r.f ** (c - r.q))
        if ((mat @ np.asarray(val, dtype=np.int64)) % m.p).any():
            return False
    return True


def ss_holds(s: SeqSystem, env: dict, m) -> bool:
    """Does the assignment env (variables and parameter slots) satisfy s?"""
    for r in s.rows:
        lhs = (m.poly_matrix(r.f**r.q) @ np.asarray(env[r.var], dtype=np.int64)) % m.p
        if not np.array_equal(lhs, np.asarray(env[r.param], dtype=np.int64) % m.p):
            return False
    return True


# -- boundedness and Euclidean substitution ----------------------------


def ss_bounded_check(psi: Formula, s: SeqSystem) -> bool:
    """True iff no placeholder x^i with i >= deg(f^q) occurs for a row variable x."""
    try:
        binds = placeholder_bindings(psi)
    except ValueError:
        binds = placeholder_bindings(placeholder_abstract(psi))
    bound = {r.var: r.degree for r in s.rows}
    for v, i in binds.values():
        if v in bound and i >= bound[v]:
            return False
    return True


def term_bounded(t: Term, s: SeqSystem) -> bool:
    for r in s.rows:
        c = t.coeff(r.var)
        if c is None:
            continue
        if isinstance(c, RcElem) or c.deg >= r.degree:
            return False
    return True


def _euclid_term(t: Term, s: SeqSystem) -> Term:
    out = Term()
    for v, c in t.items.items():
        r = s.row_of(v)
        if r is None or isinstance(c, RcElem) or c.deg < r.degree:
            out = out + Term({v: c})
            continue
        chi, rem = euclid_div(c, r.f**r.q)
        out = out + Term({v: rem}) + Term({r.param: chi})
    return out


def ss_euclid_substitute(psi: Formula, s: SeqSystem) -> Formula:
    """Rewrite every c(theta)(x_k) with deg c >= deg f_k^q_k via c = chi*f_k^q_k + r."""
    return _map_terms(psi, lambda t: _euclid_term(t, s), expand=False)


# -- term helpers ------------------------------------------------------


def _subst(t: Term, mapping: dict) -> Term:
    out = Term()
    for v, c in t.items.items():
        if v in mapping:
            out = out + mapping[v].scale(c)
        else:
            out = out + Term({v: c})
    return out


def _split_vars(t: Term, xs) -> tuple[Term, Term]:
    xs = set(xs)
    a = Term({v: c for v, c in t.items.items() if v in xs})
    b = Term({v: c for v, c in t.items.items() if v not in xs})
    return a, b


def _rc(cfg: KernelConfig, c) -> RcElem:
    return c if isinstance(c, RcElem) else rc_rho(cfg, c)


def _rc_term(t: Term, cfg: KernelConfig) -> Term:
    return Term({v: _rc(cfg, c) for v, c in t.items.items()})


def _is_poly_term(t: Term) -> bool:
    return all(isinstance(c, Poly) for c in t.items.values())


# -- diagonalization over K[X] -----------------------------------------


def _diagonalize(A: list, field) -> tuple[list, list, list, list]:
    """Unimodular L, R and R^-1 with L A R diagonal (not necessarily Smith)."""
    rows = len(A)
    cols = len(A[0]) if rows else 0
    zero, one = Poly.zero(field), Poly.one(field)
    M = [list(r) for r in A]
    L = [[one if i == j else zero for j in range(rows)] for i in range(rows)]
    R = [[one if i == j else zero for j in range(cols)] for i in range(cols)]
    Ri = [[one if i == j else zero for j in range(cols)] for i in range(cols)]

    def swap_rows(i, j):
        M[i], M[j] = M[j], M[i]
        L[i], L[j] = L[j], L[i]

    def swap_cols(i, j):
        for row in M:
            row[i], row[j] = row[j], row[i]
        for row in R:
            row[i], row[j] = row[j], row[i]
        Ri[i], Ri[j] = Ri[j], Ri[i]

    def row_sub(i, t, q):  # row_i -= q row_t
        M[i] = [a - q * b for a, b in zip(M[i], M[t])]
        L[i] = [a - q * b for a, b in zip(L[i], L[t])]

    def col_sub(j, t, q):  # col_j -= q col_t
        for row in M:
            row[j] = row[j] - q * row[t]
        for row in R:
            row[j] = row[j] - q * row[t]
        Ri[t] = [a + q * b for a, b in zip(Ri[t], Ri[j])]

    t = 0
    while t < min(rows, cols):
        cand = [(M[i][j].deg, i, j) for i in range(t, rows) for j in range(t, cols) if not M[i][j].is_zero()]
        if not cand:
            break
        _, i, j = min(cand)
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            for i in range(t + 1, rows):
                if not M[i][t].is_zero():
                    row_sub(i, t, M[i][t] // M[t][t])
            for j in range(t + 1, cols):
                if not M[t][j].is_zero():
                    col_sub(j, t, M[t][j] // M[t][t])
            rest = [(M[i][t].deg, i, t) for i in range(t + 1, rows) if not M[i][t].is_zero()]
            rest += [(M[t][j].deg, t, j) for j in range(t + 1, cols) if not M[t][j].is_zero()]
            if not rest:
                break
            _, i, j = min(rest)
            swap_rows(t, i)
            swap_cols(t, j)
        t += 1
    return L, M, R, Ri


# -- transformation ----------------------------------------------------


@dataclass
class TransformWitness:
    nu: dict  # new variable -> Term in (old variables, parameters)
    tau: dict  # old variable -> Term in (new variables, parameters)

    def to_json(self) -> dict:
        return {
            "nu": {v: term_print(t) for v, t in self.nu.items()},
            "tau": {v: term_print(t) for v, t in self.tau.items()},
        }


@dataclass
class TransformResult:
    system: SeqSystem
    phi: list  # Terms in the parameters that must vanish
    mu: dict  # parameter slot of system -> Term in the parameters
    witness: TransformWitness
    measures: list = dc_field(default_factory=list)  # (rk, deg) after each absorbed equation

    def phi_formula(self) -> Formula:
        return conj(Atom(t, Term(), False) for t in self.phi)

    def to_json(self) -> dict:
        return {
            "system": ss_to_json(self.system),
            "phi": [term_print(t) + " = 0" for t in self.phi],
            "mu": {k: term_print(t) for k, t in self.mu.items()},
            "witness": self.witness.to_json(),
            "measures": [list(m) for m in self.measures],
        }


class _Names:
    def __init__(self, used):
        self.used = set(used)
        self.counters = {}

    def fresh(self, prefix: str) -> str:
        k = self.counters.get(prefix, 0)
        while True:
            k += 1
            name = f"{prefix}{k}"
            if name not in self.used:
                self.used.add(name)
                self.counters[prefix] = k
                return name


def _normalize_equations(e) -> list:
    """Equations as Terms t with t = 0."""
    if isinstance(e, LinearSystem):
        if e.disequations:
            raise SeqSysError("the transformation absorbs equations only")
        return [Term(coeffs) - rhs for coeffs, rhs in e.equations]
    out = []
    for item in e:
        if isinstance(item, Term):
            out.append(item)
        elif isinstance(item, Atom):
            if item.neg:
                raise SeqSysError("the transformation absorbs equations only")
            out.append(item.lhs - item.rhs)
        else:
            coeffs, rhs = item
            out.append(Term(coeffs) - rhs)
    return out


def _split_prime_powers(cfg, d: Poly, c: Term, names: _Names):
    """Solve d(theta)(w) = c for w.

    Returns (rows, phi, nu_parts, tau) where rows are (var, f, q, mu) for the
    new system, phi lists parameter terms that must vanish, nu_parts maps each
    new variable to the R_C element applied to w, and tau is (poly coefficient
    per new variable, parameter term) with w = sum poly_j(theta)(v_j) + term.
    """
    field = cfg.field
    kappa = d.lc()
    c = c.scale(Poly.const(field.inv(kappa), field))
    d = d.monic()
    facs = sorted(poly_factor(d).factors.items(), key=lambda kv: kv[0].sort_key())
    if not facs:
        return [], [], {}, ({}, _rc_term(c, cfg))
    hs = [f**e for f, e in facs]
    Hs = [d // h for h in hs]
    # alpha_j with sum alpha_j H_j = 1
    alphas = []
    g = Poly.zero(field)
    coef = []
    for H in Hs:
        if g.is_zero():
            g, coef = H, [Poly.one(field)]
            continue
        g2, s, t = poly_gcd_bezout(g, H)
        coef = [s * a for a in coef] + [t]
        g = g2
    assert g.is_one()
    alphas = coef
    rows, phi, nu, tau_x = [], [], {}, {}
    tau_y = Term()
    for (f, e), H, alpha in zip(facs, Hs, alphas):
        cf = cfg(f)
        if cf == 0:
            inv = rc_inv(cfg, f**e)
            tau_y = tau_y + _rc_term(c, cfg).scale(inv * rc_rho(cfg, alpha))
            continue
        v = names.fresh("v")
        if cf == INF:
            slot_val = _rc_term(c, cfg)
            rows.append((v, f, e, slot_val))
            nu[v] = rc_rho(cfg, H)
            tau_x[v] = alpha
            continue
        pk = rc_projker(cfg, [f])
        q = min(e, cf)
        ker_c = _rc_term(c, cfg).scale(pk)
        if e <= cf:
            slot_val = ker_c
            if cf - q > 0:
                compat = ker_c.scale(rc_rho(cfg, f ** (cf - q)))
                if not compat.is_zero():
                    phi.append(compat)
        else:
            slot_val = Term()
            if not ker_c.is_zero():
                phi.append(ker_c)
        rows.append((v, f, q, slot_val))
        nu[v] = pk * rc_rho(cfg, H)
        tau_x[v] = alpha
        tau_y = tau_y + _rc_term(c, cfg).scale(rc_inv(cfg, f**e) * rc_rho(cfg, alpha))
    return rows, phi, nu, (tau_x, tau_y)


def _absorb(cfg, s: SeqSystem, mu: dict, eq: Term, names: _Names):
    """One step: S(x; mu) and eq = 0 into phi and S'(x'; mu'), with a witness."""
    field = cfg.field
    xs = s.variables
    xpart, ypart = _split_vars(eq, xs)
    if xpart.is_zero():
        phi = [] if ypart.is_zero() else [_rc_term(ypart, cfg)]
        ident = {v: Term({v: Poly.one(field)}) for v in xs}
        return s, mu, phi, ident, ident
    # matrix rows: system rows, then the equation; right-hand sides are parameter terms
    A, b = [], []
    for r in s.rows:
        A.append([r.f**r.q if v == r.var else Poly.zero(field) for v in xs])
        b.append(mu[r.param])
    A.append([xpart.coeff(v) if xpart.coeff(v) is not None else Poly.zero(field) for v in xs])
    b.append(-ypart)
    L, D, R, Ri = _diagonalize(A, field)
    nrows, ncols = len(A), len(xs)
    Lb = []
    for i in range(nrows):
        acc = Term()
        for j in range(nrows):
            if not L[i][j].is_zero():
                acc = acc + _rc_term(b[j], cfg).scale(rc_rho(cfg, L[i][j]))
        Lb.append(acc)
    rank = sum(1 for i in range(min(nrows, ncols)) if not D[i][i].is_zero())
    phi = [Lb[i] for i in range(rank, nrows) if not Lb[i].is_zero()]
    new_rows, new_li = [], []
    mu2 = {}
    nu, tau_cols = {}, []
    for j in range(ncols):
        # coordinate x''_j = sum_k Ri[j][k] x_k
        coord = Term({xs[k]: Ri[j][k] for k in range(ncols) if not Ri[j][k].is_zero()})
        if j < rank:
            d, c = D[j][j], Lb[j]
        elif cfg.is_algebraic:
            d, c = cfg.mipo(), Term()
        else:
            v = names.fresh("w")
            new_li.append(v)
            nu[v] = coord
            tau_cols.append(({v: Poly.one(field)}, Term()))
            continue
        rows, ph, nu_parts, (tx, ty) = _split_prime_powers(cfg, d, c, names)
        phi.extend(ph)
        for v, f, q, val in rows:
            slot = names.fresh("p")
            new_rows.append(Row(v, f, q, slot))
            mu2[slot] = val
        for v, r in nu_parts.items():
            nu[v] = _rc_term(coord, cfg).scale(r)
        tau_cols.append((tx, ty))
    # x = R x''
    tau = {}
    for i, v in enumerate(xs):
        acc = Term()
        for j in range(ncols):
            if R[i][j].is_zero():
                continue
            tx, ty = tau_cols[j]
            acc = acc + Term({w: R[i][j] * a for w, a in tx.items()})
            acc = acc + ty.scale(rc_rho(cfg, R[i][j]))
        tau[v] = acc
    s2 = SeqSystem(cfg, new_li, new_rows)
    return s2, mu2, phi, nu, tau


def ss_transform(s: SeqSystem, e, check_bounded: bool = True) -> TransformResult:
    """Absorb the equations of e into s, in input order."""
    cfg = s.cfg
    field = cfg.field
    eqs = _normalize_equations(e)
    mu = {r.param: Term({r.param: rc_one(cfg)}) for r in s.rows}
    ident = {v: Term({v: Poly.one(field)}) for v in s.variables}
    if not eqs:
        return TransformResult(s, [], mu, TransformWitness(dict(ident), dict(ident)), [])
    for t in eqs:
        if check_bounded and not term_bounded(_split_vars(t, s.variables)[0], s):
            raise UnboundedEquation(f"equation {term_print(t)} = 0 is not bounded by the system")
    used = set(s.variables) | set(s.params)
    for t in eqs:
        used |= t.vars()
    names = _Names(used)
    cur, nu_tot, tau_tot = s, dict(ident), dict(ident)
    phi_tot = []
    measures = []
    before = ss_rank_degree(s)
    for k, t in enumerate(eqs):
        # rewrite the equation in the current variables, then make it bounded
        t_cur = _subst(t, tau_tot)
        xpart, ypart = _split_vars(t_cur, cur.variables)
        t_cur = _euclid_term(xpart, cur)
        t_cur = _subst(t_cur, {r.param: mu[r.param] for r in cur.rows}) + ypart
        nontrivial = not _split_vars(t_cur, cur.variables)[0].is_zero()
        cur2, mu2, phi, nu, tau = _absorb(cfg, cur, mu, t_cur, names)
        phi_tot.extend(phi)
        nu_tot = {v: _subst(tm, nu_tot) for v, tm in nu.items()}
        tau_tot = {v: _subst(tm, tau) for v, tm in tau_tot.items()}
        after = ss_rank_degree(cur2)
        if after > before or (nontrivial and after == before):
            raise AssertionError(f"termination measure did not decrease: {before} -> {after}")
        measures.append(after)
        before = after
        cur, mu = cur2, mu2
    phi_tot = _dedupe_terms(phi_tot)
    return TransformResult(cur, phi_tot, mu, TransformWitness(nu_tot, tau_tot), measures)


def _dedupe_terms(ts: list) -> list:
    out, seen = [], set()
    for t in ts:
        if t.is_zero() or t in seen or (-t) in seen:
            continue
        seen.add(t)
        out.append(t)
    return out


# -- verification on finite models -------------------------------------


def _eval_term(t: Term, env: dict, m) -> np.ndarray:
    """Values of t for a batch of assignments: env maps names to arrays (N, dim)."""
    n = next(iter(env.values())).shape[0] if env else 1
    acc = np.zeros((n, m.dim), dtype=np.int64)
    for v, c in t.items.items():
        acc = acc + env[v] @ m.coeff_matrix(c).T
    return acc % m.p


def ss_witness_verify(s: SeqSystem, e, res: TransformResult, m, cap: int = 1 << 22) -> bool:
    """Check both directions of the transformation by exhaustive evaluation on m."""
    eqs = _normalize_equations(e)
    w = res.witness
    s2 = res.system
    xs = s.variables
    xs2 = s2.variables
    params = sorted(set(s.params) | {v for t in eqs for v in t.vars() if v not in xs})
    size = m.p**m.dim
    total = size ** (len(params) + max(len(xs), len(xs2)))
    if total > cap:
        raise SeqSysError(f"verification needs {total} assignments, above the cap {cap}")
    vecs = m.vectors()
    p = m.p

    def grid(names):
        if not names:
            return {}, 1
        idx = np.array(list(itertools.product(range(size), repeat=len(names))), dtype=np.int64)
        return {v: vecs[idx[:, i]] for i, v in enumerate(names)}, len(idx)

    def holds_orig(env):
        ok = None
        for r in s.rows:
            lhs = env[r.var] @ m.poly_matrix(r.f**r.q).T % p
            good = (lhs == env[r.param] % p).all(axis=1)
            ok = good if ok is None else ok & good
        for t in eqs:
            good = ~_eval_term(t, env, m).any(axis=1)
            ok = good if ok is None else ok & good
        return ok

    def holds_new(env):
        ok = None
        for t in res.phi:
            good = ~_eval_term(t, env, m).any(axis=1)
            ok = good if ok is None else ok & good
        for r in s2.rows:
            lhs = env[r.var] @ m.poly_matrix(r.f**r.q).T % p
            good = (lhs == _eval_term(res.mu[r.param], env, m)).all(axis=1)
            ok = good if ok is None else ok & good
        return ok

    penv, npar = grid(params)
    for pi in range(npar):
        base = {v: penv[v][pi : pi + 1] for v in params}
        # direction (1): every solution of S and E maps into S' and back
        xenv, n = grid(xs)
        env = {v: np.repeat(a, n, axis=0) for v, a in base.items()}
        env.update(xenv)
        sel = holds_orig(env)
        if sel is None:
            sel = np.ones(n, dtype=bool)
        if sel.any():
            sub = {v: a[sel] for v, a in env.items()}
            nu_vals = {v: _eval_term(w.nu[v], sub, m) for v in xs2}
            env2 = {**{v: a for v, a in sub.items() if v in params}, **nu_vals}
            ok2 = holds_new(env2)
            if ok2 is not None and not ok2.all():
                return False
            for v in xs:
                back = _eval_term(w.tau[v], env2, m)
                if not np.array_equal(back, sub[v] % p):
                    return False
        # direction (2): every solution of phi and S' maps into S and E and back
        yenv, n2 = grid(xs2)
        env = {v: np.repeat(a, n2, axis=0) for v, a in base.items()}
        env.update(yenv)
        sel = holds_new(env)
        if sel is None:
            sel = np.ones(n2, dtype=bool)
        if sel.any():
            sub = {v: a[sel] for v, a in env.items()}
            tau_vals = {v: _eval_term(w.tau[v], sub, m) for v in xs}
            env1 = {**{v: a for v, a in sub.items() if v in params}, **tau_vals}
            ok1 = holds_orig(env1)
            if ok1 is not None and not ok1.all():
                return False
            for v in xs2:
                back = _eval_term(w.nu[v], env1, m)
                if not np.array_equal(back, sub[v] % p):
                    return False
    return True


def ss_solution_count(s: SeqSystem, eqs, env_params: dict, m) -> int:
    """Number of solutions of s and the equations for fixed parameter values."""
    eqs = _normalize_equations(eqs)
    xs = s.variables
    size = m.p**m.dim
    vecs = m.vectors()
    idx = np.array(list(itertools.product(range(size), repeat=len(xs))), dtype=np.int64)
    env = {v: np.repeat(np.asarray(a).reshape(1, -1), len(idx), axis=0) for v, a in env_params.items()}
    for i, v in enumerate(xs):
        env[v] = vecs[idx[:, i]]
    ok = np.ones(len(idx), dtype=bool)
    for r in s.rows:
        lhs = env[r.var] @ m.poly_matrix(r.f**r.q).T % m.p
        ok &= (lhs == env[r.param] % m.p).all(axis=1)
    for t in eqs:
        ok &= ~_eval_term(t, env, m).any(axis=1)
    return int(ok.sum())


# -- text and JSON -----------------------------------------------------


def ss_print(s: SeqSystem) -> str:
    parts = [str(r) for r in s.rows]
    if s.li_vars:
        parts.append("li: " + ", ".join(s.li_vars))
    return "S: " + "; ".join(parts) if parts else "S:"


_ROW = re.compile(r"\s*\((?P<f>[^()]*)\)\^(?P<q>\d+)\s*\[(?P<x>[^\]]+)\]\s*=\s*(?P<y>[A-Za-z_][A-Za-z0-9_']*)\s*$")


def ss_parse(text: str, cfg: KernelConfig) -> SeqSystem:
    text = text.strip()
    if not text.startswith("S:"):
        raise SeqSysError("a system starts with 'S:'")
    body = text[2:].strip()
    rows, li = [], []
    if body:
        for part in body.split(";"):
            part = part.strip()
            if not part:
                continue
            if part.startswith("li:"):
                li.extend(v.strip() for v in part[3:].split(",") if v.strip())
                continue
            mt = _ROW.match(part)
            if not mt:
                raise SeqSysError(f"cannot parse row {part!r}")
            try:
                f, end = poly_parse_prefix(mt.group("f"), 0, cfg.field)
            except PolySyntaxError as e:
                raise SeqSysError(f"bad polynomial in row {part!r}: {e}") from None
            if end != len(mt.group("f").rstrip()):
                raise SeqSysError(f"bad polynomial in row {part!r}")
            rows.append(Row(mt.group("x").strip(), f, int(mt.group("q")), mt.group("y")))
    return SeqSystem(cfg, li, rows)


def ss_to_json(s: SeqSystem) -> dict:
    return {
        "li": list(s.li_vars),
        "rows": [{"var": r.var, "f": str(r.f), "q": r.q, "param": r.param} for r in s.rows],
    }


def ss_from_json(d: dict, cfg: KernelConfig) -> SeqSystem:
    rows = [Row(r["var"], Poly.parse(r["f"], cfg.field), int(r["q"]), r["param"]) for r in d.get("rows", [])]
    return SeqSystem(cfg, list(d.get("li", [])), rows)


def ss_dumps(s: SeqSystem) -> str:
    return json.dumps(ss_to_json(s), sort_keys=True)
