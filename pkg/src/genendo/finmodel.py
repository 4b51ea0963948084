"""Finite-dimensional models over F_p.

A FinModel is a matrix theta acting on F_p^dim together with the kernel
configuration it is meant to model.  Models are usually built from blocks:
companion matrices of f^j, stacked block-diagonally.

The second half of the file is the stabilized truth oracle.  It evaluates a
formula in finite models that approximate an existentially closed model of
the configuration, component by component (see ``fm_stabilized_truth``).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import fpmat
from .formula import (
    And,
    Atom,
    Exists,
    Forall,
    Formula,
    Not,
    Or,
    Term,
    dnf,
    free_vars,
    quantifier_depth,
)
from .kernelconfig import INFINITY, ZERO, KernelConfig, kc_mipo
from .polyring import INF, FieldSpec, Poly, irreducibles, poly_factor, poly_valuation
from .rcring import RcElem, rc_eval_matrix


class ModelError(ValueError):
    pass


class NotImageComplete(ModelError):
    pass


class EnumerationCapExceeded(ModelError):
    pass


# -- the model type ----------------------------------------------------


@dataclass(frozen=True)
class Block:
    poly: Poly  # monic irreducible
    exponent: int
    multiplicity: int = 1
    filler: bool = False

    @property
    def size(self) -> int:
        return self.poly.deg * self.exponent * self.multiplicity

    def to_json(self) -> dict:
        return {"f": str(self.poly), "j": self.exponent, "mult": self.multiplicity, "filler": self.filler}


class FinModel:
    def __init__(
        self,
        field: FieldSpec,
        theta,
        cfg: KernelConfig,
        blocks: list | None = None,
        support: frozenset | None = None,
    ):
        if not field.p:
            raise ModelError("finite models need a prime field")
        theta = fpmat.asmat(theta, field.p)
        if theta.ndim != 2 or theta.shape[0] != theta.shape[1] or theta.shape[0] == 0:
            raise ModelError("theta must be a nonempty square matrix")
        self.field = field
        self.theta = theta
        self.cfg = cfg
        self.blocks = list(blocks) if blocks is not None else None
        self.support = frozenset(support) if support is not None else None
        self._mats: dict = {}
        self._proj: dict = {}

    @property
    def dim(self) -> int:
        return self.theta.shape[0]

    @property
    def p(self) -> int:
        return self.field.p

    def poly_matrix(self, f: Poly) -> np.ndarray:
        m = self._mats.get(f)
        if m is None:
            m = fpmat.poly_at(f, self.theta)
            self._mats[f] = m
        return m

    def coeff_matrix(self, c) -> np.ndarray:
        if isinstance(c, RcElem):
            key = ("rc", c)
            m = self._mats.get(key)
            if m is None:
                m = rc_eval_matrix(c, self)
                self._mats[key] = m
            return m
        return self.poly_matrix(c)

    def kernel_projector(self, f: Poly, c) -> np.ndarray:
        """Projection onto Ker(f^c) along Im(f^c)."""
        key = (f, c)
        if key not in self._proj:
            self._proj[key] = _kernel_projector(self, f ** int(c))
        return self._proj[key]

    def vectors(self) -> np.ndarray:
        return fpmat.vectors(self.dim, self.p)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "dim": self.dim,
            "theta": self.theta.tolist(),
            "blocks": [b.to_json() for b in self.blocks] if self.blocks is not None else [],
            "cfg": self.cfg.to_json(),
            "support": sorted(str(f) for f in self.support) if self.support is not None else None,
        }

    @classmethod
    def from_json(cls, d: dict) -> "FinModel":
        field = FieldSpec.prime(int(d["p"]))
        cfg = KernelConfig.from_json(d["cfg"], validate=False) if "cfg" in d else KernelConfig.c_infinity(field)
        blocks = [
            Block(Poly.parse(b["f"], field), int(b["j"]), int(b.get("mult", 1)), bool(b.get("filler", False)))
            for b in d.get("blocks", [])
        ]
        sup = d.get("support")
        support = frozenset(Poly.parse(s, field) for s in sup) if sup is not None else None
        theta = np.array(d["theta"], dtype=np.int64)
        if theta.shape != (int(d["dim"]), int(d["dim"])):
            raise ModelError("theta shape does not match dim")
        return cls(field, theta, cfg, blocks or None, support)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def __repr__(self) -> str:
        return f"FinModel(p={self.p}, dim={self.dim})"


def _kernel_projector(m: FinModel, g: Poly) -> np.ndarray:
    p = m.p
    gm = m.poly_matrix(g)
    ker = fpmat.nullspace(gm, p)
    img = fpmat.colspace(gm, p)
    basis = np.concatenate([ker, img], axis=1)
    if basis.shape[1] != m.dim or fpmat.rank(basis, p) != m.dim:
        raise NotImageComplete(f"V is not Ker({g}) + Im({g}) in this model")
    inv = fpmat.inverse(basis, p)
    sel = np.zeros((m.dim, m.dim), dtype=np.int64)
    for i in range(ker.shape[1]):
        sel[i, i] = 1
    return fpmat.matmul(fpmat.matmul(basis, sel, p), inv, p)


# -- construction ------------------------------------------------------


def _as_blocks(spec) -> list[Block]:
    out = []
    for b in spec:
        if isinstance(b, Block):
            out.append(b)
        elif len(b) == 2:
            out.append(Block(b[0], int(b[1])))
        elif len(b) == 3:
            out.append(Block(b[0], int(b[1]), int(b[2])))
        else:
            out.append(Block(b[0], int(b[1]), int(b[2]), bool(b[3])))
    return out


def _check_block(cfg: KernelConfig, b: Block, support) -> None:
    f = b.poly
    if f.field != cfg.field:
        raise ModelError(f"block {f} is over the wrong field")
    if not f.is_monic() or poly_factor(f).factors != {f: 1}:
        raise ModelError(f"block polynomial {f} is not a monic irreducible")
    if b.exponent < 1 or b.multiplicity < 1:
        raise ModelError("block exponent and multiplicity must be positive")
    c = cfg(f)
    relevant = cfg.is_algebraic or f in cfg.entries or (support is not None and f in support)
    if b.filler:
        if cfg.is_algebraic:
            raise ModelError("algebraic configurations admit no filler blocks")
        if support is not None and f in support:
            raise ModelError(f"filler {f} lies in the support")
        if f in cfg.entries:
            raise ModelError(f"filler {f} is constrained by the configuration")
        return
    if not relevant and support is not None:
        raise ModelError(f"block {f} lies outside the support; mark it as a filler")
    if c == 0:
        raise ModelError(f"C({f}) = 0: no block for this factor is allowed")
    if c != INF and b.exponent > c:
        raise ModelError(f"block ({f}, {b.exponent}) exceeds C({f}) = {c}")


def fm_build(cfg: KernelConfig, spec, support=None) -> FinModel:
    """Block-diagonal model from (f, j[, multiplicity[, filler]]) entries."""
    blocks = _as_blocks(spec)
    if not blocks:
        raise ModelError("a model needs at least one block")
    support = frozenset(support) if support is not None else None
    for b in blocks:
        _check_block(cfg, b, support)
    mats = []
    for b in blocks:
        comp = fpmat.companion(b.poly**b.exponent)
        mats.extend([comp] * b.multiplicity)
    theta = fpmat.block_diag(mats)
    return FinModel(cfg.field, theta, cfg, blocks, support)


def fm_extend(m: FinModel, extra_blocks) -> FinModel:
    extra = _as_blocks(extra_blocks)
    for b in extra:
        _check_block(m.cfg, b, m.support)
    mats = [m.theta]
    for b in extra:
        mats.extend([fpmat.companion(b.poly**b.exponent)] * b.multiplicity)
    blocks = (m.blocks or []) + extra if m.blocks is not None else None
    return FinModel(m.field, fpmat.block_diag(mats), m.cfg, blocks, m.support)


def fm_dumps(m: FinModel) -> str:
    return m.dumps()


def fm_loads(text: str) -> FinModel:
    return FinModel.from_json(json.loads(text))


# -- checking ----------------------------------------------------------


def _factors_to_check(m: FinModel) -> list[Poly]:
    from .fpmat import minimal_polynomial

    mp = minimal_polynomial(m.theta, m.field)
    fs = set(poly_factor(mp).factors) if mp.deg > 0 else set()
    if m.cfg.is_transcendental and m.support is not None:
        fs = {f for f in fs if f in m.support}
    fs |= set(m.cfg.entries)
    return sorted(fs, key=Poly.sort_key)


def fm_check(m: FinModel) -> dict:
    """Exact kernel and image chain checks per relevant factor.

    For transcendental configurations built with a support, factors outside
    the support (filler blocks) are not checked.
    """
    p = m.p
    per = {}
    endo = True
    complete = True
    for f in _factors_to_check(m):
        c = m.cfg(f)
        if c == INF:
            per[str(f)] = {"C": "inf", "ok": True}
            continue
        a = m.poly_matrix(f**c)
        b = m.poly_matrix(f ** (c + 1))
        ker_c = m.dim - fpmat.rank(a, p) if c else 0
        ker_c1 = fpmat.nullspace(b, p).shape[1]
        rk_c = fpmat.rank(a, p)
        rk_c1 = fpmat.colspace(b, p).shape[1]
        k_ok = ker_c == ker_c1
        i_ok = rk_c == rk_c1
        per[str(f)] = {"C": c, "ker_dims": [ker_c, ker_c1], "im_ranks": [rk_c, rk_c1], "ok": k_ok and i_ok}
        endo &= k_ok
        complete &= i_ok
    if m.cfg.is_algebraic:
        endo = not m.poly_matrix(kc_mipo(m.cfg)).any()
    return {"is_C_endo": bool(endo), "is_image_complete": bool(complete), "per_factor": per}


def fm_decompose(m: FinModel, fs) -> dict:
    """Bases of Im(F^C) and Ker(f^C) for f in F, plus the projection matrices."""
    p = m.p
    fs = sorted(set(fs), key=Poly.sort_key)
    for f in fs:
        c = m.cfg(f)
        if not (0 < c < INF):
            raise ModelError(f"{f} does not satisfy 0 < C(f) < inf")
    big = Poly.one(m.field)
    for f in fs:
        big = big * f ** m.cfg(f)
    im = fpmat.colspace(m.poly_matrix(big), p)
    kers = {f: fpmat.nullspace(m.poly_matrix(f ** m.cfg(f)), p) for f in fs}
    parts = [im] + [kers[f] for f in fs]
    basis = np.concatenate(parts, axis=1)
    if basis.shape[1] != m.dim or fpmat.rank(basis, p) != m.dim:
        raise NotImageComplete("V is not the direct sum of Im(F^C) and the kernels")
    inv = fpmat.inverse(basis, p)
    projs = {}
    start = 0
    names = ["im"] + fs
    for name, part in zip(names, parts):
        sel = np.zeros((m.dim, m.dim), dtype=np.int64)
        for i in range(start, start + part.shape[1]):
            sel[i, i] = 1
        projs[name] = fpmat.matmul(fpmat.matmul(basis, sel, p), inv, p)
        start += part.shape[1]
    return {"im_basis": im, "ker_bases": kers, "projectors": projs}


# -- brute-force evaluation --------------------------------------------

DEFAULT_ENUM_CAP = 1 << 24


def _term_matrices(t: Term, m: FinModel) -> list:
    return [(v, m.coeff_matrix(c)) for v, c in t.items.items()]


def _eval(phi: Formula, m: FinModel, env: dict, batch: int, ranges, depth: int) -> np.ndarray:
    p = m.p
    if isinstance(phi, Atom):
        val = np.zeros((batch, m.dim), dtype=np.int64)
        for v, mat in _term_matrices(phi.lhs - phi.rhs, m):
            val = val + env[v] @ mat.T
        zero = ~(val % p).any(axis=1)
        return ~zero if phi.neg else zero
    if isinstance(phi, Not):
        return ~_eval(phi.body, m, env, batch, ranges, depth)
    if isinstance(phi, And):
        out = np.ones(batch, dtype=bool)
        for c in phi.items:
            out &= _eval(c, m, env, batch, ranges, depth)
        return out
    if isinstance(phi, Or):
        out = np.zeros(batch, dtype=bool)
        for c in phi.items:
            out |= _eval(c, m, env, batch, ranges, depth)
        return out
    dom = ranges(phi.var, depth + 1) if ranges is not None else m.vectors()
    k = dom.shape[0]
    new_env = {v: np.repeat(a, k, axis=0) for v, a in env.items()}
    new_env[phi.var] = np.tile(dom, (batch, 1))
    body = _eval(phi.body, m, new_env, batch * k, ranges, depth + 1).reshape(batch, k)
    return body.any(axis=1) if isinstance(phi, Exists) else body.all(axis=1)


def _enum_cost(phi: Formula, size: int) -> int:
    if isinstance(phi, Atom):
        return 1
    if isinstance(phi, Not):
        return _enum_cost(phi.body, size)
    if isinstance(phi, (And, Or)):
        return max(_enum_cost(c, size) for c in phi.items)
    return size * _enum_cost(phi.body, size)


def fm_eval(phi: Formula, m: FinModel, assignment: dict | None = None, cap: int = DEFAULT_ENUM_CAP, ranges=None) -> bool:
    """Truth of phi at one assignment (var -> vector) by exhaustive enumeration.

    ``ranges(var, depth)`` may restrict the domain of a quantified variable.
    """
    assignment = assignment or {}
    missing = free_vars(phi) - set(assignment)
    if missing:
        raise ModelError(f"unassigned free variables: {sorted(missing)}")
    if ranges is None and _enum_cost(phi, m.p**m.dim) > cap:
        raise EnumerationCapExceeded(f"enumeration exceeds the cap of {cap}")
    env = {v: fpmat.asmat(np.asarray(a).reshape(1, m.dim), m.p) for v, a in assignment.items()}
    return bool(_eval(phi, m, env, 1, ranges, 0)[0])


def fm_eval_all(phi: Formula, m: FinModel, cap: int = DEFAULT_ENUM_CAP) -> tuple[list, np.ndarray]:
    """Truth table over all assignments of the free variables (sorted by name).

    The table has one axis of length p^dim per free variable, indexed by the
    base-p code of the vector (see fpmat.encode).
    """
    fv = sorted(free_vars(phi))
    size = m.p**m.dim
    if size ** len(fv) * _enum_cost(phi, size) > cap:
        raise EnumerationCapExceeded(f"enumeration exceeds the cap of {cap}")
    vs = m.vectors()
    batch = size ** len(fv)
    env = {}
    for i, v in enumerate(fv):
        idx = np.arange(batch)
        code = (idx // size ** (len(fv) - 1 - i)) % size
        env[v] = vs[code]
    out = _eval(phi, m, env, batch, None, 0)
    return fv, out.reshape((size,) * len(fv)) if fv else out


# ======================================================================
# Stabilized truth oracle
# ======================================================================
#
# The target is truth in an existentially closed model M of the
# configuration.  M splits into components on which theta acts through one
# local ring each:
#
#   * free blocks K[X]/(f^C(f)) (infinitely many copies) for 0 < C(f) < inf
#     and for the factors of an algebraic MiPo;
#   * a torsion-free part, approximated by copies of a field K[X]/(g) for a
#     filler irreducible g outside the support;
#   * for C(g) = inf and g in the support, a divisible g-torsion part,
#     approximated by truncated blocks K[X]/(g^J) with J = d * D + 1 (d the
#     quantifier depth, D the largest g-valuation of a coefficient).  To make
#     the truncation invisible, a variable bound at nesting depth k only
#     ranges over Im(g^((d - k) * D)), so every division the formula can ask
#     for is available one level further in.
#
# A formula over a direct sum is evaluated without enumerating the product:
# every subformula is represented by, per component, a "type" for each tuple
# of the variables in scope, plus a boolean tensor over the product of the
# type sets.  Outer quantifiers enumerate the quantified variable inside each
# component over a set of orbit representatives (the k-th variable in scope
# is r_1 e_1 + ... + r_(k-1) e_(k-1) + g^v e_k with every r_i taken modulo
# g^v), innermost quantifiers are eliminated exactly by linear algebra over
# the whole component.  The window index n only changes the number of copies.


class Unstable(ModelError):
    """The oracle cannot give a verdict for this formula."""


@dataclass
class OracleComponent:
    kind: str  # "free", "filler" or "divisible"
    base: Poly
    exponent: int
    step: int = 0  # level step D for divisible components
    depth: int = 0

    def __post_init__(self):
        self.modulus = self.base**self.exponent
        self.d = self.modulus.deg
        self.p = self.base.field.p
        self.theta = fpmat.companion(self.modulus)
        self._mats: dict = {}
        self._level: dict = {}
        self._res: dict = {}

    @property
    def name(self) -> str:
        return f"{self.kind}:{self.base}^{self.exponent}"

    def mat(self, f: Poly) -> np.ndarray:
        m = self._mats.get(f)
        if m is None:
            m = fpmat.poly_at(f, self.theta)
            self._mats[f] = m
        return m

    def shift(self, level: int) -> int:
        """Exponent m with the variable at this level ranging over Im(g^m)."""
        if self.kind != "divisible":
            return 0
        return max(0, (self.depth - level) * self.step)

    def level_basis(self, level: int) -> np.ndarray:
        m = self.shift(level)
        if m not in self._level:
            self._level[m] = fpmat.colspace(self.mat(self.base**m), self.p)
        return self._level[m]

    def exponents(self, level: int) -> range:
        """Valuations v of the new coordinate g^v e_k (v = exponent means zero)."""
        return range(self.shift(level), self.exponent + 1)

    def pivot_of(self, f: Poly) -> np.ndarray:
        """The vector f * 1 of the cyclic block."""
        one = np.zeros(self.d, dtype=np.int64)
        one[0] = 1
        return self.mat(f) @ one % self.p

    def pivot(self, v: int) -> np.ndarray:
        return self.pivot_of(self.base**v)

    def residues(self, level: int, v: int) -> np.ndarray:
        """Representatives of Im(g^m) modulo g^v, as rows (m the level shift).

        Adding c * e_k to an earlier basis vector fixes every earlier variable
        and moves the new one by c * g^v, so earlier coordinates only matter
        modulo g^v.
        """
        key = (level, v)
        if key not in self._res:
            m = self.shift(level)
            k = (v - m) * self.base.deg
            if k == 0:
                self._res[key] = np.zeros((1, self.d), dtype=np.int64)
            else:
                gm = self.base**m
                cols = [self.pivot_of(gm * Poly.monomial(i, self.base.field)) for i in range(k)]
                self._res[key] = fpmat.span_vectors(np.stack(cols, axis=1), self.p)
        return self._res[key]

    def block(self, copies: int) -> Block:
        return Block(self.base, self.exponent, copies, self.kind == "filler")


@dataclass
class OracleSetup:
    cfg: KernelConfig
    comps: list
    copies: int
    depth: int
    positions: dict  # var -> 1-based position of the coordinate it may introduce
    levels: dict  # var -> nesting level (0 for free variables)

    def model(self) -> FinModel:
        blocks = [c.block(self.copies) for c in self.comps]
        support = frozenset(c.base for c in self.comps if c.kind != "filler")
        mats = []
        for c in self.comps:
            mats.extend([c.theta] * self.copies)
        return FinModel(self.cfg.field, fpmat.block_diag(mats), self.cfg, blocks, support | set(self.cfg.entries))


def _unique_rows(bits: np.ndarray):
    """np.unique(bits, axis=0, return_inverse=True) for boolean rows, via packed keys."""
    if bits.shape[1] == 0 or bits.shape[1] > 62:
        rows, inv = np.unique(bits, axis=0, return_inverse=True)
        return rows, inv.reshape(-1)
    key = bits.astype(np.int64) @ (np.int64(1) << np.arange(bits.shape[1], dtype=np.int64))
    _, first, inv = np.unique(key, return_index=True, return_inverse=True)
    return bits[first], inv.reshape(-1)


class _Sem:
    """Per-component type arrays over the domain of scope and a truth tensor.

    scope lists the variables the value depends on, in position order.
    """

    __slots__ = ("scope", "types", "tensor")

    def __init__(self, scope: list, types: list, tensor: np.ndarray):
        self.scope = scope
        self.types = types
        self.tensor = tensor


def _normalize(sem: _Sem) -> _Sem:
    types = []
    tensor = sem.tensor
    for c, t in enumerate(sem.types):
        used, inv = np.unique(t, return_inverse=True)
        tensor = np.take(tensor, used, axis=c)
        # merge types with identical behaviour
        moved = np.moveaxis(tensor, c, 0).reshape(len(used), -1)
        rows, first, merge = np.unique(moved, axis=0, return_index=True, return_inverse=True)
        merge = merge.reshape(-1)
        order = np.argsort(first)
        rank_of = np.empty_like(order)
        rank_of[order] = np.arange(len(order))
        tensor = np.take(tensor, first[order], axis=c)
        types.append(rank_of[merge][inv.reshape(-1)])
    return _Sem(sem.scope, types, tensor)


def _combine(a: _Sem, b: _Sem, op, ev) -> _Sem:
    scope = ev.merge_scopes(a.scope, b.scope)
    types = []
    ia, ib = [], []
    for c, (ta, tb) in enumerate(zip(a.types, b.types)):
        ta = ev._spread(c, scope, a.scope, ta)
        tb = ev._spread(c, scope, b.scope, tb)
        key = ta.astype(np.int64) * (int(tb.max(initial=0)) + 1) + tb
        uniq, inv = np.unique(key, return_inverse=True)
        nb = int(tb.max(initial=0)) + 1
        ia.append(uniq // nb)
        ib.append(uniq % nb)
        types.append(inv.reshape(-1))
    ta_t = a.tensor[np.ix_(*ia)] if ia else a.tensor
    tb_t = b.tensor[np.ix_(*ib)] if ib else b.tensor
    return _normalize(_Sem(scope, types, op(ta_t, tb_t)))


_TENSOR_CAP = 4_000_000
_FULL_CAP = 8_000_000
_CHUNK = 1 << 15


class _Evaluator:
    def __init__(self, setup: OracleSetup, dom_cap: int = 4_000_000):
        self.s = setup
        self.comps = setup.comps
        self.dom_cap = dom_cap
        self._wlog: dict = {}
        self._img: dict = {}

    # -- domains ------------------------------------------------------

    def wlog(self, c: int, var: str) -> np.ndarray:
        """Representatives for var in component c, shape (n, K, d)."""
        key = (c, var)
        if key in self._wlog:
            return self._wlog[key]
        comp = self.comps[c]
        pos = self.s.positions[var]
        lvl = self.s.levels[var]
        K = self.s.copies
        chunks = []
        for v in comp.exponents(lvl):
            elems = comp.residues(lvl, v)
            idx = np.indices((len(elems),) * (pos - 1)).reshape(pos - 1, -1) if pos > 1 else np.zeros((0, 1), dtype=np.int64)
            out = np.zeros((idx.shape[1], K, comp.d), dtype=np.int64)
            for i in range(pos - 1):
                out[:, i, :] = elems[idx[i]]
            out[:, pos - 1, :] = comp.pivot(v)
            chunks.append(out)
        out = np.concatenate(chunks)
        self._wlog[key] = out
        return out

    def dom_sizes(self, c: int, scope: list) -> list[int]:
        return [len(self.wlog(c, v)) for v in scope]

    def merge_scopes(self, a: list, b: list) -> list:
        return sorted(set(a) | set(b), key=lambda v: self.s.positions[v])

    def _spread(self, c: int, scope: list, sub: list, arr: np.ndarray) -> np.ndarray:
        """Per-point data over the sub-scope, repeated over the full scope domain."""
        if sub == scope:
            return arr
        sizes = self.dom_sizes(c, scope)
        total = int(np.prod(sizes)) if sizes else 1
        if total > _FULL_CAP:
            raise Unstable(f"component domain of size {total} exceeds the cap")
        shape = [len(self.wlog(c, v)) if v in sub else 1 for v in scope]
        out = np.broadcast_to(arr.reshape(shape), sizes)
        return np.ascontiguousarray(out).reshape(total)

    # -- term values --------------------------------------------------

    def npoints(self, c: int, scope: list) -> int:
        total = int(np.prod(self.dom_sizes(c, scope))) if scope else 1
        if total > self.dom_cap:
            raise Unstable(f"component domain of size {total} exceeds the cap")
        return total

    def chunks(self, c: int, scope: list):
        total = self.npoints(c, scope)
        for lo in range(0, total, _CHUNK):
            yield lo, min(total, lo + _CHUNK)

    def values(self, c: int, scope: list, t: Term, lo: int = 0, hi: int | None = None) -> np.ndarray:
        """Values of t at the scope-domain points lo..hi of component c, shape (n, K, d)."""
        comp = self.comps[c]
        sizes = self.dom_sizes(c, scope)
        if hi is None:
            hi = self.npoints(c, scope)
        idx = np.arange(lo, hi)
        coords = np.unravel_index(idx, sizes) if sizes else ()
        acc = np.zeros((hi - lo, self.s.copies, comp.d), dtype=np.int64)
        for v, f in t.items.items():
            if not isinstance(f, Poly):
                raise ModelError("the oracle evaluates formulas with polynomial coefficients only")
            key = (c, v, f)
            w = self._img.get(key)
            if w is None:
                w = self._img[key] = self.wlog(c, v) @ comp.mat(f).T
            acc += w[coords[scope.index(v)]]
        return acc % comp.p

    # -- formulas -----------------------------------------------------

    def literal(self, scope: list, a: Atom) -> _Sem:
        t = a.lhs - a.rhs
        types = []
        sub = [v for v in scope if v in t.items]
        for c in range(len(self.comps)):
            parts = []
            for lo, hi in self.chunks(c, sub):
                vals = self.values(c, sub, t, lo, hi)
                parts.append(~vals.reshape(len(vals), -1).any(axis=1))
            types.append(np.concatenate(parts).astype(np.int64))
        tensor = np.zeros((2,) * len(self.comps), dtype=bool)
        tensor[(1,) * len(self.comps)] = True
        if a.neg:
            tensor = ~tensor
        return _normalize(_Sem(sub, types, tensor))

    def eval(self, phi: Formula, scope: list) -> _Sem:
        if isinstance(phi, Atom):
            return self.literal(scope, phi)
        if isinstance(phi, Not):
            s = self.eval(phi.body, scope)
            return _Sem(s.scope, s.types, ~s.tensor)
        if isinstance(phi, (And, Or)):
            op = np.logical_and if isinstance(phi, And) else np.logical_or
            acc = self.eval(phi.items[0], scope)
            for c in phi.items[1:]:
                acc = _combine(acc, self.eval(c, scope), op, self)
                if acc.tensor.size > _TENSOR_CAP:
                    raise Unstable("type tensor too large")
            return acc
        universal = isinstance(phi, Forall)
        inner = scope + [phi.var]
        if quantifier_depth(phi.body) == 0:
            return self.eliminate(phi.body, scope, phi.var, universal)
        body = self.eval(phi.body, inner)
        if phi.var not in body.scope:
            return body
        rest = body.scope[:-1]
        assert body.scope[-1] == phi.var
        outer = [int(np.prod(self.dom_sizes(c, rest))) for c in range(len(self.comps))]
        return self._project_mixed(body, outer, phi.var, universal)

    def _project_mixed(self, body: _Sem, outer: list, var: str, universal: bool) -> _Sem:
        tensor = ~body.tensor if universal else body.tensor
        types = []
        for c, t in enumerate(body.types):
            ntypes = tensor.shape[c]
            t2 = t.reshape(outer[c], len(self.wlog(c, var)))
            member = np.zeros((t2.shape[0], ntypes), dtype=bool)
            member[np.arange(t2.shape[0])[:, None], t2] = True
            rows, inv = _unique_rows(member)
            types.append(inv.reshape(-1))
            tensor = np.moveaxis(np.tensordot(rows.astype(np.int64), tensor.astype(np.int64), axes=([1], [c])), 0, c) > 0
        if universal:
            tensor = ~tensor
        return _normalize(_Sem(body.scope[:-1], types, tensor))

    def eliminate(self, body: Formula, scope: list, x: str, universal: bool) -> _Sem:
        """Exact elimination of an innermost quantifier."""
        target = Not(body) if universal else body
        clauses = dnf(target)
        ncomp = len(self.comps)
        if not clauses or clauses == [[]]:
            types = [np.zeros(1, dtype=np.int64) for c in range(ncomp)]
            value = universal if not clauses else not universal
            return _Sem([], types, np.full((1,) * ncomp, value))
        bits_per_comp = []
        layout = []  # per clause: (e_index, [g_index...])
        used = set()
        for lits in clauses:
            for a in lits:
                used |= (a.lhs - a.rhs).vars()
        sub = [v for v in scope if v in used]
        for c in range(ncomp):
            cols = []
            lay = []
            for lits in clauses:
                e_col, g_cols = self._clause_bits(c, sub, x, lits, cols)
                lay.append((e_col, g_cols))
            layout = lay
            bits_per_comp.append(np.stack(cols, axis=1) if cols else np.zeros((1, 0), dtype=bool))
        types = []
        rows_per_comp = []
        for bits in bits_per_comp:
            rows, inv = _unique_rows(bits)
            types.append(inv.reshape(-1))
            rows_per_comp.append(rows)
        shape = tuple(len(r) for r in rows_per_comp)
        if int(np.prod(shape)) > _TENSOR_CAP:
            raise Unstable("type tensor too large")

        def axis_view(c: int, col: int) -> np.ndarray:
            v = rows_per_comp[c][:, col]
            sh = [1] * ncomp
            sh[c] = len(v)
            return v.reshape(sh)

        tensor = np.zeros(shape, dtype=bool)
        for e_col, g_cols in layout:
            term = np.ones(shape, dtype=bool)
            for c in range(ncomp):
                term = term & axis_view(c, e_col)
            for g in g_cols:
                anyc = np.zeros(shape, dtype=bool)
                for c in range(ncomp):
                    anyc = anyc | axis_view(c, g)
                term = term & anyc
            tensor |= term
        if universal:
            tensor = ~tensor
        return _normalize(_Sem(sub, types, tensor))

    def _clause_bits(self, c: int, scope: list, x: str, lits: list, cols: list):
        comp = self.comps[c]
        p = comp.p
        N = self.s.copies
        basis = comp.level_basis(self.s.levels[x])
        r = basis.shape[1]
        eqs = [a for a in lits if not a.neg]
        neqs = [a for a in lits if a.neg]

        def split(a: Atom):
            t = a.lhs - a.rhs
            cx = t.coeff(x)
            amat = (comp.mat(cx) @ basis) % p if cx is not None else np.zeros((comp.d, r), dtype=np.int64)
            return amat, t.without(x)

        def vals(rest: Term, lo: int, hi: int) -> np.ndarray:
            if rest.items:
                return self.values(c, scope, rest, lo, hi)
            return np.zeros((hi - lo, N, comp.d), dtype=np.int64)

        eq_parts = [split(a) for a in eqs]
        neq_parts = [split(a) for a in neqs]
        A = np.concatenate([e[0] for e in eq_parts], axis=0) if eq_parts else np.zeros((0, r), dtype=np.int64)
        rank0 = fpmat.rank(A, p) if A.size else 0
        slack = 0.0
        extends = []
        for amat, _ in neq_parts:
            A1 = np.concatenate([A, amat], axis=0)
            rank1 = fpmat.rank(A1, p) if A1.size else 0
            extends.append(rank1 > rank0)
            if rank1 > rank0:
                slack += float(p) ** (-(rank1 - rank0) * N)
        if slack >= 1.0:
            raise Unstable("too few copies to rule out covering by cosets")
        solv_parts = []
        g_parts = [[] for _ in neqs]
        for lo, hi in self.chunks(c, scope):
            n = hi - lo
            B = np.concatenate([vals(rest, lo, hi) for _, rest in eq_parts], axis=2) if eq_parts else np.zeros((n, N, 0), dtype=np.int64)
            solv = self._solvable(A, B, p, n)
            solv_parts.append(solv)
            for k, (amat, rest) in enumerate(neq_parts):
                if extends[k]:
                    g_parts[k].append(solv)
                else:
                    A1 = np.concatenate([A, amat], axis=0)
                    B1 = np.concatenate([B, vals(rest, lo, hi)], axis=2)
                    g_parts[k].append(solv & ~self._solvable(A1, B1, p, n))
        cols.append(np.concatenate(solv_parts))
        e_col = len(cols) - 1
        g_cols = []
        for parts in g_parts:
            cols.append(np.concatenate(parts))
            g_cols.append(len(cols) - 1)
        return e_col, g_cols

    @staticmethod
    def _solvable(A: np.ndarray, B: np.ndarray, p: int, npts: int) -> np.ndarray:
        """Per point: is A x = -b solvable in every copy?"""
        if A.shape[0] == 0:
            return np.ones(npts, dtype=bool)
        left = fpmat.left_nullspace(A, p)
        if left.shape[0] == 0:
            return np.ones(npts, dtype=bool)
        r = B.shape[2]
        if r * (p - 1) ** 2 < 1 << 50:
            # entries stay below 2^53, so the float product is exact and uses BLAS
            chk = np.fmod(B.reshape(-1, r).astype(np.float64) @ left.T.astype(np.float64), p)
        else:
            chk = np.einsum("kr,nqr->nqk", left, B) % p
        return ~chk.reshape(npts, -1).any(axis=1)


# -- setup -------------------------------------------------------------


def formula_polys(phi: Formula) -> list[Poly]:
    """Every nonzero polynomial coefficient occurring in phi."""
    out = []

    def walk(f):
        if isinstance(f, Atom):
            for t in (f.lhs, f.rhs, f.lhs - f.rhs):
                for c in t.items.values():
                    if isinstance(c, Poly):
                        out.append(c)
                    else:
                        out.extend([c.num, c.den, *c.corr.values()])
        elif isinstance(f, Not):
            walk(f.body)
        elif isinstance(f, (And, Or)):
            for c in f.items:
                walk(c)
        else:
            walk(f.body)

    walk(phi)
    return [f for f in out if not f.is_zero()]


def support_of(polys) -> set:
    out = set()
    for f in polys:
        if f.is_zero() or f.deg < 1:
            continue
        out.update(poly_factor(f).factors)
    return out


def _filler_choices(field: FieldSpec, avoid: set, count: int = 2) -> list[Poly]:
    start = {2: 3, 3: 2}.get(field.p, 1)
    out = []
    deg = start
    while len(out) < count:
        for g in irreducibles(field, deg):
            if g not in avoid:
                out.append(g)
                if len(out) == count:
                    break
        deg += 1
    return out


def _positions(phi: Formula) -> tuple[dict, dict]:
    fv = sorted(free_vars(phi))
    pos = {v: i + 1 for i, v in enumerate(fv)}
    lvl = {v: 0 for v in fv}

    def walk(f, depth: int, used: int):
        if isinstance(f, Atom):
            return
        if isinstance(f, Not):
            walk(f.body, depth, used)
        elif isinstance(f, (And, Or)):
            for c in f.items:
                walk(c, depth, used)
        else:
            if f.var in pos and (pos[f.var] != used + 1 or lvl[f.var] != depth + 1):
                raise ModelError(f"variable {f.var} is bound twice at different positions; rename it")
            pos[f.var] = used + 1
            lvl[f.var] = depth + 1
            walk(f.body, depth + 1, used + 1)

    walk(phi, 0, len(fv))
    return pos, lvl


def oracle_setup(phi: Formula, cfg: KernelConfig, extra_polys=(), n: int = 1, filler: int = 0) -> OracleSetup:
    """Component structure of the n-th model in the window, with a filler choice."""
    if not cfg.field.p:
        raise ModelError("the oracle needs a prime field")
    polys = formula_polys(phi) + [f for f in extra_polys if not f.is_zero()]
    sup = support_of(polys)
    depth = quantifier_depth(phi)
    positions, levels = _positions(phi)
    comps = []
    if cfg.is_algebraic:
        for f, c in sorted(cfg.entries.items(), key=lambda kv: kv[0].sort_key()):
            comps.append(OracleComponent("free", f, c))
    else:
        for f in cfg.positive_finite():
            comps.append(OracleComponent("free", f, cfg(f)))
        for g in sorted(sup, key=Poly.sort_key):
            if cfg(g) == INF:
                step = max([poly_valuation(f, g, check=False) for f in polys if not f.is_zero()] + [1])
                comps.append(OracleComponent("divisible", g, depth * step + 1, step, depth))
        avoid = sup | set(cfg.entries)
        g = _filler_choices(cfg.field, avoid, 2)[filler]
        comps.append(OracleComponent("filler", g, 1))
    npos = max(positions.values(), default=0)
    copies = max(npos, 4) + n - 1
    return OracleSetup(cfg, comps, copies, depth, positions, levels)


@dataclass
class OracleRun:
    setup: OracleSetup
    free: list
    sem: _Sem
    evaluator: _Evaluator

    def truth(self) -> bool:
        """Truth value of a sentence."""
        idx = tuple(int(t[0]) for t in self.sem.types)
        return bool(self.sem.tensor[idx])

    def domain_sizes(self) -> list[int]:
        return [int(np.prod(self.evaluator.dom_sizes(c, self.free))) if self.free else 1 for c in range(len(self.setup.comps))]

    def truth_at(self, idx: list[int]) -> bool:
        """Truth at the assignment whose component-c domain index is idx[c]."""
        t = tuple(int(self.sem.types[c][i]) for c, i in enumerate(idx))
        return bool(self.sem.tensor[t])

    def assignment(self, idx: list[int]) -> dict:
        """Vectors of the concrete model (setup.model()) for a domain index."""
        out = {}
        K = self.setup.copies
        for v in self.free:
            parts = []
            for c, comp in enumerate(self.setup.comps):
                sizes = self.evaluator.dom_sizes(c, self.free)
                coords = np.unravel_index(idx[c], sizes)
                j = self.free.index(v)
                parts.append(self.evaluator.wlog(c, v)[coords[j]].reshape(K * comp.d))
            out[v] = np.concatenate(parts)
        return out


def fm_oracle_run(phi: Formula, cfg: KernelConfig, extra_polys=(), n: int = 1, filler: int = 0) -> OracleRun:
    setup = oracle_setup(phi, cfg, extra_polys, n, filler)
    ev = _Evaluator(setup)
    free = sorted(free_vars(phi), key=lambda v: setup.positions[v])
    sem = ev.eval(phi, free)
    if sem.scope != free:
        types = [ev._spread(c, free, sem.scope, t) for c, t in enumerate(sem.types)]
        sem = _Sem(free, types, sem.tensor)
    return OracleRun(setup, free, sem, ev)


WINDOW = (1, 2, 3)
FILLERS = (0, 1)


@dataclass
class StabilizedResult:
    verdict: bool | None  # None means Unknown
    values: dict = dc_field(default_factory=dict)  # (n, filler) -> bool
    reason: str = ""

    @property
    def unknown(self) -> bool:
        return self.verdict is None


def fm_stabilized(phi: Formula, cfg: KernelConfig, extra_polys=(), window=WINDOW, fillers=FILLERS) -> StabilizedResult:
    """Truth of a sentence across the model window; Unknown if it varies."""
    if free_vars(phi):
        raise ModelError("fm_stabilized_truth needs a sentence; use fm_oracle_run for formulas")
    values = {}
    fillers = fillers if cfg.is_transcendental else (0,)
    for n in window:
        for fi in fillers:
            try:
                values[(n, fi)] = fm_oracle_run(phi, cfg, extra_polys, n, fi).truth()
            except Unstable as e:
                return StabilizedResult(None, values, str(e))
    vs = set(values.values())
    if len(vs) == 1:
        return StabilizedResult(vs.pop(), values)
    return StabilizedResult(None, values, "truth value not constant across the window")


def fm_stabilized_truth(phi: Formula, cfg: KernelConfig, extra_polys=()) -> bool | None:
    """Stabilized truth of a sentence, or None (Unknown)."""
    return fm_stabilized(phi, cfg, extra_polys).verdict
