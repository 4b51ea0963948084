"""Random L_theta formulas and the QE-versus-oracle comparison."""

from __future__ import annotations

import random
from dataclasses import dataclass, field as dc_field

from .finmodel import WINDOW, ModelError, fm_eval, fm_oracle_run, fm_stabilized
from .formula import (
    Atom,
    Exists,
    Forall,
    Formula,
    Not,
    Term,
    conj,
    disj,
    fml_print,
    free_vars,
)
from .kernelconfig import KernelConfig
from .polyring import FieldSpec, Poly
from .qe import qe_full


@dataclass
class FuzzParams:
    max_coeff_degree: int = 2
    max_vars: int = 4
    max_depth: int = 3
    max_literals: int = 6
    free_var_rate: float = 0.2


def random_poly(rng: random.Random, field: FieldSpec, max_deg: int) -> Poly:
    while True:
        d = rng.randint(0, max_deg)
        f = Poly([rng.randrange(field.p) for _ in range(d + 1)], field)
        if not f.is_zero():
            return f


def random_term(rng: random.Random, field: FieldSpec, names: list, params: FuzzParams) -> Term:
    k = rng.randint(1, min(2, len(names)))
    return Term({v: random_poly(rng, field, params.max_coeff_degree) for v in rng.sample(names, k)})


def random_literal(rng: random.Random, field: FieldSpec, names: list, params: FuzzParams) -> Atom:
    return Atom(random_term(rng, field, names, params), Term(), rng.random() < 0.4)


def _random_matrix(rng, field, names, params, nlits) -> Formula:
    lits = [random_literal(rng, field, names, params) for _ in range(nlits)]
    while len(lits) > 1:
        i = rng.randrange(len(lits) - 1)
        a, b = lits[i], lits[i + 1]
        node = conj([a, b]) if rng.random() < 0.6 else disj([a, b])
        if rng.random() < 0.1:
            node = Not(node)
        lits[i : i + 2] = [node]
    return lits[0]


def random_formula(rng: random.Random, field: FieldSpec, params: FuzzParams = FuzzParams()) -> Formula:
    """A random formula of L_theta; a sentence unless a free variable is drawn."""
    nfree = 1 if rng.random() < params.free_var_rate else 0
    depth = rng.randint(1, params.max_depth)
    depth = min(depth, params.max_vars - nfree)
    free = [f"y{i}" for i in range(nfree)]
    bound = [f"x{i}" for i in range(depth)]
    budget = rng.randint(depth, params.max_literals)

    def build(level: int, scope: list, lits: int) -> Formula:
        if level == depth:
            return _random_matrix(rng, field, scope, params, max(1, lits))
        v = bound[level]
        inner_scope = scope + [v]
        # sometimes keep a literal outside the next quantifier
        side = 0
        if lits > depth - level and scope and rng.random() < 0.3:
            side = 1
        body = build(level + 1, inner_scope, lits - side)
        q = Exists(v, body) if rng.random() < 0.5 else Forall(v, body)
        if side:
            lit = random_literal(rng, field, scope, params)
            return conj([lit, q]) if rng.random() < 0.5 else disj([lit, q])
        return q

    return build(0, free, budget)


@dataclass
class FuzzCase:
    formula: str
    config: str
    qe: str
    qe_truth: object
    oracle_truth: object
    agree: bool | None  # None: oracle Unknown
    note: str = ""


@dataclass
class FuzzReport:
    cases: list = dc_field(default_factory=list)

    @property
    def compared(self) -> int:
        return sum(1 for c in self.cases if c.agree is not None)

    @property
    def agreed(self) -> int:
        return sum(1 for c in self.cases if c.agree)

    @property
    def unknown(self) -> int:
        return sum(1 for c in self.cases if c.agree is None)

    def disagreements(self) -> list:
        return [c for c in self.cases if c.agree is False]

    def summary(self) -> str:
        return f"{self.agreed}/{self.compared} agree ({self.unknown} unknown)"

    def to_json(self) -> dict:
        return {
            "agreed": self.agreed,
            "compared": self.compared,
            "unknown": self.unknown,
            "disagreements": [c.__dict__ for c in self.disagreements()],
            "unknown_cases": [{"config": c.config, "formula": c.formula, "reason": c.note} for c in self.cases if c.agree is None],
        }


def _qe_sentence_value(qf: Formula) -> bool:
    from .formula import dnf

    return any(len(c) == 0 for c in dnf(qf))


def compare_one(phi: Formula, cfg: KernelConfig, samples: int = 16, rng: random.Random | None = None, window=WINDOW) -> FuzzCase:
    """QE against the stabilized oracle on one formula."""
    rng = rng or random.Random(0)
    res = qe_full(phi, cfg)
    extra = res.polys()
    fv = free_vars(phi)
    src = fml_print(phi)
    if not fv:
        qv = _qe_sentence_value(res.formula)
        try:
            st = fm_stabilized(phi, cfg, extra, window=window)
        except ModelError as e:
            return FuzzCase(src, "", str(res), qv, None, None, str(e))
        if st.verdict is None:
            return FuzzCase(src, "", str(res), qv, None, None, st.reason)
        return FuzzCase(src, "", str(res), qv, st.verdict, qv == st.verdict)
    # formulas with parameters: compare pointwise on sampled orbit representatives
    verdicts = []
    for n in window:
        try:
            run = fm_oracle_run(phi, cfg, extra, n, 0)
        except ModelError as e:
            return FuzzCase(src, "", str(res), None, None, None, str(e))
        model = run.setup.model()
        sizes = run.domain_sizes()
        for _ in range(samples):
            idx = [rng.randrange(s) for s in sizes]
            want = run.truth_at(idx)
            got = fm_eval(res.formula, model, run.assignment(idx))
            verdicts.append(want == got)
    ok = all(verdicts)
    return FuzzCase(src, "", str(res), None, None, ok, "" if ok else "pointwise mismatch")


def fuzz_corpus(cfgs: dict, count: int, seed: int = 0, params: FuzzParams = FuzzParams()) -> list:
    """The seeded list of (config name, formula) pairs."""
    rng = random.Random(seed)
    out = []
    for name, cfg in cfgs.items():
        for _ in range(count):
            out.append((name, random_formula(rng, cfg.field, params)))
    return out


def _run_case(job) -> FuzzCase:
    name, cfg, phi, case_seed, window = job
    case = compare_one(phi, cfg, rng=random.Random(case_seed), window=window)
    case.config = name
    return case


def run_fuzz(
    cfgs: dict,
    count: int,
    seed: int = 0,
    params: FuzzParams = FuzzParams(),
    progress=None,
    workers: int = 1,
    window=WINDOW,
) -> FuzzReport:
    """count random formulas per configuration, each checked against the oracle.

    Results come back in corpus order whatever the number of workers.
    """
    corpus = fuzz_corpus(cfgs, count, seed, params)
    jobs = [(name, cfgs[name], phi, (seed << 20) + i, tuple(window)) for i, (name, phi) in enumerate(corpus)]
    rep = FuzzReport()
    if workers > 1:
        import multiprocessing

        with multiprocessing.get_context("fork").Pool(workers) as pool:
            for case in pool.imap(_run_case, jobs, chunksize=4):
                rep.cases.append(case)
                if progress:
                    progress(case)
        return rep
    for job in jobs:
        case = _run_case(job)
        rep.cases.append(case)
        if progress:
            progress(case)
    return rep


def standard_configs(field: FieldSpec | None = None) -> dict:
    """The five configurations used by the acceptance fuzz."""
    field = field or FieldSpec.prime(2)
    x = Poly.parse("X", field)
    x1 = Poly.parse("X+1", field)
    return {
        "C_0": KernelConfig.c_zero(field),
        "C_inf": KernelConfig.c_infinity(field),
        "MiPo X^2+X+1": KernelConfig.from_mipo(Poly.parse("X^2+X+1", field)),
        "MiPo X^2": KernelConfig.from_mipo(Poly.parse("X^2", field)),
        "C_mix": KernelConfig.transcendental(field, {x: 1, x1: 0}),
    }
