import random

from genendo.formula import atoms, fml_print, free_vars, quantifier_depth, all_vars
from genendo.fuzz import FuzzParams, compare_one, fuzz_corpus, random_formula, run_fuzz, standard_configs

from helpers import F2


def test_formula_shape_limits():
    rng = random.Random(1)
    params = FuzzParams()
    for _ in range(500):
        phi = random_formula(rng, F2, params)
        assert quantifier_depth(phi) <= params.max_depth
        assert len(all_vars(phi)) <= params.max_vars
        assert sum(1 for _ in atoms(phi)) <= params.max_literals
        assert len(free_vars(phi)) <= 1


def test_corpus_deterministic():
    cfgs = standard_configs()
    a = [(n, fml_print(p)) for n, p in fuzz_corpus(cfgs, 20, seed=7)]
    b = [(n, fml_print(p)) for n, p in fuzz_corpus(cfgs, 20, seed=7)]
    assert a == b
    assert a != [(n, fml_print(p)) for n, p in fuzz_corpus(cfgs, 20, seed=8)]


def test_run_fuzz_small_and_order_independent():
    cfgs = {k: v for k, v in standard_configs().items() if k in ("C_0", "MiPo X^2")}
    r1 = run_fuzz(cfgs, 10, seed=2)
    r2 = run_fuzz(cfgs, 10, seed=2, workers=2)
    assert r1.to_json() == r2.to_json()
    assert r1.compared + r1.unknown == 20
    assert not r1.disagreements()


def test_compare_one_disequation_heavy():
    from genendo.formula import fml_parse

    cfgs = standard_configs()
    for text in ("E x. (x != 0 & T(x) != y & x + T(x) != y)", "A x. (T(x) != 0 | x = 0)"):
        for cfg in cfgs.values():
            assert compare_one(fml_parse(text, F2), cfg).agree is not False
