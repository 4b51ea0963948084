import random

import numpy as np
import pytest

from genendo import fpmat
from genendo.finmodel import FinModel, fm_check
from genendo.kernelconfig import (
    INFINITY,
    ZERO,
    Inconsistent,
    KernelConfig,
    KernelConfigError,
    KernelConstraint,
    constraints_reduce,
    defining_constraints,
    describe,
    kc_classify,
    kc_mipo,
    kc_validate,
)
from genendo.polyring import INF, Poly

from checks import check_inconsistent, check_model_class, check_round_trip, random_config, satisfies_constraints
from helpers import F2, F3, P


def test_classify_examples():
    assert kc_classify(KernelConfig.c_zero(F2), P("X")) == 0
    assert kc_classify(KernelConfig.c_infinity(F2), P("X+1")) == INF
    assert kc_classify(KernelConfig.from_mipo(P("X^2+X+1")), P("X")) == 0
    with pytest.raises(KernelConfigError):
        kc_classify(KernelConfig.c_zero(F2), P("X^2"))


def test_validate_examples():
    ok = KernelConfig(F2, {P("X^2+X+1"): 1}, ZERO, 2)
    assert kc_validate(ok) == [] and ok.is_algebraic
    bad = KernelConfig(F2, {P("X"): 1}, ZERO, 3)
    assert any("degree equation" in d for d in kc_validate(bad))
    tr = KernelConfig(F2, {P("X"): 2}, INFINITY, INF)
    assert kc_validate(tr) == [] and tr.is_transcendental
    assert kc_validate(KernelConfig(F2, {P("X^2"): 1}, INFINITY, INF))


def test_mipo_examples():
    assert kc_mipo(KernelConfig(F2, {P("X"): 2}, ZERO, 2)) == P("X^2")
    assert kc_mipo(KernelConfig(F2, {P("X"): 1, P("X+1"): 1}, ZERO, 2)) == P("X^2+X")
    triv = KernelConfig(F3, {P("X-2", F3): 1}, ZERO, 1)
    assert kc_mipo(triv) == P("X+1", F3)
    assert triv.is_trivial and "trivial" in describe(triv)
    with pytest.raises(KernelConfigError):
        kc_mipo(KernelConfig.c_infinity(F2))


def test_reduce_examples():
    c = constraints_reduce([KernelConstraint([[P("X^2")]], [[P("X^3")]])])
    assert c.is_transcendental and c(P("X")) == 2 and c.default == INFINITY and c(P("X+1")) == INF
    c = constraints_reduce([KernelConstraint([[P("0")]], [[P("X^2+X+1")]])])
    assert c.is_algebraic and kc_mipo(c) == P("X^2+X+1")
    assert check_inconsistent()["ok"]
    assert constraints_reduce([], F2) == KernelConfig.c_infinity(F2)
    with pytest.raises(KernelConfigError):
        constraints_reduce([])


def _jordan_models(max_dim):
    """Nilpotent and mixed block models over F_2 for the X-chain oracle."""
    out = []
    for parts in ([1], [2], [3], [1, 1], [2, 1], [3, 1], [2, 2], [3, 2], [4]):
        blocks = [fpmat.companion(P("X") ** j) for j in parts]
        for extra in ([], [fpmat.companion(P("X+1"))], [fpmat.companion(P("X^2+X+1"))]):
            theta = fpmat.block_diag(blocks + extra)
            if theta.shape[0] <= max_dim:
                out.append(theta)
    return out


def test_transcendental_reduction_matches_chain_oracle():
    # the class of theta with Ker(X^2) = Ker(X^3) is the class with C(X) = 2
    cs = [KernelConstraint([[P("X^2")]], [[P("X^3")]])]
    cfg = constraints_reduce(cs)
    for theta in _jordan_models(7):
        lit = satisfies_constraints(theta, cs, 2)
        chain = fm_check(FinModel(F2, theta, cfg))["per_factor"]["X"]["ok"]
        assert lit == chain


def test_alpha_divisibility():
    rng = random.Random(5)
    for _ in range(50):
        alphas = [Poly([rng.randrange(2) for _ in range(rng.randint(1, 5))] + [1], F2) for _ in range(rng.randint(1, 3))]
        cs = [KernelConstraint([[P("0")]], [[a]]) for a in alphas]
        res = constraints_reduce(cs)
        if isinstance(res, Inconsistent):
            continue
        for a in alphas:
            assert kc_mipo(res).divides(a)


def test_round_trip_small():
    r = check_round_trip(60, seed=1)
    assert r["ok"], r["detail"]


def test_model_class_small():
    r = check_model_class(60, seed=2, max_dim=6)
    assert r["ok"], r["detail"]


def test_json_round_trip():
    rng = random.Random(9)
    for _ in range(50):
        cfg = random_config(rng)
        assert KernelConfig.from_json(cfg.to_json()) == cfg
    c = KernelConstraint([[P("X^2"), P("X")]], [[P("X^3")], [P("X+1")]])
    assert KernelConstraint.from_json(c.to_json(), F2) == c


def test_json_format():
    d = {"field": {"kind": "Fp", "p": 2}, "default": "infinity", "entries": [{"f": "X^2+X+1", "c": 1}], "degree": "inf"}
    cfg = KernelConfig.from_json(d)
    assert cfg(P("X^2+X+1")) == 1 and cfg(P("X")) == INF
    with pytest.raises(KernelConfigError):
        KernelConfig.from_json({"field": {"kind": "Fp", "p": 2}, "default": "zero", "entries": [{"f": "X", "c": 1}], "degree": 3})


def test_bad_constraint():
    with pytest.raises(KernelConfigError):
        KernelConstraint([], [[P("X")]])
