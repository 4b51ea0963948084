import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from genendo import fpmat
from genendo.finmodel import fm_build
from genendo.kernelconfig import KernelConfig
from genendo.rcring import (
    Inv,
    ProjIm,
    ProjKer,
    RcError,
    RcSyntaxError,
    Rho,
    rc_arith,
    rc_eq,
    rc_eval_matrix,
    rc_from_generator,
    rc_inverse,
    rc_inv,
    rc_is_field,
    rc_is_unit,
    rc_kernel_descriptor,
    rc_one,
    rc_parse,
    rc_print,
    rc_projim,
    rc_projker,
    rc_rho,
    rc_zero,
)

from checks import check_homomorphism, check_isomorphism, check_ring_axioms, models_for, naive_poly_at, random_rc
from helpers import F2, P, c_mix, standard_cfgs

CFGS = standard_cfgs()
ALG = KernelConfig.from_mipo(P("X^2+X+1"))
X2 = KernelConfig.from_mipo(P("X^2"))
C0 = KernelConfig.c_zero(F2)
CINF = KernelConfig.c_infinity(F2)
MIX = c_mix()


def test_generator_examples():
    assert rc_from_generator(ALG, Rho(P("X^2"))).num == P("X+1")
    assert (rc_inv(C0, P("X")) * rc_rho(C0, P("X"))).is_one()
    a = rc_arith(rc_rho(MIX, P("X")), rc_from_generator(MIX, Inv(P("X"))), "mul")
    assert a.num == P("1") and a.den == P("1") and a.corr == {P("X"): P("0")}
    assert a == rc_from_generator(MIX, ProjIm([P("X")]))


def test_generator_example_cross_checked_on_models():
    a = rc_rho(MIX, P("X")) * rc_inv(MIX, P("X"))
    for m in models_for(MIX):
        assert (rc_eval_matrix(a, m) == rc_eval_matrix(rc_projim(MIX, [P("X")]), m)).all()


def test_arith_examples():
    a = rc_rho(MIX, P("X^2+1")) * rc_inv(MIX, P("X+1"))
    assert rc_arith(a, rc_zero(MIX), "add") == a
    sq = rc_rho(ALG, P("X")) * rc_rho(ALG, P("X"))
    assert sq.num == P("X+1")
    c = fpmat.companion(P("X^2+X+1"))
    assert ((c @ c) % 2 == naive_poly_at(P("X+1"), c)).all()
    assert rc_rho(MIX, P("X")) * rc_projim(MIX, [P("X")]) == rc_rho(MIX, P("X"))


def test_equality_examples():
    for cfg in (MIX, X2):
        f = P("X")
        assert rc_eq(rc_projim(cfg, [f]) + rc_projker(cfg, [f]), rc_one(cfg))
    assert rc_eq(rc_rho(C0, P("X")) * rc_inv(C0, P("X")), rc_one(C0))
    assert not rc_eq(rc_rho(MIX, P("X")) * rc_inv(MIX, P("X")), rc_one(MIX))


def test_field_and_unit_examples():
    assert rc_is_field(C0)
    assert not rc_is_field(X2)
    assert rc_is_field(ALG)
    assert not rc_is_field(CINF) and not rc_is_field(MIX)
    t = rc_rho(ALG, P("X"))
    assert rc_is_unit(t)
    assert (t * rc_inverse(t)).is_one()
    assert not rc_is_unit(rc_rho(X2, P("X")))


def test_kernel_descriptor_examples():
    d = rc_kernel_descriptor(rc_one(MIX))
    assert d.injective_on_ec and all(s == 0 for s in d.local_exponents.values())
    d = rc_kernel_descriptor(rc_rho(X2, P("X")))
    assert d.local_exponents == {P("X"): 1} and d.kernel_infinite_on_ec
    d = rc_kernel_descriptor(rc_rho(CINF, P("X")))
    assert d.infinite_type == [P("X")]


def test_kernel_grows_with_dimension():
    # theta in MiPo X^2: the kernel of X grows with the number of blocks
    dims = []
    for k in (1, 2, 3):
        m = fm_build(X2, [(P("X"), 2, k)])
        mat = rc_eval_matrix(rc_rho(X2, P("X")), m)
        dims.append(m.dim - fpmat.rank(mat, 2))
    assert dims == [1, 2, 3]


def test_eval_examples():
    for cfg in CFGS.values():
        for m in models_for(cfg):
            assert (rc_eval_matrix(rc_one(cfg), m) == np.eye(m.dim, dtype=np.int64)).all()
    m = fm_build(MIX, [(P("X"), 1, 2), (P("X^2+X+1"), 2)])
    pim = rc_eval_matrix(rc_projim(MIX, [P("X")]), m)
    assert ((pim @ pim) % 2 == pim).all()
    img = fpmat.colspace(m.poly_matrix(P("X")), 2)
    assert fpmat.rank(pim, 2) == img.shape[1]
    assert fpmat.rank(np.concatenate([img, pim], axis=1), 2) == img.shape[1]
    eta = P("X^3+X")  # X (C = 1) times (X+1)^2 (C = 0)
    a = rc_inv(MIX, eta) * rc_rho(MIX, eta)
    assert (rc_eval_matrix(a, m) == pim).all()


def test_generator_preconditions():
    with pytest.raises(RcError):
        rc_inv(CINF, P("X"))
    with pytest.raises(RcError):
        rc_projim(CINF, [P("X")])
    with pytest.raises(RcError):
        rc_projim(MIX, [P("X+1")])
    with pytest.raises(RcError):
        rc_inv(MIX, P("0"))


def test_parse_print():
    rng = random.Random(4)
    for cfg in CFGS.values():
        for _ in range(100):
            a = random_rc(rng, cfg)
            s = rc_print(a)
            assert rc_parse(s, cfg) == a
            assert rc_print(rc_parse(s, cfg)) == s
    assert rc_parse("poly(X^2+1) + projim{X}*inv(X+1)", MIX) == rc_rho(MIX, P("X^2+1")) + rc_projim(MIX, [P("X")]) * rc_inv(MIX, P("X+1"))
    with pytest.raises(RcSyntaxError):
        rc_parse("poly(X", MIX)


@pytest.mark.parametrize("name", list(CFGS))
def test_ring_axioms_small(name):
    r = check_ring_axioms(CFGS[name], 150, seed=1)
    assert r["ok"], r["detail"]


@pytest.mark.parametrize("name", list(CFGS))
def test_homomorphism_small(name):
    r = check_homomorphism(CFGS[name], 15, seed=1)
    assert r["ok"], r["detail"]


@pytest.mark.parametrize("kind", ["C_inf", "C_0", "X^2+X+1", "X^2", "X^3+X^2"])
def test_isomorphisms_small(kind):
    r = check_isomorphism(kind, 40, seed=1)
    assert r["ok"], r["detail"]


@given(st.integers(0, 2**31), st.sampled_from(list(CFGS)))
def test_unit_inverse_property(seed, name):
    cfg = CFGS[name]
    a = random_rc(random.Random(seed), cfg)
    inv = rc_inverse(a)
    assert rc_is_unit(a) == (inv is not None)
    if inv is not None:
        assert (a * inv).is_one()


@given(st.integers(0, 2**31), st.sampled_from(list(CFGS)))
def test_projector_idempotent(seed, name):
    cfg = CFGS[name]
    for f in cfg.positive_finite():
        e = rc_projim(cfg, [f])
        assert e * e == e
        assert e * rc_projker(cfg, [f]) == rc_zero(cfg)
