"""Fields, configurations, strategies and sympy bridges shared by the tests."""

import random
from fractions import Fraction

import sympy
from hypothesis import strategies as st

from genendo.kernelconfig import KernelConfig
from genendo.polyring import FieldSpec, Poly

F2 = FieldSpec.prime(2)
F3 = FieldSpec.prime(3)
F5 = FieldSpec.prime(5)
Q = FieldSpec.rationals()


def P(text, field=F2):
    return Poly.parse(text, field)


def standard_cfgs(field=F2):
    return {
        "C_0": KernelConfig.c_zero(field),
        "C_inf": KernelConfig.c_infinity(field),
        "MiPo X^2+X+1": KernelConfig.from_mipo(P("X^2+X+1", field)),
        "MiPo X^2": KernelConfig.from_mipo(P("X^2", field)),
        "C_mix": KernelConfig.transcendental(field, {P("X", field): 1, P("X+1", field): 0}),
    }


def c_mix(field=F2):
    return KernelConfig.transcendental(field, {P("X", field): 1, P("X+1", field): 0})


@st.composite
def polys(draw, field=F2, max_deg=6, nonzero=False):
    n = draw(st.integers(0, max_deg))
    if field.p:
        cs = draw(st.lists(st.integers(0, field.p - 1), min_size=n + 1, max_size=n + 1))
    else:
        cs = draw(
            st.lists(
                st.builds(Fraction, st.integers(-5, 5), st.integers(1, 4)),
                min_size=n + 1,
                max_size=n + 1,
            )
        )
    f = Poly(cs, field)
    if nonzero and f.is_zero():
        f = Poly.one(field)
    return f


def random_poly(rng: random.Random, field, max_deg, nonzero=True):
    while True:
        f = Poly([rng.randrange(field.p) for _ in range(rng.randint(0, max_deg) + 1)], field)
        if not (nonzero and f.is_zero()):
            return f


_X = sympy.symbols("X")


def to_sym(f: Poly):
    """The same polynomial as a sympy Poly (an independent arithmetic)."""
    cs = list(reversed(f.coeffs)) or [0]
    if f.field.p:
        return sympy.Poly([int(c) for c in cs], _X, modulus=f.field.p)
    return sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in map(Fraction, cs)], _X, domain="QQ")


def from_sym(g, field) -> Poly:
    cs = list(reversed(g.all_coeffs()))
    if field.p:
        return Poly([int(c) % field.p for c in cs], field)
    return Poly([Fraction(int(sympy.numer(c)), int(sympy.denom(c))) for c in cs], field)
