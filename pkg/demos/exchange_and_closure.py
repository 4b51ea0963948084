"""Closures in a small model and the exchange verdict for a handful of configurations.

    python demos/exchange_and_closure.py
"""

import numpy as np

from genendo import FieldSpec, KernelConfig, Poly, closure_cl_theta, exchange_diagnose, fm_build
from genendo.rcring import rc_is_field

F2 = FieldSpec.prime(2)


def P(s):
    return Poly.parse(s, F2)


def main():
    cfg = KernelConfig.from_mipo(P("X^2"))
    m = fm_build(cfg, [(P("X"), 2, 2)])
    for g in ([1, 0, 0, 0], [0, 1, 0, 0], [1, 0, 1, 0]):
        cl = closure_cl_theta([np.array(g)], m)
        print(f"closure of {g} in K[X]/(X^2)^2 has dimension {cl.dim}")

    for text in ("X^2+X+1", "X^2", "X^3+X^2", "X"):
        c = KernelConfig.from_mipo(P(text))
        w = exchange_diagnose(c)
        extra = "" if w.has_exchange else f"  witness u={w.u.tolist()} v={w.v.tolist()}"
        print(f"MiPo {text:8s} field={rc_is_field(c)!s:5s} exchange={w.has_exchange}{extra}")
    for name, c in (("C_0", KernelConfig.c_zero(F2)), ("C_inf", KernelConfig.c_infinity(F2))):
        print(f"{name:13s} field={rc_is_field(c)!s:5s} exchange={exchange_diagnose(c).has_exchange}")


if __name__ == "__main__":
    main()
