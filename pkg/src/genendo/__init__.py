"""Exact computation with generic endomorphisms of vector spaces under kernel constraints."""

from .polyring import FieldSpec, Poly, Factorization, poly_factor, poly_gcd_bezout, euclid_div, poly_valuation
from .kernelconfig import KernelConfig, KernelConstraint, Inconsistent, constraints_reduce
from .formula import fml_parse, fml_print
from .finmodel import FinModel, fm_build, fm_check, fm_eval
from .qe import qe_full, qe_decide_sentence, closure_cl_theta, exchange_diagnose

__all__ = [
    "FieldSpec",
    "Poly",
    "Factorization",
    "poly_factor",
    "poly_gcd_bezout",
    "euclid_div",
    "poly_valuation",
    "KernelConfig",
    "KernelConstraint",
    "Inconsistent",
    "constraints_reduce",
    "fml_parse",
    "fml_print",
    "FinModel",
    "fm_build",
    "fm_check",
    "fm_eval",
    "qe_full",
    "qe_decide_sentence",
    "closure_cl_theta",
    "exchange_diagnose",
]
